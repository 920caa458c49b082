#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qin/linalg.hpp"
#include "qin/model.hpp"

namespace qin {

using ItemId = std::uint32_t;

/// Frozen pretrained item embeddings. Never receives gradients.
struct EmbeddingStore {
  Matrix data;  // count x dim

  std::size_t count() const { return data.rows(); }
  std::size_t dim() const { return data.cols(); }
};

struct Sample {
  ItemId target_id = 0;
  std::vector<ItemId> seq_ids;  // real history entries only, oldest first
  int label = 0;

  std::size_t seq_len() const { return seq_ids.size(); }
  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Samples padded to a common length S with a left-aligned 0/1 mask.
struct Batch {
  std::vector<Sample> samples;
  std::size_t seq_len = 0;       // S
  std::vector<ItemId> ids;       // N x S, padding slots hold 0
  std::vector<std::uint8_t> mask;  // N x S

  std::size_t size() const { return samples.size(); }
  std::span<const std::uint8_t> mask_row(std::size_t i) const {
    return {mask.data() + i * seq_len, seq_len};
  }
};

Batch make_batch(std::vector<Sample> samples, std::size_t seq_len);

/// Throws ConfigError when store and ID table widths do not add up to d_t.
void check_embedding_dims(const EmbeddingStore& store, const Matrix& id_table,
                          const HyperParams& hp);

/// concat(frozen row, trainable row).
std::vector<double> lookup_target(const EmbeddingStore& store, const Matrix& id_table, ItemId id);

/// S x d_b rows for one sample; padded rows are zero.
Matrix lookup_sequence(const EmbeddingStore& store, const Matrix& id_table,
                       std::span<const ItemId> seq_ids, std::size_t seq_len);

struct SequenceEmbeddings {
  std::vector<Matrix> rows;  // one S x d_b matrix per sample
  std::vector<std::uint8_t> mask;
};

SequenceEmbeddings lookup_sequence(const EmbeddingStore& store, const Matrix& id_table,
                                   const Batch& batch);

/// Scatter-adds the trainable part of `upstream` (frozen columns are
/// dropped) into the ID-table gradient row of `id`.
void embedding_grad_accumulate(Matrix& id_table_grad, const EmbeddingStore& store, ItemId id,
                               std::span<const double> upstream);

/// Backward of lookup_sequence for one sample: upstream is S x d_b, only
/// the first seq_ids.size() rows are real.
void embedding_grad_accumulate(Matrix& id_table_grad, const EmbeddingStore& store,
                               std::span<const ItemId> seq_ids, const Matrix& upstream);

/// "QINEMB1" file: magic, u32 count, u32 dim, count*dim f32 row-major (LE).
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore load_embeddings(const std::filesystem::path& path);

}  // namespace qin
