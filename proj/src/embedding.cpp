#include "qin/embedding.hpp"

#include <fstream>

#include "binary_io.hpp"

namespace qin {

namespace {

constexpr const char* kEmbMagic = "QINEMB1";

void check_id(const EmbeddingStore& store, const Matrix& id_table, ItemId id) {
  if (id >= store.count() || id >= id_table.rows()) {
    throw IdOutOfRangeError("item id " + std::to_string(id) + " out of range (vocab " +
                            std::to_string(store.count()) + ")");
  }
}

void write_row(const EmbeddingStore& store, const Matrix& id_table, ItemId id,
               std::span<double> out) {
  check_id(store, id_table, id);
  const auto frozen = store.data.row(id);
  const auto trainable = id_table.row(id);
  std::copy(frozen.begin(), frozen.end(), out.begin());
  std::copy(trainable.begin(), trainable.end(), out.begin() + static_cast<std::ptrdiff_t>(frozen.size()));
}

}  // namespace

Batch make_batch(std::vector<Sample> samples, std::size_t seq_len) {
  Batch b;
  b.seq_len = seq_len;
  b.ids.assign(samples.size() * seq_len, 0);
  b.mask.assign(samples.size() * seq_len, 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.seq_len() > seq_len) {
      throw ShapeError("sample history length " + std::to_string(s.seq_len()) +
                       " exceeds S=" + std::to_string(seq_len));
    }
    for (std::size_t j = 0; j < s.seq_len(); ++j) {
      b.ids[i * seq_len + j] = s.seq_ids[j];
      b.mask[i * seq_len + j] = 1;
    }
  }
  b.samples = std::move(samples);
  return b;
}

void check_embedding_dims(const EmbeddingStore& store, const Matrix& id_table,
                          const HyperParams& hp) {
  if (store.dim() + id_table.cols() != hp.d_t) {
    throw ConfigError("embedding width mismatch: frozen " + std::to_string(store.dim()) +
                      " + trainable " + std::to_string(id_table.cols()) + " != d_t " +
                      std::to_string(hp.d_t));
  }
  if (store.count() != id_table.rows()) {
    throw ConfigError("frozen store has " + std::to_string(store.count()) +
                      " items but ID table has " + std::to_string(id_table.rows()));
  }
}

std::vector<double> lookup_target(const EmbeddingStore& store, const Matrix& id_table, ItemId id) {
  std::vector<double> out(store.dim() + id_table.cols());
  write_row(store, id_table, id, out);
  return out;
}

Matrix lookup_sequence(const EmbeddingStore& store, const Matrix& id_table,
                       std::span<const ItemId> seq_ids, std::size_t seq_len) {
  if (seq_ids.size() > seq_len) throw ShapeError("history longer than S");
  Matrix out(seq_len, store.dim() + id_table.cols());
  for (std::size_t s = 0; s < seq_ids.size(); ++s) write_row(store, id_table, seq_ids[s], out.row(s));
  return out;
}

SequenceEmbeddings lookup_sequence(const EmbeddingStore& store, const Matrix& id_table,
                                   const Batch& batch) {
  SequenceEmbeddings out;
  out.rows.reserve(batch.size());
  for (const auto& s : batch.samples) {
    out.rows.push_back(lookup_sequence(store, id_table, s.seq_ids, batch.seq_len));
  }
  out.mask = batch.mask;
  return out;
}

void embedding_grad_accumulate(Matrix& id_table_grad, const EmbeddingStore& store, ItemId id,
                               std::span<const double> upstream) {
  const std::size_t frozen = store.dim();
  if (upstream.size() != frozen + id_table_grad.cols()) {
    throw ShapeError("embedding upstream width mismatch");
  }
  if (id >= id_table_grad.rows()) throw IdOutOfRangeError("gradient row out of range");
  auto row = id_table_grad.row(id);
  for (std::size_t j = 0; j < row.size(); ++j) row[j] += upstream[frozen + j];
}

void embedding_grad_accumulate(Matrix& id_table_grad, const EmbeddingStore& store,
                               std::span<const ItemId> seq_ids, const Matrix& upstream) {
  for (std::size_t s = 0; s < seq_ids.size(); ++s) {
    embedding_grad_accumulate(id_table_grad, store, seq_ids[s], upstream.row(s));
  }
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open embedding file for writing: " + path.string());
  os.write(kEmbMagic, 7);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(store.count()));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(store.dim()));
  for (double v : store.data.flat()) detail::write_f32(os, static_cast<float>(v));
  if (!os) throw IoError("failed writing embedding file: " + path.string());
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open embedding file: " + path.string());
  detail::expect_magic(is, kEmbMagic, path.string());
  const auto count = detail::read_le<std::uint32_t>(is, "embedding count");
  const auto dim = detail::read_le<std::uint32_t>(is, "embedding dim");
  const std::uint64_t n = std::uint64_t{count} * dim;
  // Compare against the remaining byte count before allocating.
  const auto here = is.tellg();
  is.seekg(0, std::ios::end);
  const auto remaining = static_cast<std::uint64_t>(is.tellg() - here);
  is.seekg(here);
  if (remaining < n * 4) {
    throw TruncatedFileError(path.string() + ": expected " + std::to_string(n) +
                             " floats, file too short");
  }
  std::vector<double> data(n);
  for (auto& v : data) v = static_cast<double>(detail::read_f32(is, "embedding data"));
  EmbeddingStore store{Matrix(count, dim, std::move(data))};
  if (!all_finite(store.data.flat())) throw FormatError(path.string() + ": non-finite embedding");
  return store;
}

}  // namespace qin
