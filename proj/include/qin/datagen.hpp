#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qin/embedding.hpp"
#include "qin/linalg.hpp"

namespace qin {

/// Synthetic click model. Items e_i ~ N(0, I)/sqrt(emb_dim), users
/// z_u ~ N(0, I)/sqrt(emb_dim). A history is drawn (with replacement) from
/// softmax(z_u . e_i / temperature); the target comes from the same
/// distribution with probability target_from_interest, otherwise uniformly.
/// With u the mean history embedding and q = similarity_scale * (u . e_t):
///   logit = bias + linear_strength * q + quad_strength * q^2 + N(0, noise_std^2)
struct GenConfig {
  std::size_t n_items = 1000;
  std::size_t n_users = 500;
  std::size_t n_samples = 50000;
  std::size_t emb_dim = 4;
  /// History lengths are uniform in [min_seq_len, max_seq_len]; unset means
  /// every history has exactly max_seq_len entries.
  std::optional<std::size_t> min_seq_len;
  std::size_t max_seq_len = 20;
  double quad_strength = 4.0;
  double linear_strength = 0.0;
  double noise_std = 0.1;
  double similarity_scale = 3.0;
  double bias = -3.0;
  double temperature = 0.1;
  double target_from_interest = 0.5;
  double train_fraction = 0.8;
  std::uint64_t seed = 7;

  std::size_t min_len() const { return min_seq_len.value_or(max_seq_len); }
  void validate() const;
};

struct GeneratedData {
  EmbeddingStore store;
  std::vector<Sample> train;
  std::vector<Sample> valid;
  std::vector<double> train_truth;  // ground-truth click probabilities
  std::vector<double> valid_truth;
};

GeneratedData generate(const GenConfig& cfg);

struct Manifest {
  std::size_t n_samples = 0;
  std::size_t positives = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// `n_samples=<k> positives=<k> seed=<k>`
std::string format_manifest(const Manifest& m);
Manifest manifest_of(std::span<const Sample> samples, std::uint64_t seed);

struct DatasetPaths {
  std::filesystem::path embeddings;
  std::filesystem::path train;
  std::filesystem::path valid;
  std::filesystem::path truth;

  static DatasetPaths in(const std::filesystem::path& dir);
};

/// Writes embeddings.qinemb, train.jsonl, valid.jsonl and truth.txt into `dir`.
DatasetPaths write_generated(const GeneratedData& data, std::uint64_t seed,
                             const std::filesystem::path& dir);

/// `{"target": <id>, "seq": [<ids>], "label": 0|1}`
std::string format_record(const Sample& s);
void write_dataset(std::span<const Sample> samples, std::uint64_t seed,
                   const std::filesystem::path& path);

struct Dataset {
  std::vector<Sample> samples;
  std::optional<Manifest> manifest;
};

/// Parses a record file, validating ids against the store and history
/// length against max_seq_len. `#` lines are comments; a leading
/// `# n_samples=...` line is read as the manifest.
Dataset load_dataset(const std::filesystem::path& path, const EmbeddingStore& store,
                     std::size_t max_seq_len);

struct Truth {
  std::vector<double> train;
  std::vector<double> valid;
};

/// truth.txt: one `<split>\t<probability>` line per sample, in file order.
void write_truth(const GeneratedData& data, const std::filesystem::path& path);
Truth load_truth(const std::filesystem::path& path);

/// Seeded shuffle, then consecutive batches; the final partial batch is kept.
std::vector<Batch> make_batches(std::span<const Sample> samples, std::size_t batch_size,
                                std::size_t seq_len, Rng& rng);

/// q = u . e_t on the frozen embeddings (u = mean history row).
double interest_similarity(const EmbeddingStore& store, const Sample& s);

/// Fits logistic regression on the single feature u . e_t (Newton's method
/// with intercept) over `train` and returns its AUC on `valid`.
double linear_baseline_auc(const EmbeddingStore& store, std::span<const Sample> train,
                           std::span<const Sample> valid);

/// AUC of the ground-truth probabilities.
double bayes_auc(std::span<const double> truth, std::span<const Sample> samples);

}  // namespace qin
