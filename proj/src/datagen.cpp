#include "qin/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "qin/metrics.hpp"

namespace qin {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t draw_from_cdf(std::span<const double> cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::optional<Manifest> parse_manifest(const std::string& line) {
  Manifest m;
  std::istringstream is(line.substr(1));
  std::string tok;
  int found = 0;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const auto key = tok.substr(0, eq);
    const auto val = tok.substr(eq + 1);
    try {
      if (key == "n_samples") m.n_samples = std::stoull(val), ++found;
      if (key == "positives") m.positives = std::stoull(val), ++found;
      if (key == "seed") m.seed = std::stoull(val), ++found;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (found != 3) return std::nullopt;
  return m;
}

}  // namespace

void GenConfig::validate() const {
  if (n_items < 1 || n_users < 1 || emb_dim < 1) {
    throw ConfigError("n_items, n_users and emb_dim must be >= 1");
  }
  if (max_seq_len < 1 || min_len() > max_seq_len) {
    throw ConfigError("need 0 <= min_seq_len <= max_seq_len and max_seq_len >= 1");
  }
  if (n_items < max_seq_len) throw ConfigError("n_items must be >= max_seq_len");
  for (double v : {quad_strength, linear_strength, noise_std, similarity_scale, bias}) {
    if (!std::isfinite(v)) throw ConfigError("generator strengths must be finite");
  }
  if (noise_std < 0) throw ConfigError("noise_std must be >= 0");
  if (!(temperature > 0)) throw ConfigError("temperature must be > 0");
  if (!(target_from_interest >= 0 && target_from_interest <= 1)) {
    throw ConfigError("target_from_interest must lie in [0, 1]");
  }
  if (!(train_fraction > 0 && train_fraction < 1)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
}

GeneratedData generate(const GenConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg.emb_dim));

  GeneratedData out;
  out.store.data = Matrix(cfg.n_items, cfg.emb_dim);
  // Rounded through f32 so the ground truth uses exactly what the
  // embedding file stores.
  for (auto& v : out.store.data.flat()) {
    v = static_cast<double>(static_cast<float>(rng.normal() * inv_sqrt_d));
  }
  Matrix users(cfg.n_users, cfg.emb_dim);
  for (auto& v : users.flat()) v = rng.normal() * inv_sqrt_d;

  // Per-user cumulative interest distribution over items.
  Matrix cdf(cfg.n_users, cfg.n_items);
  std::vector<double> logits(cfg.n_items);
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    double max_logit = -INFINITY;
    for (std::size_t i = 0; i < cfg.n_items; ++i) {
      logits[i] = dot(users.row(u), out.store.data.row(i)) / cfg.temperature;
      max_logit = std::max(max_logit, logits[i]);
    }
    double acc = 0.0;
    auto row = cdf.row(u);
    for (std::size_t i = 0; i < cfg.n_items; ++i) {
      acc += std::exp(logits[i] - max_logit);
      row[i] = acc;
    }
  }

  const auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(cfg.n_samples) * cfg.train_fraction));
  std::vector<double> u_vec(cfg.emb_dim);
  for (std::size_t n = 0; n < cfg.n_samples; ++n) {
    const auto user = rng.below(cfg.n_users);
    const auto user_cdf = cdf.row(user);
    const std::size_t len =
        cfg.min_len() + rng.below(cfg.max_seq_len - cfg.min_len() + 1);
    Sample s;
    s.seq_ids.resize(len);
    for (auto& id : s.seq_ids) id = static_cast<ItemId>(draw_from_cdf(user_cdf, rng.uniform()));
    s.target_id = rng.uniform() < cfg.target_from_interest
                      ? static_cast<ItemId>(draw_from_cdf(user_cdf, rng.uniform()))
                      : static_cast<ItemId>(rng.below(cfg.n_items));

    const double q = cfg.similarity_scale * interest_similarity(out.store, s);
    const double logit = cfg.bias + cfg.linear_strength * q + cfg.quad_strength * q * q +
                         rng.normal(0.0, cfg.noise_std);
    const double prob = sigmoid(logit);
    s.label = rng.uniform() < prob ? 1 : 0;

    if (n < n_train) {
      out.train.push_back(std::move(s));
      out.train_truth.push_back(prob);
    } else {
      out.valid.push_back(std::move(s));
      out.valid_truth.push_back(prob);
    }
  }
  return out;
}

std::string format_manifest(const Manifest& m) {
  return "n_samples=" + std::to_string(m.n_samples) + " positives=" + std::to_string(m.positives) +
         " seed=" + std::to_string(m.seed);
}

Manifest manifest_of(std::span<const Sample> samples, std::uint64_t seed) {
  Manifest m{samples.size(), 0, seed};
  for (const auto& s : samples) m.positives += s.label == 1 ? 1 : 0;
  return m;
}

DatasetPaths DatasetPaths::in(const std::filesystem::path& dir) {
  return DatasetPaths{dir / "embeddings.qinemb", dir / "train.jsonl", dir / "valid.jsonl",
                      dir / "truth.txt"};
}

DatasetPaths write_generated(const GeneratedData& data, std::uint64_t seed,
                             const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto paths = DatasetPaths::in(dir);
  save_embeddings(data.store, paths.embeddings);
  write_dataset(data.train, seed, paths.train);
  write_dataset(data.valid, seed, paths.valid);
  write_truth(data, paths.truth);
  return paths;
}

std::string format_record(const Sample& s) {
  std::string out = "{\"target\": " + std::to_string(s.target_id) + ", \"seq\": [";
  for (std::size_t i = 0; i < s.seq_ids.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s.seq_ids[i]);
  }
  out += "], \"label\": " + std::to_string(s.label) + "}";
  return out;
}

void write_dataset(std::span<const Sample> samples, std::uint64_t seed,
                   const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open dataset for writing: " + path.string());
  os << "# " << format_manifest(manifest_of(samples, seed)) << '\n';
  for (const auto& s : samples) os << format_record(s) << '\n';
  if (!os) throw IoError("failed writing dataset: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path, const EmbeddingStore& store,
                     std::size_t max_seq_len) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset: " + path.string());
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  const auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
  auto check_id = [&](long long id) {
    if (id < 0 || static_cast<unsigned long long>(id) >= store.count()) {
      throw IdOutOfRangeError(where() + ": item id " + std::to_string(id) +
                              " out of range (n_items " + std::to_string(store.count()) + ")");
    }
    return static_cast<ItemId>(id);
  };

  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line[0] == '#') {
      if (line_no == 1) ds.manifest = parse_manifest(line);
      continue;
    }
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where() + ": malformed record: " + e.what(), line_no);
    }
    if (!rec.is_object() || !rec.contains("target") || !rec.contains("seq") ||
        !rec.contains("label") || !rec["target"].is_number_integer() || !rec["seq"].is_array() ||
        !rec["label"].is_number_integer()) {
      throw ParseError(where() + ": record needs integer target, array seq, integer label",
                       line_no);
    }
    Sample s;
    s.target_id = check_id(rec["target"].get<long long>());
    for (const auto& v : rec["seq"]) {
      if (!v.is_number_integer()) throw ParseError(where() + ": non-integer id in seq", line_no);
      s.seq_ids.push_back(check_id(v.get<long long>()));
    }
    if (s.seq_ids.size() > max_seq_len) {
      throw ParseError(where() + ": history of " + std::to_string(s.seq_ids.size()) +
                           " exceeds S=" + std::to_string(max_seq_len),
                       line_no);
    }
    const auto label = rec["label"].get<long long>();
    if (label != 0 && label != 1) throw ParseError(where() + ": label must be 0 or 1", line_no);
    s.label = static_cast<int>(label);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void write_truth(const GeneratedData& data, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open truth file for writing: " + path.string());
  for (double p : data.train_truth) os << "train\t" << fmt_double(p) << '\n';
  for (double p : data.valid_truth) os << "valid\t" << fmt_double(p) << '\n';
  if (!os) throw IoError("failed writing truth file: " + path.string());
}

Truth load_truth(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open truth file: " + path.string());
  Truth t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("truth line without tab", line_no);
    const auto split = line.substr(0, tab);
    double p = 0.0;
    try {
      p = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError("bad truth probability", line_no);
    }
    if (split == "train") {
      t.train.push_back(p);
    } else if (split == "valid") {
      t.valid.push_back(p);
    } else {
      throw ParseError("unknown split '" + split + "'", line_no);
    }
  }
  return t;
}

std::vector<Batch> make_batches(std::span<const Sample> samples, std::size_t batch_size,
                                std::size_t seq_len, Rng& rng) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates on our own generator keeps the order identical across
  // standard libraries.
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<Sample> chunk;
    chunk.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) chunk.push_back(samples[order[i]]);
    batches.push_back(make_batch(std::move(chunk), seq_len));
  }
  return batches;
}

double interest_similarity(const EmbeddingStore& store, const Sample& s) {
  if (s.seq_ids.empty()) return 0.0;
  std::vector<double> u(store.dim(), 0.0);
  for (auto id : s.seq_ids) {
    const auto r = store.data.row(id);
    for (std::size_t j = 0; j < u.size(); ++j) u[j] += r[j];
  }
  for (auto& v : u) v /= static_cast<double>(s.seq_ids.size());
  return dot(u, store.data.row(s.target_id));
}

double linear_baseline_auc(const EmbeddingStore& store, std::span<const Sample> train,
                           std::span<const Sample> valid) {
  std::vector<double> x(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) x[i] = interest_similarity(store, train[i]);
  double w = 0.0;
  double b = 0.0;
  for (int iter = 0; iter < 50; ++iter) {
    // Newton step on the 2-parameter logistic log-likelihood.
    double gw = 0, gb = 0, hww = 0, hwb = 0, hbb = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = sigmoid(w * x[i] + b);
      const double r = p - train[i].label;
      const double c = p * (1 - p);
      gw += r * x[i];
      gb += r;
      hww += c * x[i] * x[i];
      hwb += c * x[i];
      hbb += c;
    }
    const double det = hww * hbb - hwb * hwb;
    if (!(std::abs(det) > 1e-300)) break;
    const double dw = (hbb * gw - hwb * gb) / det;
    const double db = (hww * gb - hwb * gw) / det;
    w -= dw;
    b -= db;
    if (std::abs(dw) + std::abs(db) < 1e-12) break;
  }
  std::vector<double> scores(valid.size());
  std::vector<int> labels(valid.size());
  for (std::size_t i = 0; i < valid.size(); ++i) {
    scores[i] = w * interest_similarity(store, valid[i]) + b;
    labels[i] = valid[i].label;
  }
  return auc(scores, labels);
}

double bayes_auc(std::span<const double> truth, std::span<const Sample> samples) {
  std::vector<int> labels(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) labels[i] = samples[i].label;
  return auc(truth, labels);
}

}  // namespace qin
