#include "qin/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <functional>

namespace qin {

namespace {

std::size_t to_count(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError("bad integer for " + key + ": '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError("bad integer for " + key + ": '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + key + ": '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

std::vector<std::size_t> to_dims(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto piece = v.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    out.push_back(to_count(key, piece));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& schema() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      // model
      {"d_t", [](RunConfig& c, auto& k, auto& v) { c.hp.d_t = to_count(k, v); }},
      {"d_b", [](RunConfig& c, auto& k, auto& v) { c.hp.d_b = to_count(k, v); }},
      {"d_a", [](RunConfig& c, auto& k, auto& v) { c.hp.d_a = to_count(k, v); }},
      {"seq_len", [](RunConfig& c, auto& k, auto& v) { c.hp.seq_len = to_count(k, v); }},
      {"qnn_dim", [](RunConfig& c, auto& k, auto& v) { c.hp.qnn_dim = to_count(k, v); }},
      {"qnn_layers", [](RunConfig& c, auto& k, auto& v) { c.hp.qnn_layers = to_count(k, v); }},
      {"qnn_capacity", [](RunConfig& c, auto& k, auto& v) { c.hp.qnn_capacity = to_count(k, v); }},
      {"dropout", [](RunConfig& c, auto& k, auto& v) { c.hp.dropout_p = to_double(k, v); }},
      {"attn_kind", [](RunConfig& c, auto&, auto& v) { c.hp.attn_kind = parse_attn_kind(v); }},
      {"attn_dropout", [](RunConfig& c, auto& k, auto& v) { c.hp.attn_dropout = to_bool(k, v); }},
      {"attn_dropout_p",
       [](RunConfig& c, auto& k, auto& v) { c.hp.attn_dropout_p = to_double(k, v); }},
      {"pooling", [](RunConfig& c, auto&, auto& v) { c.hp.pooling = parse_pooling(v); }},
      {"interaction",
       [](RunConfig& c, auto&, auto& v) { c.hp.interaction = parse_interaction(v); }},
      {"qnn_activation",
       [](RunConfig& c, auto&, auto& v) { c.hp.qnn_activation = parse_qnn_activation(v); }},
      {"qnn_residual", [](RunConfig& c, auto& k, auto& v) { c.hp.qnn_residual = to_bool(k, v); }},
      {"qnn_mid_activation",
       [](RunConfig& c, auto& k, auto& v) { c.hp.qnn_mid_activation = to_bool(k, v); }},
      {"mlp_dims", [](RunConfig& c, auto& k, auto& v) { c.hp.mlp_dims = to_dims(k, v); }},
      // training
      {"lr", [](RunConfig& c, auto& k, auto& v) { c.train.lr = to_double(k, v); }},
      {"emb_weight_decay",
       [](RunConfig& c, auto& k, auto& v) { c.train.emb_weight_decay = to_double(k, v); }},
      {"batch_size", [](RunConfig& c, auto& k, auto& v) { c.train.batch_size = to_count(k, v); }},
      {"epochs", [](RunConfig& c, auto& k, auto& v) { c.train.epochs = to_count(k, v); }},
      {"patience", [](RunConfig& c, auto& k, auto& v) { c.train.patience = to_count(k, v); }},
      {"adam_beta1", [](RunConfig& c, auto& k, auto& v) { c.train.adam_beta1 = to_double(k, v); }},
      {"adam_beta2", [](RunConfig& c, auto& k, auto& v) { c.train.adam_beta2 = to_double(k, v); }},
      {"adam_eps", [](RunConfig& c, auto& k, auto& v) { c.train.adam_eps = to_double(k, v); }},
      {"seed",
       [](RunConfig& c, auto& k, auto& v) { c.train.seed = c.gen.seed = to_u64(k, v); }},
      // data generation
      {"n_items", [](RunConfig& c, auto& k, auto& v) { c.gen.n_items = to_count(k, v); }},
      {"n_users", [](RunConfig& c, auto& k, auto& v) { c.gen.n_users = to_count(k, v); }},
      {"n_samples", [](RunConfig& c, auto& k, auto& v) { c.gen.n_samples = to_count(k, v); }},
      {"emb_dim", [](RunConfig& c, auto& k, auto& v) { c.gen.emb_dim = to_count(k, v); }},
      {"min_seq_len", [](RunConfig& c, auto& k, auto& v) { c.gen.min_seq_len = to_count(k, v); }},
      {"max_seq_len", [](RunConfig& c, auto& k, auto& v) { c.gen.max_seq_len = to_count(k, v); }},
      {"quad_strength",
       [](RunConfig& c, auto& k, auto& v) { c.gen.quad_strength = to_double(k, v); }},
      {"linear_strength",
       [](RunConfig& c, auto& k, auto& v) { c.gen.linear_strength = to_double(k, v); }},
      {"noise_std", [](RunConfig& c, auto& k, auto& v) { c.gen.noise_std = to_double(k, v); }},
      {"similarity_scale",
       [](RunConfig& c, auto& k, auto& v) { c.gen.similarity_scale = to_double(k, v); }},
      {"bias", [](RunConfig& c, auto& k, auto& v) { c.gen.bias = to_double(k, v); }},
      {"temperature", [](RunConfig& c, auto& k, auto& v) { c.gen.temperature = to_double(k, v); }},
      {"target_from_interest",
       [](RunConfig& c, auto& k, auto& v) { c.gen.target_from_interest = to_double(k, v); }},
      {"train_fraction",
       [](RunConfig& c, auto& k, auto& v) { c.gen.train_fraction = to_double(k, v); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : schema()) out.push_back(k);
    return out;
  }();
  return keys;
}

RunConfig desk_config() {
  RunConfig c;
  c.preset = "desk";
  c.hp.d_t = c.hp.d_b = c.hp.d_a = 16;
  c.hp.qnn_dim = 32;
  c.hp.seq_len = 32;
  c.hp.qnn_layers = c.hp.qnn_capacity = 2;
  c.hp.dropout_p = 0.1;
  c.hp.mlp_dims = {64, 32};
  c.train.lr = 2e-3;
  c.train.emb_weight_decay = 2e-4;
  c.train.batch_size = 256;
  c.train.epochs = 10;
  return c;
}

RunConfig paper_config() {
  RunConfig c = desk_config();
  c.preset = "paper";
  c.hp.d_t = c.hp.d_b = c.hp.d_a = 128;
  c.hp.qnn_dim = 256;
  c.hp.qnn_layers = c.hp.qnn_capacity = 4;
  c.hp.dropout_p = 0.1;
  c.hp.mlp_dims = {1024, 512, 256};
  c.train.lr = 2e-3;
  c.train.emb_weight_decay = 2e-4;
  c.train.batch_size = 8192;
  return c;
}

RunConfig preset_config(const std::string& name) {
  if (name == "desk") return desk_config();
  if (name == "paper") return paper_config();
  throw ConfigError("unknown preset '" + name + "' (expected desk or paper)");
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& [k, setter] : schema()) {
    if (k == key) {
      setter(cfg, key, value);
      return;
    }
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

Settings parse_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file: " + path.string());
  Settings out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return out;
}

RunConfig resolve_config(const std::optional<std::string>& preset_flag,
                         const std::optional<std::filesystem::path>& file, const Settings& flags) {
  Settings from_file;
  if (file) from_file = parse_config_file(*file);
  std::string preset = "desk";
  if (auto it = from_file.find("preset"); it != from_file.end()) preset = it->second;
  if (preset_flag) preset = *preset_flag;
  RunConfig cfg = preset_config(preset);

  bool explicit_qnn_dim = false;
  for (const Settings* layer : std::array<const Settings*, 2>{&from_file, &flags}) {
    for (const auto& [k, v] : *layer) {
      if (k == "preset") continue;
      apply_setting(cfg, k, v);
      explicit_qnn_dim |= k == "qnn_dim";
    }
  }
  if (!explicit_qnn_dim) cfg.hp.qnn_dim = cfg.hp.d_t + cfg.hp.d_a;
  cfg.train.validate();
  cfg.gen.validate();
  return cfg;
}

void bind_embeddings(HyperParams& hp, const EmbeddingStore& store) {
  hp.vocab = store.count();
  hp.frozen_dim = store.dim();
  if (hp.frozen_dim > hp.d_t) {
    throw ConfigError("embedding file width " + std::to_string(store.dim()) + " exceeds d_t " +
                      std::to_string(hp.d_t));
  }
  hp.validate();
}

}  // namespace qin
