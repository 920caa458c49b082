#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qin/datagen.hpp"
#include "qin/model.hpp"
#include "qin/trainer.hpp"

namespace qin {

struct RunConfig {
  HyperParams hp;
  TrainConfig train;
  GenConfig gen;
  std::string preset = "desk";
};

using Settings = std::map<std::string, std::string>;

/// Every accepted key, in a stable order.
const std::vector<std::string>& config_keys();

/// Desk preset: d_t = d_a = d_b = 16, S = 32, L = M = 2, batch 256.
RunConfig desk_config();
/// lr 2e-3, embedding decay 2e-4, batch 8192, dim 128, L = M = 4,
/// dropout 0.1, MLP ablation widths [1024, 512, 256].
RunConfig paper_config();
RunConfig preset_config(const std::string& name);

/// Throws ConfigError on an unknown key or an unparsable value. `seed`
/// drives both data generation and training.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// `key=value` lines; blank lines and `#` comments ignored.
Settings parse_config_file(const std::filesystem::path& path);

/// defaults < preset < file < flags. The preset comes from the flag if
/// given, else from a `preset` key in the file. qnn_dim follows d_t + d_a
/// unless set explicitly.
RunConfig resolve_config(const std::optional<std::string>& preset_flag,
                         const std::optional<std::filesystem::path>& file, const Settings& flags);

/// Applies dataset-derived fields (vocabulary, frozen width) and validates.
void bind_embeddings(HyperParams& hp, const EmbeddingStore& store);

}  // namespace qin
