#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qin/config.hpp"

namespace qin {

struct AblationVariant {
  std::string name;
  std::function<void(HyperParams&)> apply;
};

/// Full QIN plus the five single-change variants.
std::vector<AblationVariant> ablation_variants();

struct AblationRow {
  std::string variant;
  std::vector<double> auc;  // one per seed
  double median = 0.0;
};

double median(std::vector<double> xs);

/// Trains every variant from scratch with identical budget for each seed.
std::vector<AblationRow> run_ablation(const RunConfig& base, const EmbeddingStore& store,
                                      std::span<const Sample> train_data,
                                      std::span<const Sample> valid_data,
                                      std::span<const std::uint64_t> seeds,
                                      std::span<const std::string> only = {});

/// Markdown table: variant | auc per seed | median.
std::string format_ablation_table(const std::vector<AblationRow>& rows,
                                  std::span<const std::uint64_t> seeds);

}  // namespace qin
