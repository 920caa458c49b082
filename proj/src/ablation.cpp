#include "qin/ablation.hpp"

#include <algorithm>
#include <cstdio>

namespace qin {

std::vector<AblationVariant> ablation_variants() {
  return {
      {"QIN", [](HyperParams&) {}},
      {"QIN w/o QNN", [](HyperParams& hp) { hp.interaction = Interaction::mlp; }},
      {"QIN w/o ASTA", [](HyperParams& hp) { hp.pooling = Pooling::mean; }},
      {"ASTA w/ SoftMax", [](HyperParams& hp) { hp.attn_kind = AttnKind::softmax; }},
      {"QNN w/o PReLU", [](HyperParams& hp) { hp.qnn_activation = QnnActivation::relu; }},
      {"ASTA w/ Dropout",
       [](HyperParams& hp) {
         hp.attn_dropout = true;
         hp.attn_dropout_p = 0.1;
       }},
  };
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::vector<AblationRow> run_ablation(const RunConfig& base, const EmbeddingStore& store,
                                      std::span<const Sample> train_data,
                                      std::span<const Sample> valid_data,
                                      std::span<const std::uint64_t> seeds,
                                      std::span<const std::string> only) {
  std::vector<AblationRow> rows;
  for (const auto& variant : ablation_variants()) {
    if (!only.empty() && std::find(only.begin(), only.end(), variant.name) == only.end()) continue;
    AblationRow row{variant.name, {}, 0.0};
    for (auto seed : seeds) {
      HyperParams hp = base.hp;
      variant.apply(hp);
      bind_embeddings(hp, store);
      TrainConfig tc = base.train;
      tc.seed = seed;
      auto result = train(initial_params(hp, seed), hp, store, train_data, valid_data, tc);
      row.auc.push_back(result.best_metrics.auc);
    }
    row.median = median(row.auc);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows,
                                  std::span<const std::uint64_t> seeds) {
  std::string out = "| variant |";
  std::string rule = "|---|";
  for (auto s : seeds) {
    out += " seed " + std::to_string(s) + " |";
    rule += "---|";
  }
  out += " median |\n" + rule + "---|\n";
  char buf[32];
  for (const auto& r : rows) {
    out += "| " + r.variant + " |";
    for (double a : r.auc) {
      std::snprintf(buf, sizeof buf, " %.4f |", a);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, " %.4f |\n", r.median);
    out += buf;
  }
  return out;
}

}  // namespace qin
