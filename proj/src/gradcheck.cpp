#include "qin/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "qin/network.hpp"

namespace qin {

double ClassReport::skipped_fraction() const {
  const std::size_t total = checked + skipped;
  return total == 0 ? 0.0 : static_cast<double>(skipped) / static_cast<double>(total);
}

double GradReport::worst() const {
  double w = 0.0;
  for (const auto& c : classes) w = std::max(w, c.max_rel_err);
  return w;
}

const ClassReport* GradReport::find(const std::string& name) const {
  for (const auto& c : classes) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

namespace {

bool crosses_kink(const std::vector<double>& lo, const std::vector<double>& hi) {
  if (lo.size() != hi.size()) return true;
  for (std::size_t k = 0; k < lo.size(); ++k) {
    if (std::abs(lo[k]) < kKinkGuard || std::abs(hi[k]) < kKinkGuard) return true;
    if ((lo[k] < 0) != (hi[k] < 0)) return true;
  }
  return false;
}

void merge(ClassReport& into, const ClassReport& part) {
  if (part.max_rel_err > into.max_rel_err || into.worst_tensor.empty()) {
    into.max_rel_err = std::max(into.max_rel_err, part.max_rel_err);
    if (into.max_rel_err == part.max_rel_err) {
      into.argmax = part.argmax;
      into.worst_tensor = part.worst_tensor;
    }
  }
  into.checked += part.checked;
  into.skipped += part.skipped;
}

}  // namespace

ClassReport check(const std::string& name, const ProbedFn& f, std::span<const double> analytic,
                  std::span<const double> point, double step) {
  if (analytic.size() != point.size()) throw ShapeError("gradcheck: gradient/point length mismatch");
  ClassReport rep;
  rep.name = name;
  rep.worst_tensor = name;
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> kinks_lo;
  std::vector<double> kinks_hi;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    kinks_lo.clear();
    kinks_hi.clear();
    x[i] = orig + step;
    const double f_hi = f(x, &kinks_hi);
    x[i] = orig - step;
    const double f_lo = f(x, &kinks_lo);
    x[i] = orig;
    if (!std::isfinite(f_hi) || !std::isfinite(f_lo)) {
      throw NonFiniteError("gradcheck: non-finite objective at coordinate " + std::to_string(i) +
                           " of " + name);
    }
    if (crosses_kink(kinks_lo, kinks_hi)) {
      ++rep.skipped;
      continue;
    }
    const double numeric = (f_hi - f_lo) / (2.0 * step);
    const double err = relative_error(analytic[i], numeric);
    if (err > rep.max_rel_err) {
      rep.max_rel_err = err;
      rep.argmax = i;
    }
    ++rep.checked;
  }
  return rep;
}

std::string grad_class(const std::string& tensor_name) {
  if (tensor_name == "id_embedding") return "embeddings";
  if (tensor_name == "w_q" || tensor_name == "w_k" || tensor_name == "w_v") return tensor_name;
  if (tensor_name.rfind("qnn", 0) == 0) {
    return tensor_name.ends_with(".prelu_slope") ? "qnn.prelu_slope" : "qnn.w";
  }
  if (tensor_name.rfind("mlp", 0) == 0) return "mlp";
  return "head";
}

GradReport check_model(const ModelParams& params, const HyperParams& hp,
                       const EmbeddingStore& store, const Batch& batch, std::uint64_t seed,
                       double step, const std::string& sabotage) {
  const DropoutStream stream{mix_seed(seed, 0x6772616463ULL), 0};
  ForwardOptions opts;
  opts.dropout = &stream;

  Gradients grads = zeros_like(params);
  forward_backward(params, hp, store, batch, &grads, opts);

  GradReport report;
  report.step = step;
  report.seed = seed;
  ModelParams probe = params;
  auto probe_views = param_views(probe);
  const auto grad_views = param_views(grads);
  for (std::size_t k = 0; k < probe_views.size(); ++k) {
    auto target = probe_views[k].data;
    const std::string cls = grad_class(probe_views[k].name);
    std::vector<double> analytic(grad_views[k].data.begin(), grad_views[k].data.end());
    if (cls == sabotage) {
      for (auto& a : analytic) a = -a;
    }
    const std::vector<double> point(target.begin(), target.end());
    ProbedFn f = [&](std::span<const double> x, std::vector<double>* kinks) {
      std::copy(x.begin(), x.end(), target.begin());
      ForwardOptions o = opts;
      o.kinks = kinks;
      const double loss = forward_backward(probe, hp, store, batch, nullptr, o).loss;
      std::copy(point.begin(), point.end(), target.begin());
      return loss;
    };
    const auto part = check(probe_views[k].name, f, analytic, point, step);

    auto it = std::find_if(report.classes.begin(), report.classes.end(),
                           [&](const ClassReport& c) { return c.name == cls; });
    if (it == report.classes.end()) {
      ClassReport fresh;
      fresh.name = cls;
      report.classes.push_back(std::move(fresh));
      it = report.classes.end() - 1;
    }
    merge(*it, part);
  }
  return report;
}

HyperParams gradcheck_hyperparams() {
  HyperParams hp;
  hp.d_t = hp.d_b = hp.d_a = 16;
  hp.qnn_dim = 32;
  hp.seq_len = 8;
  hp.qnn_layers = 2;
  hp.qnn_capacity = 2;
  hp.frozen_dim = 8;
  hp.vocab = 24;
  return hp;
}

GradInstance random_instance(std::uint64_t seed, HyperParams base) {
  Rng rng(mix_seed(seed, 0x696e7374ULL));
  GradInstance inst;
  inst.hp = std::move(base);
  auto& hp = inst.hp;
  inst.store.data = Matrix(hp.vocab, hp.frozen_dim);
  for (auto& v : inst.store.data.flat()) v = rng.normal(0.0, 0.5);
  inst.params = init_params(hp, rng);
  // Unit-scale embeddings keep every gradient well above finite-difference noise.
  for (auto& v : inst.params.id_embedding.flat()) v = rng.normal(0.0, 0.5);
  for (auto& layer : inst.params.qnn) {
    for (auto& v : layer.w.flat()) v *= 0.5;
    layer.prelu_slope = 0.1 + 0.4 * rng.uniform();
  }
  inst.params.head_b = rng.normal(0.0, 0.5);

  const std::size_t n = 4;
  std::vector<Sample> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = samples[i];
    s.target_id = static_cast<ItemId>(rng.below(hp.vocab));
    // One sample always has an empty history and one a full one.
    const std::size_t len = i == 0 ? 0 : (i == 1 ? hp.seq_len : 1 + rng.below(hp.seq_len));
    for (std::size_t j = 0; j < len; ++j) s.seq_ids.push_back(static_cast<ItemId>(rng.below(hp.vocab)));
    s.label = static_cast<int>(i % 2);
  }
  inst.batch = make_batch(std::move(samples), hp.seq_len);
  return inst;
}

GradReport check_seeds(const HyperParams& base, std::uint64_t first_seed, std::size_t seeds,
                       double step, const std::string& sabotage) {
  GradReport worst;
  worst.step = step;
  worst.seed = first_seed;
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto inst = random_instance(first_seed + s, base);
    const auto rep = check_model(inst.params, inst.hp, inst.store, inst.batch, first_seed + s, step,
                                 sabotage);
    for (const auto& c : rep.classes) {
      auto it = std::find_if(worst.classes.begin(), worst.classes.end(),
                             [&](const ClassReport& w) { return w.name == c.name; });
      if (it == worst.classes.end()) {
        worst.classes.push_back(c);
        continue;
      }
      merge(*it, c);
    }
  }
  return worst;
}

}  // namespace qin
