#include "qin/cli.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "qin/ablation.hpp"
#include "qin/config.hpp"
#include "qin/datagen.hpp"
#include "qin/gradcheck.hpp"
#include "qin/metrics.hpp"
#include "qin/network.hpp"
#include "qin/trainer.hpp"

namespace qin {

namespace {

namespace fs = std::filesystem;

/// Options every pipeline subcommand accepts: --config, --preset and one
/// --<key> per configuration key.
struct ConfigOptions {
  std::string config_path;
  std::string preset;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> opts;
  CLI::Option* config_opt = nullptr;
  CLI::Option* preset_opt = nullptr;

  void attach(CLI::App* app) {
    config_opt = app->add_option("--config", config_path, "key=value configuration file");
    preset_opt = app->add_option("--preset", preset, "desk | paper");
    for (const auto& key : config_keys()) {
      opts[key] = app->add_option("--" + key, values[key]);
    }
  }

  RunConfig resolve() const {
    Settings flags;
    for (const auto& [key, opt] : opts) {
      if (opt->count() > 0) flags[key] = values.at(key);
    }
    std::optional<std::string> p;
    if (preset_opt->count() > 0) p = preset;
    std::optional<fs::path> file;
    if (config_opt->count() > 0) file = config_path;
    return resolve_config(p, file, flags);
  }
};

struct DataSet {
  EmbeddingStore store;
  std::vector<Sample> train;
  std::vector<Sample> valid;
};

EmbeddingStore load_store(const fs::path& dir, HyperParams& hp) {
  auto store = load_embeddings(DatasetPaths::in(dir).embeddings);
  bind_embeddings(hp, store);
  return store;
}

std::vector<Sample> load_split(const fs::path& dir, const std::string& split,
                               const EmbeddingStore& store, const HyperParams& hp) {
  const auto paths = DatasetPaths::in(dir);
  if (split == "train") return load_dataset(paths.train, store, hp.seq_len).samples;
  if (split == "valid") return load_dataset(paths.valid, store, hp.seq_len).samples;
  throw ConfigError("unknown split '" + split + "' (expected train or valid)");
}

std::string metrics_line(const Metrics& m) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "auc=%.6f logloss=%.6f", m.auc, m.logloss);
  return buf;
}

int cmd_gen_data(const ConfigOptions& co, const std::string& out_dir, std::ostream& out) {
  const auto cfg = co.resolve();
  const auto data = generate(cfg.gen);
  write_generated(data, cfg.gen.seed, out_dir);
  out << "split=train " << format_manifest(manifest_of(data.train, cfg.gen.seed)) << '\n';
  out << "split=valid " << format_manifest(manifest_of(data.valid, cfg.gen.seed)) << '\n';
  char buf[96];
  std::snprintf(buf, sizeof buf, "bayes_auc=%.6f linear_auc=%.6f",
                bayes_auc(data.valid_truth, data.valid),
                linear_baseline_auc(data.store, data.train, data.valid));
  out << buf << '\n';
  return kExitOk;
}

int cmd_train(const ConfigOptions& co, const std::string& data_dir, const std::string& out_dir,
              std::ostream& out) {
  auto cfg = co.resolve();
  const auto store = load_store(data_dir, cfg.hp);
  const auto train_data = load_split(data_dir, "train", store, cfg.hp);
  const auto valid_data = load_split(data_dir, "valid", store, cfg.hp);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  std::ofstream history(fs::path(out_dir) / "history.log", std::ios::trunc);
  if (!history) throw IoError("cannot write history.log in " + out_dir);

  auto result = train(initial_params(cfg.hp, cfg.train.seed), cfg.hp, store, train_data,
                      valid_data, cfg.train, [&](const EpochRecord& r) {
                        const auto line = format_history_line(r);
                        history << line << '\n';
                        history.flush();
                        out << line << '\n';
                      });
  save_checkpoint(result.best, fs::path(out_dir) / "best.ckpt");
  char buf[128];
  std::snprintf(buf, sizeof buf, "best_epoch=%zu val_auc=%.6f val_logloss=%.6f",
                result.best_epoch, result.best_metrics.auc, result.best_metrics.logloss);
  out << buf << '\n';
  return kExitOk;
}

int cmd_eval(const ConfigOptions& co, const std::string& data_dir, const std::string& ckpt,
             const std::string& split, bool zero_head, const std::string& dump,
             std::ostream& out) {
  auto cfg = co.resolve();
  const auto store = load_store(data_dir, cfg.hp);
  const auto samples = load_split(data_dir, split, store, cfg.hp);
  ModelParams params =
      ckpt.empty() ? initial_params(cfg.hp, cfg.train.seed) : load_checkpoint(ckpt, cfg.hp);
  if (zero_head) {
    std::fill(params.head_w.begin(), params.head_w.end(), 0.0);
    params.head_b = 0.0;
  }
  if (!dump.empty()) {
    std::ofstream os(dump, std::ios::trunc);
    if (!os) throw IoError("cannot write " + dump);
    const auto logits = predict_logits(params, cfg.hp, store, samples);
    char buf[64];
    for (std::size_t i = 0; i < samples.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g\t%d\n", sigmoid(logits[i]), samples[i].label);
      os << buf;
    }
  }
  out << metrics_line(evaluate(params, cfg.hp, store, samples)) << '\n';
  return kExitOk;
}

int cmd_gradcheck(std::size_t seeds, std::uint64_t first_seed, double step,
                  const std::string& sabotage, std::ostream& out) {
  if (seeds < 1) throw ConfigError("--seeds must be >= 1");
  const auto report = check_seeds(gradcheck_hyperparams(), first_seed, seeds, step, sabotage);
  constexpr double kTol = 1e-4;
  char buf[256];
  for (const auto& c : report.classes) {
    std::snprintf(buf, sizeof buf,
                  "class=%s max_rel_err=%.3e worst=%s[%zu] checked=%zu skipped=%zu status=%s",
                  c.name.c_str(), c.max_rel_err, c.worst_tensor.c_str(), c.argmax, c.checked,
                  c.skipped, c.max_rel_err < kTol ? "pass" : "fail");
    out << buf << '\n';
  }
  const bool ok = report.passed(kTol);
  out << "seeds=" << seeds << " step=" << step << " result=" << (ok ? "pass" : "fail") << '\n';
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_ablate(const ConfigOptions& co, const std::string& data_dir, std::size_t n_seeds,
               std::ostream& out) {
  auto cfg = co.resolve();
  if (n_seeds < 1) throw ConfigError("--seeds must be >= 1");
  const auto store = load_store(data_dir, cfg.hp);
  const auto train_data = load_split(data_dir, "train", store, cfg.hp);
  const auto valid_data = load_split(data_dir, "valid", store, cfg.hp);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < n_seeds; ++i) seeds.push_back(cfg.train.seed + i);
  const auto rows = run_ablation(cfg, store, train_data, valid_data, seeds);
  out << format_ablation_table(rows, seeds);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quadratic Interest Network: synthetic CTR training and verification"};
  app.require_subcommand(1);

  std::string out_dir;
  std::string data_dir;
  std::string ckpt;
  std::string split = "valid";
  std::string dump;
  std::string sabotage;
  bool zero_head = false;
  std::size_t seeds = 5;
  std::size_t ablate_seeds = 3;
  std::uint64_t first_seed = 1;
  double step = kDefaultStep;

  ConfigOptions gen_co, train_co, eval_co, ablate_co;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen_co.attach(gen);

  auto* tr = app.add_subcommand("train", "train and write best.ckpt + history.log");
  tr->add_option("--data", data_dir, "dataset directory")->required();
  tr->add_option("--out", out_dir, "output directory")->required();
  train_co.attach(tr);

  auto* ev = app.add_subcommand("eval", "print auc and logloss of a checkpoint");
  ev->add_option("--data", data_dir, "dataset directory")->required();
  ev->add_option("--ckpt", ckpt, "checkpoint (default: freshly initialized model)");
  ev->add_option("--split", split, "train | valid");
  ev->add_flag("--zero-head", zero_head, "zero the prediction head before evaluating");
  ev->add_option("--dump", dump, "write per-sample probability and label");
  eval_co.attach(ev);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every gradient");
  gc->add_option("--seeds", seeds, "independent random instances");
  gc->add_option("--seed", first_seed, "first instance seed");
  gc->add_option("--step", step, "central-difference step");
  gc->add_option("--sabotage", sabotage, "negate one gradient class (harness self-test)");

  auto* ab = app.add_subcommand("ablate", "train the ablation grid and print a markdown table");
  ab->add_option("--data", data_dir, "dataset directory")->required();
  ab->add_option("--seeds", ablate_seeds, "number of training seeds");
  ablate_co.attach(ab);

  std::vector<std::string> argv_store{"qin"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_co, out_dir, out);
    if (tr->parsed()) return cmd_train(train_co, data_dir, out_dir, out);
    if (ev->parsed()) return cmd_eval(eval_co, data_dir, ckpt, split, zero_head, dump, out);
    if (gc->parsed()) return cmd_gradcheck(seeds, first_seed, step, sabotage, out);
    if (ab->parsed()) return cmd_ablate(ablate_co, data_dir, ablate_seeds, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SingleClassError& e) {
    err << "single-class data: " << e.what() << '\n';
    return kExitSingleClass;
  } catch (const NonFiniteError& e) {
    err << "non-finite value: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const Error& e) {
    // I/O, malformed files, out-of-range ids.
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitConfig;
}

}  // namespace qin
