// Command-line front end. Talks to the library only through pan.h.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pan/pan.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string take(char* s) {
  std::string out = s ? s : "";
  pan_string_free(s);
  return out;
}

void check(pan_status st, const std::string& context) {
  if (st == PAN_OK) return;
  const std::string msg = context + ": " + pan_status_name(st) + ": " + pan_last_error();
  if (st == PAN_ERR_INVALID_ARGUMENT) throw UsageError(msg);
  throw RuntimeFailure(msg);
}

void check_runtime(pan_status st, const std::string& context) {
  if (st == PAN_OK) return;
  throw RuntimeFailure(context + ": " + pan_status_name(st) + ": " + pan_last_error());
}

struct DatasetDeleter {
  void operator()(pan_dataset* d) const { pan_dataset_free(d); }
};
struct PropagatorDeleter {
  void operator()(pan_propagator* p) const { pan_propagator_free(p); }
};
struct TrialsDeleter {
  void operator()(pan_trials* t) const { pan_trials_free(t); }
};
struct GridDeleter {
  void operator()(pan_grid* g) const { pan_grid_free(g); }
};

// Relative paths that do not exist are looked up under $PAN_DATA_DIR.
std::string resolve_dataset(const std::string& path) {
  if (fs::exists(path)) return path;
  const char* dir = std::getenv("PAN_DATA_DIR");
  if (dir && *dir && fs::path(path).is_relative()) {
    const fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

std::unique_ptr<pan_dataset, DatasetDeleter> load(const std::string& path) {
  pan_dataset* ds = nullptr;
  check_runtime(pan_dataset_load(path.c_str(), 1, &ds), "loading " + path);
  return std::unique_ptr<pan_dataset, DatasetDeleter>(ds);
}

std::vector<double> parse_k(const std::string& text) {
  std::vector<double> k;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw UsageError("--k: '" + item + "' is not a number");
    k.push_back(v);
  }
  if (k.empty()) throw UsageError("--k needs at least one value");
  return k;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  if (!out) throw RuntimeFailure("cannot write " + path.string());
}

std::string hex8(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

// <out>/<stem>-<crc of the config>; a taken name gets a numeric suffix.
fs::path make_run_dir(const std::string& out, const std::string& stem, const std::string& key) {
  const std::string base = stem + "-" + hex8(pan_crc32(key.data(), key.size()));
  fs::path dir = fs::path(out) / base;
  for (int n = 2; fs::exists(dir); ++n) dir = fs::path(out) / (base + "-" + std::to_string(n));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeFailure("cannot create run directory " + dir.string());
  return dir;
}

struct TrainFlags {
  std::string dataset;
  std::string preset;
  int method = 0;
  std::size_t cutoff = 0;
  std::string k;
  bool train_k = false;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::string out = "runs";
  std::size_t jobs = 1;
  std::optional<double> lr, dropout, weight_decay;
  std::optional<std::size_t> epochs, patience, hidden;
  double grid_step = 0.25;
};

void add_common(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--dataset", f.dataset, "PANDS file (falls back to $PAN_DATA_DIR/<path>)")
      ->required();
  cmd->add_option("--preset", f.preset, "dataset defaults")
      ->check(CLI::IsMember({"cora", "citeseer", "pubmed"}));
  cmd->add_option("--method", f.method, "propagator variant 1-7")->required();
  cmd->add_option("--L", f.cutoff, "maximal path length")->required();
  cmd->add_option("--trials", f.trials, "number of seeds")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "first seed");
  cmd->add_option("--out", f.out, "parent directory of the run directory");
  cmd->add_option("--jobs", f.jobs, "parallel trials")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", f.lr, "learning rate");
  cmd->add_option("--dropout", f.dropout, "dropout rate");
  cmd->add_option("--weight-decay", f.weight_decay, "L2 weight on the first layer");
  cmd->add_option("--epochs", f.epochs, "maximal number of epochs");
  cmd->add_option("--patience", f.patience, "early stopping patience");
  cmd->add_option("--hidden", f.hidden, "hidden units");
}

json build_config(const TrainFlags& f) {
  char* raw = nullptr;
  check(pan_train_config_default(f.preset.empty() ? nullptr : f.preset.c_str(), &raw), "preset");
  json cfg = json::parse(take(raw));
  cfg["method"] = f.method;
  cfg["L"] = f.cutoff;
  cfg["seed"] = f.seed;
  if (f.lr) cfg["lr"] = *f.lr;
  if (f.dropout) cfg["dropout"] = *f.dropout;
  if (f.weight_decay) cfg["weight_decay"] = *f.weight_decay;
  if (f.epochs) cfg["max_epochs"] = *f.epochs;
  if (f.patience) cfg["patience"] = *f.patience;
  if (f.hidden) cfg["hidden"] = *f.hidden;
  return cfg;
}

json checked(const json& cfg) {
  char* raw = nullptr;
  check(pan_train_config_check(cfg.dump().c_str(), &raw), "config");
  return json::parse(take(raw));
}

int cmd_train(const TrainFlags& f) {
  json cfg = build_config(f);
  if (f.train_k == !f.k.empty()) throw UsageError("give exactly one of --k and --train-k");
  if (f.train_k) {
    cfg["k_mode"] = "backprop";
    cfg.erase("k");
  } else {
    cfg["k_mode"] = "fixed";
    cfg["k"] = parse_k(f.k);
  }
  cfg = checked(cfg);

  const std::string path = resolve_dataset(f.dataset);
  auto ds = load(path);
  const std::string stem = "train-m" + std::to_string(f.method) + "-L" +
                           std::to_string(f.cutoff) + "-s" + std::to_string(f.seed) + "-n" +
                           std::to_string(f.trials);

  pan_trials* raw_trials = nullptr;
  const pan_status st =
      pan_run_trials(ds.get(), cfg.dump().c_str(), f.trials, f.seed, f.jobs, &raw_trials);
  if (st == PAN_ERR_DIVERGENCE) {
    const std::string message = pan_last_error();
    char* div = nullptr;
    json partial;
    if (pan_last_divergence_json(&div) == PAN_OK) partial = json::parse(take(div));
    const fs::path dir = make_run_dir(f.out, stem, cfg.dump() + path);
    json manifest = {{"format", "pan-run"}, {"version", 1},   {"status", "diverged"},
                     {"config", cfg},       {"error", message}, {"partial", partial}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    std::cerr << "error: " << message << "\nrun_dir " << dir.string() << "\n";
    return kExitRuntime;
  }
  check_runtime(st, "training");
  std::unique_ptr<pan_trials, TrialsDeleter> trials(raw_trials);

  char* raw = nullptr;
  check_runtime(pan_trials_manifest_json(trials.get(), ds.get(), path.c_str(), &raw), "manifest");
  json manifest = json::parse(take(raw));
  manifest["status"] = "ok";
  manifest["files"] = {{"curves", "curves.csv"},
                       {"curves_summary", "curves_summary.csv"},
                       {"models", "models"}};

  const fs::path dir = make_run_dir(f.out, stem, cfg.dump() + path);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  check_runtime(pan_trials_curves_csv(trials.get(), &raw), "curves");
  write_file(dir / "curves.csv", take(raw));
  check_runtime(pan_trials_curves_summary_csv(trials.get(), &raw), "curves");
  write_file(dir / "curves_summary.csv", take(raw));
  check_runtime(pan_trials_save_models(trials.get(), ds.get(), (dir / "models").c_str()),
                "models");

  double mean = 0.0, sd = 0.0;
  check_runtime(pan_trials_summary(trials.get(), &mean, &sd), "summary");
  std::printf("test_acc mean %.4f std %.4f trials %zu\n", mean, sd, f.trials);
  std::printf("run_dir %s\n", dir.string().c_str());
  return kExitOk;
}

int cmd_grid(const TrainFlags& f) {
  json cfg = build_config(f);
  cfg["k_mode"] = "fixed";
  std::size_t size = 0;
  check(pan_grid_size(f.cutoff, f.grid_step, &size), "--grid-step");
  cfg.erase("k");
  {
    // Validate everything but k, which the grid supplies.
    json probe = cfg;
    probe["k"] = std::vector<double>(f.cutoff + 1, 0.0);
    checked(probe);
  }

  const std::string path = resolve_dataset(f.dataset);
  auto ds = load(path);
  pan_grid* raw_grid = nullptr;
  const pan_status st = pan_grid_search(ds.get(), cfg.dump().c_str(), f.grid_step, f.trials,
                                        f.seed, f.jobs, &raw_grid);
  check_runtime(st, "grid search");
  std::unique_ptr<pan_grid, GridDeleter> grid(raw_grid);

  const std::string stem = "grid-m" + std::to_string(f.method) + "-L" + std::to_string(f.cutoff) +
                           "-s" + std::to_string(f.seed) + "-n" + std::to_string(f.trials);
  std::ostringstream key;
  key << cfg.dump() << path << f.grid_step;
  const fs::path dir = make_run_dir(f.out, stem, key.str());

  char* raw = nullptr;
  check_runtime(pan_grid_manifest_json(grid.get(), ds.get(), path.c_str(), &raw), "manifest");
  json manifest = json::parse(take(raw));
  manifest["status"] = "ok";
  manifest["grid_step"] = f.grid_step;
  manifest["files"] = {{"grid", "grid.csv"}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  check_runtime(pan_grid_csv(grid.get(), &raw), "grid table");
  write_file(dir / "grid.csv", take(raw));

  check_runtime(pan_grid_best_json(grid.get(), &raw), "winner");
  const json best = json::parse(take(raw));
  std::string k;
  for (const auto& v : best["k"]) {
    std::ostringstream s;
    s << v.get<double>();
    k += (k.empty() ? "" : ",") + s.str();
  }
  std::printf("best k %s mean_val_acc %.4f mean_test_acc %.4f (%zu candidates)\n", k.c_str(),
              best["mean_val_acc"].get<double>(), best["mean_test_acc"].get<double>(), size);
  std::printf("run_dir %s\n", dir.string().c_str());
  return kExitOk;
}

struct InspectFlags {
  std::string dataset;
  int method = 0;
  std::size_t cutoff = 0;
  std::string k;
};

int cmd_inspect(const InspectFlags& f) {
  const json cfg = {{"method", f.method}, {"L", f.cutoff}, {"k", parse_k(f.k)}};
  check(pan_propagator_config_check(cfg.dump().c_str()), "propagator");
  auto ds = load(resolve_dataset(f.dataset));
  pan_propagator* raw_prop = nullptr;
  check_runtime(pan_propagator_build(ds.get(), cfg.dump().c_str(), &raw_prop), "propagator");
  std::unique_ptr<pan_propagator, PropagatorDeleter> prop(raw_prop);
  char* raw = nullptr;
  check_runtime(pan_propagator_inspect_json(prop.get(), &raw), "inspect");
  std::printf("%s\n", take(raw).c_str());
  return kExitOk;
}

struct EvalFlags {
  std::string dataset;
  std::string model;
  std::string split = "test";
};

int cmd_eval(const EvalFlags& f) {
  const pan_split split = f.split == "train" ? PAN_SPLIT_TRAIN
                          : f.split == "val" ? PAN_SPLIT_VAL
                                             : PAN_SPLIT_TEST;
  auto ds = load(resolve_dataset(f.dataset));
  double acc = 0.0;
  check_runtime(pan_model_evaluate(f.model.c_str(), ds.get(), split, &acc), "evaluate");
  std::printf("%s\n", json{{"split", f.split}, {"accuracy", acc}}.dump().c_str());
  return kExitOk;
}

int cmd_validate(const std::string& dataset) {
  char* raw = nullptr;
  int ok = 0;
  check_runtime(pan_dataset_validate_file(resolve_dataset(dataset).c_str(), &raw, &ok),
                "validate");
  std::printf("%s\n", take(raw).c_str());
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAN: path-integral graph convolution"};
  app.require_subcommand(1, 1);

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "train over several seeds and write a run directory");
  add_common(train, train_flags);
  auto* k_opt = train->add_option("--k", train_flags.k, "fixed path weights k0,k1,...");
  auto* tk_opt = train->add_flag("--train-k", train_flags.train_k, "learn k by backpropagation");
  k_opt->excludes(tk_opt);

  TrainFlags grid_flags;
  auto* grid = app.add_subcommand("grid", "grid search over k on the simplex");
  add_common(grid, grid_flags);
  grid->add_option("--grid-step", grid_flags.grid_step, "simplex grid spacing");

  InspectFlags inspect_flags;
  auto* inspect = app.add_subcommand("inspect", "print propagator statistics as JSON");
  inspect->add_option("--dataset", inspect_flags.dataset, "PANDS file")->required();
  inspect->add_option("--method", inspect_flags.method, "propagator variant 1-7")->required();
  inspect->add_option("--L", inspect_flags.cutoff, "maximal path length")->required();
  inspect->add_option("--k", inspect_flags.k, "path weights k0,k1,...")->required();

  EvalFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "accuracy of a saved model");
  eval->add_option("--dataset", eval_flags.dataset, "PANDS file")->required();
  eval->add_option("--model", eval_flags.model, "checkpoint path without extension")->required();
  eval->add_option("--split", eval_flags.split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a dataset file");
  validate->add_option("--dataset", validate_path, "PANDS file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_flags);
    if (*grid) return cmd_grid(grid_flags);
    if (*inspect) return cmd_inspect(inspect_flags);
    if (*eval) return cmd_eval(eval_flags);
    if (*validate) return cmd_validate(validate_path);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const RuntimeFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
