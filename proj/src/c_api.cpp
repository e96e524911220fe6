#include "pan/pan.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <optional>
#include <string>

#include "pan/data.hpp"
#include "pan/met.hpp"
#include "pan/nn.hpp"
#include "pan/train.hpp"

struct pan_dataset {
  pan::GraphDataset ds;
};

struct pan_propagator {
  pan::Propagator prop;
};

struct pan_trials {
  pan::TrialsResult result;
};

struct pan_grid {
  pan::GridResult result;
};

namespace {

thread_local std::string g_last_error;
thread_local std::optional<nlohmann::json> g_last_divergence;

pan_status status_of(pan::ErrorCode code) { return static_cast<pan_status>(code); }

template <typename F>
pan_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return PAN_OK;
  } catch (const pan::DivergenceError& e) {
    const auto& h = e.history();
    g_last_divergence = nlohmann::json{
        {"seed", e.seed()},          {"message", e.what()},   {"epochs", h.epochs()},
        {"train_loss", h.train_loss}, {"val_loss", h.val_loss}, {"val_acc", h.val_acc},
        {"best_epoch", h.best_epoch},
    };
    g_last_error = e.what();
    return PAN_ERR_DIVERGENCE;
  } catch (const pan::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("bad JSON: ") + e.what();
    return PAN_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PAN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PAN_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) pan::fail(pan::ErrorCode::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void give(char** out, const std::string& s) { *out = dup_string(s); }

nlohmann::json parse_json(const char* text) {
  require(text != nullptr, "null JSON text");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    pan::fail(pan::ErrorCode::InvalidArgument, std::string("bad JSON: ") + e.what());
  }
}

pan::TrainConfig parse_train_config(const char* text) {
  auto cfg = pan::TrainConfig::from_json(parse_json(text));
  cfg.validate();
  return cfg;
}

pan::PropagatorConfig parse_propagator_config(const char* text) {
  const auto j = parse_json(text);
  pan::PropagatorConfig cfg;
  cfg.method = j.value("method", cfg.method);
  if (cfg.method < pan::kMinMethod || cfg.method > pan::kMaxMethod) {
    pan::fail(pan::ErrorCode::InvalidArgument, "method must be in 1..7");
  }
  cfg.cutoff = j.value("L", cfg.cutoff);
  require(j.contains("k"), "propagator config needs k");
  auto k = j.at("k").get<std::vector<double>>();
  if (k.size() != cfg.cutoff + 1) {
    pan::fail(pan::ErrorCode::InvalidArgument,
              "k needs L + 1 = " + std::to_string(cfg.cutoff + 1) + " values");
  }
  for (double v : k) require(std::isfinite(v) && v >= 0.0, "k values must be finite and >= 0");
  cfg.weights = pan::EnergyForm::explicit_weights(std::move(k));
  return cfg;
}

pan::Split to_split(pan_split s) {
  switch (s) {
    case PAN_SPLIT_TRAIN:
      return pan::Split::Train;
    case PAN_SPLIT_VAL:
      return pan::Split::Val;
    case PAN_SPLIT_TEST:
      return pan::Split::Test;
  }
  pan::fail(pan::ErrorCode::InvalidArgument, "unknown split");
}

}  // namespace

extern "C" {

const char* pan_version(void) { return "1.0.0"; }

const char* pan_status_name(pan_status status) {
  if (status == PAN_OK) return "Ok";
  if (status == PAN_ERR_INTERNAL) return "Internal";
  if (status >= PAN_ERR_INVALID_ARGUMENT && status <= PAN_ERR_DIVERGENCE) {
    return pan::error_code_name(static_cast<pan::ErrorCode>(status));
  }
  return "Unknown";
}

const char* pan_last_error(void) { return g_last_error.c_str(); }

void pan_string_free(char* s) { std::free(s); }

uint32_t pan_crc32(const void* data, size_t size) { return pan::crc32_of(data, size); }

pan_status pan_dataset_load(const char* path, int normalize_features, pan_dataset** out) {
  return guarded([&] {
    require(path && out, "null argument");
    pan::LoadOptions opts;
    opts.normalize_features = normalize_features != 0;
    *out = new pan_dataset{pan::load_dataset(path, opts)};
  });
}

void pan_dataset_free(pan_dataset* ds) { delete ds; }

pan_status pan_dataset_info_json(const pan_dataset* ds, char** out_json) {
  return guarded([&] {
    require(ds && out_json, "null argument");
    const auto& d = ds->ds;
    give(out_json, nlohmann::json{{"n_nodes", d.n_nodes()},
                                  {"n_edges", d.adjacency.nnz() / 2},
                                  {"n_features", d.n_features()},
                                  {"n_classes", d.n_classes},
                                  {"checksum", d.checksum}}
                       .dump());
  });
}

pan_status pan_dataset_validate_file(const char* path, char** out_json, int* out_ok) {
  return guarded([&] {
    require(path && out_json && out_ok, "null argument");
    const auto report = pan::validate_dataset(pan::read_dataset(path));
    *out_ok = report.ok ? 1 : 0;
    give(out_json, report.to_json().dump(2));
  });
}

pan_status pan_propagator_config_check(const char* config_json) {
  return guarded([&] { parse_propagator_config(config_json); });
}

pan_status pan_propagator_build(const pan_dataset* ds, const char* config_json,
                                pan_propagator** out) {
  return guarded([&] {
    require(ds && out, "null argument");
    const auto cfg = parse_propagator_config(config_json);
    *out = new pan_propagator{pan::build_propagator(ds->ds.graph(), cfg)};
  });
}

void pan_propagator_free(pan_propagator* p) { delete p; }

pan_status pan_propagator_inspect_json(const pan_propagator* p, char** out_json) {
  return guarded([&] {
    require(p && out_json, "null argument");
    give(out_json, pan::inspect_propagator(p->prop).dump(2));
  });
}

pan_status pan_train_config_default(const char* preset, char** out_json) {
  return guarded([&] {
    require(out_json != nullptr, "null argument");
    pan::TrainConfig cfg;
    if (preset && !pan::apply_preset(cfg, preset)) {
      pan::fail(pan::ErrorCode::InvalidArgument, std::string("unknown preset '") + preset + "'");
    }
    give(out_json, cfg.to_json().dump());
  });
}

pan_status pan_train_config_check(const char* config_json, char** out_json) {
  return guarded([&] {
    const auto cfg = parse_train_config(config_json);
    if (out_json) give(out_json, cfg.to_json().dump());
  });
}

pan_status pan_run_trials(const pan_dataset* ds, const char* config_json, size_t n_trials,
                          uint64_t base_seed, size_t jobs, pan_trials** out) {
  g_last_divergence.reset();
  return guarded([&] {
    require(ds && out, "null argument");
    const auto cfg = parse_train_config(config_json);
    *out = new pan_trials{pan::run_trials(ds->ds, cfg, n_trials, base_seed, jobs)};
  });
}

pan_status pan_last_divergence_json(char** out_json) {
  return guarded([&] {
    require(out_json != nullptr, "null argument");
    if (!g_last_divergence) pan::fail(pan::ErrorCode::InvalidArgument, "no divergence recorded");
    give(out_json, g_last_divergence->dump());
  });
}

void pan_trials_free(pan_trials* t) { delete t; }

pan_status pan_trials_summary(const pan_trials* t, double* test_mean, double* test_std) {
  return guarded([&] {
    require(t && test_mean && test_std, "null argument");
    *test_mean = t->result.test_acc_mean;
    *test_std = t->result.test_acc_std;
  });
}

pan_status pan_trials_manifest_json(const pan_trials* t, const pan_dataset* ds,
                                    const char* dataset_path, char** out_json) {
  return guarded([&] {
    require(t && ds && dataset_path && out_json, "null argument");
    give(out_json, pan::trials_manifest(t->result, ds->ds, dataset_path).dump(2));
  });
}

pan_status pan_trials_curves_csv(const pan_trials* t, char** out_csv) {
  return guarded([&] {
    require(t && out_csv, "null argument");
    give(out_csv, pan::curves_csv(t->result));
  });
}

pan_status pan_trials_curves_summary_csv(const pan_trials* t, char** out_csv) {
  return guarded([&] {
    require(t && out_csv, "null argument");
    give(out_csv, pan::curves_summary_csv(t->result));
  });
}

pan_status pan_trials_save_models(const pan_trials* t, const pan_dataset* ds, const char* dir) {
  return guarded([&] {
    require(t && ds && dir, "null argument");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) pan::fail(pan::ErrorCode::Io, std::string("cannot create ") + dir);
    for (const auto& trial : t->result.trials) {
      pan::TrainConfig cfg = t->result.config;
      cfg.seed = trial.seed;
      const nlohmann::json meta = {{"config", cfg.to_json()},
                                   {"dataset_checksum", ds->ds.checksum},
                                   {"test_acc", trial.test_acc}};
      pan::save_checkpoint(std::string(dir) + "/model_seed" + std::to_string(trial.seed),
                           trial.params, meta);
    }
  });
}

pan_status pan_model_evaluate(const char* model_stem, const pan_dataset* ds, pan_split split,
                              double* out_accuracy) {
  return guarded([&] {
    require(model_stem && ds && out_accuracy, "null argument");
    const auto ckpt = pan::load_checkpoint(model_stem);
    const auto& meta = ckpt.manifest.at("metadata");
    const auto cfg = pan::TrainConfig::from_json(meta.at("config"));
    cfg.validate();
    pan::Propagator prop = pan::build_train_propagator(ds->ds, cfg);
    if (cfg.k_mode == pan::KMode::Fixed) prop = prop.with_weights(cfg.k).fused();
    *out_accuracy = pan::evaluate(ckpt.params, ds->ds, prop, to_split(split));
  });
}

pan_status pan_grid_size(size_t cutoff, double step, size_t* out_size) {
  return guarded([&] {
    require(out_size != nullptr, "null argument");
    *out_size = pan::simplex_grid(cutoff, step).size();
  });
}

pan_status pan_grid_search(const pan_dataset* ds, const char* config_json, double step,
                           size_t n_trials, uint64_t base_seed, size_t jobs, pan_grid** out) {
  g_last_divergence.reset();
  return guarded([&] {
    require(ds && out, "null argument");
    auto json = parse_json(config_json);
    json["k_mode"] = "fixed";
    pan::TrainConfig cfg = pan::TrainConfig::from_json(json);
    const auto grid = pan::simplex_grid(cfg.cutoff, step);
    cfg.k = grid.front();
    cfg.validate();
    *out = new pan_grid{pan::grid_search_k(ds->ds, cfg, grid, n_trials, base_seed, jobs)};
  });
}

void pan_grid_free(pan_grid* g) { delete g; }

pan_status pan_grid_csv(const pan_grid* g, char** out_csv) {
  return guarded([&] {
    require(g && out_csv, "null argument");
    give(out_csv, pan::grid_csv(g->result));
  });
}

pan_status pan_grid_manifest_json(const pan_grid* g, const pan_dataset* ds,
                                  const char* dataset_path, char** out_json) {
  return guarded([&] {
    require(g && ds && dataset_path && out_json, "null argument");
    give(out_json, pan::grid_manifest(g->result, ds->ds, dataset_path).dump(2));
  });
}

pan_status pan_grid_best_json(const pan_grid* g, char** out_json) {
  return guarded([&] {
    require(g && out_json, "null argument");
    const auto& r = g->result.rows.at(g->result.best);
    give(out_json, nlohmann::json{{"index", g->result.best},
                                  {"k", r.k},
                                  {"mean_val_acc", r.mean_val_acc},
                                  {"std_val_acc", r.std_val_acc},
                                  {"mean_test_acc", r.mean_test_acc},
                                  {"mean_val_loss", r.mean_val_loss}}
                       .dump());
  });
}

}  // extern "C"
