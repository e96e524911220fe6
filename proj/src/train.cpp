#include "pan/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace pan {

namespace {

const char* k_mode_name(KMode m) { return m == KMode::Backprop ? "backprop" : "fixed"; }

bool uses_partition(int method) { return method == 1 || method == 2 || method == 7; }

template <typename F>
void parallel_for(std::size_t n, std::size_t jobs, F&& body) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double l2_half(const DenseMatrix& w) {
  double s = 0.0;
  for (double v : w.data()) s += v * v;
  return 0.5 * s;
}

TrialRecord run_one(const GraphDataset& ds, const Propagator& prop, const TrainConfig& cfg) {
  TrainResult r = train_model(ds, prop, cfg);
  const Propagator used = cfg.k_mode == KMode::Fixed ? prop.with_weights(cfg.k).fused() : prop;
  TrialRecord rec;
  rec.seed = cfg.seed;
  rec.test_acc = evaluate(r.params, ds, used, Split::Test);
  rec.val_acc = evaluate(r.params, ds, used, Split::Val);
  rec.val_loss = r.history.val_loss.at(r.history.best_epoch - 1);
  rec.k1 = r.params.k1;
  rec.k2 = r.params.k2;
  rec.history = std::move(r.history);
  rec.params = std::move(r.params);
  return rec;
}

TrialsResult summarize(const TrainConfig& cfg, std::vector<TrialRecord> trials) {
  TrialsResult out;
  out.config = cfg;
  out.trials = std::move(trials);
  std::vector<double> test, val;
  std::vector<const TrainHistory*> histories;
  for (const auto& t : out.trials) {
    test.push_back(t.test_acc);
    val.push_back(t.val_acc);
    histories.push_back(&t.history);
  }
  const MeanStd ts = mean_std(test), vs = mean_std(val);
  out.test_acc_mean = ts.mean;
  out.test_acc_std = ts.std;
  out.val_acc_mean = vs.mean;
  out.val_acc_std = vs.std;
  out.curves = aggregate_curves(histories, &out.padded);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::InvalidArgument, what); };
  if (method < kMinMethod || method > kMaxMethod) bad("method must be in 1..7");
  if (!(lr > 0.0) || !std::isfinite(lr)) bad("lr must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must be in [0, 1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) bad("weight_decay must be >= 0");
  if (max_epochs < 1) bad("max_epochs must be >= 1");
  if (patience < 1) bad("patience must be >= 1");
  if (hidden < 1) bad("hidden must be >= 1");
  if (k_mode == KMode::Fixed && k.size() != cutoff + 1) {
    bad("fixed k needs L + 1 = " + std::to_string(cutoff + 1) + " values");
  }
  if (k_mode == KMode::Backprop && !k.empty() && k.size() != cutoff + 1) {
    bad("initial k needs L + 1 = " + std::to_string(cutoff + 1) + " values");
  }
  for (double v : k) {
    if (!(v >= 0.0) || !std::isfinite(v)) bad("k values must be finite and >= 0");
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {
      {"method", method},         {"L", cutoff},
      {"lr", lr},                 {"dropout", dropout},
      {"weight_decay", weight_decay}, {"max_epochs", max_epochs},
      {"patience", patience},     {"hidden", hidden},
      {"seed", seed},             {"k_mode", k_mode_name(k_mode)},
      {"k", k},
  };
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  try {
    cfg.method = j.value("method", cfg.method);
    cfg.cutoff = j.value("L", cfg.cutoff);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.dropout = j.value("dropout", cfg.dropout);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
    cfg.patience = j.value("patience", cfg.patience);
    cfg.hidden = j.value("hidden", cfg.hidden);
    cfg.seed = j.value("seed", cfg.seed);
    const std::string mode = j.value("k_mode", std::string(k_mode_name(cfg.k_mode)));
    if (mode == "backprop") {
      cfg.k_mode = KMode::Backprop;
    } else if (mode == "fixed") {
      cfg.k_mode = KMode::Fixed;
    } else {
      fail(ErrorCode::InvalidArgument, "k_mode must be 'fixed' or 'backprop'");
    }
    if (j.contains("k")) {
      cfg.k = j.at("k").get<std::vector<double>>();
    } else if (cfg.k_mode == KMode::Backprop) {
      cfg.k.clear();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("bad train config: ") + e.what());
  }
  return cfg;
}

std::vector<double> default_initial_k(int method, std::size_t cutoff) {
  if (uses_partition(method)) return std::vector<double>(cutoff + 1, 1.0);
  return std::vector<double>(cutoff + 1, 1.0 / static_cast<double>(cutoff + 1));
}

bool apply_preset(TrainConfig& cfg, std::string_view name) {
  struct Preset {
    std::string_view name;
    double dropout, weight_decay;
    std::size_t max_epochs, patience;
  };
  static constexpr Preset kPresets[] = {
      {"cora", 0.5, 5e-3, 200, 50},
      {"citeseer", 0.5, 1e-2, 200, 50},
      {"pubmed", 0.4, 3e-3, 100, 15},
  };
  for (const auto& p : kPresets) {
    if (p.name == name) {
      cfg.dropout = p.dropout;
      cfg.weight_decay = p.weight_decay;
      cfg.max_epochs = p.max_epochs;
      cfg.patience = p.patience;
      return true;
    }
  }
  return false;
}

EarlyStopping::EarlyStopping(std::size_t patience)
    : patience_(patience), best_loss_(std::numeric_limits<double>::infinity()) {
  if (patience < 1) fail(ErrorCode::InvalidArgument, "patience must be >= 1");
}

bool EarlyStopping::observe(double val_loss) {
  ++epoch_;
  if (val_loss < best_loss_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

Propagator build_train_propagator(const GraphDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  PropagatorConfig pc;
  pc.method = cfg.method;
  pc.cutoff = cfg.cutoff;
  const bool backprop = cfg.k_mode == KMode::Backprop;
  pc.weights = EnergyForm::explicit_weights(
      backprop && cfg.k.empty() ? default_initial_k(cfg.method, cfg.cutoff) : cfg.k);
  pc.trainable_k = backprop;
  return build_propagator(ds.graph(), pc);
}

TrainResult train_model(const GraphDataset& ds, const TrainConfig& cfg) {
  return train_model(ds, build_train_propagator(ds, cfg), cfg);
}

TrainResult train_model(const GraphDataset& ds, const Propagator& prop, const TrainConfig& cfg) {
  cfg.validate();
  if (prop.method() != cfg.method || prop.cutoff() != cfg.cutoff) {
    fail(ErrorCode::InvalidArgument, "propagator was built for a different method or L");
  }
  if (prop.n_nodes() != ds.n_nodes()) {
    fail(ErrorCode::ShapeMismatch, "propagator and dataset differ in node count");
  }
  const auto start = std::chrono::steady_clock::now();
  const bool backprop = cfg.k_mode == KMode::Backprop;
  Rng rng(cfg.seed);
  const std::vector<double> initial_k =
      backprop ? (cfg.k.empty() ? default_initial_k(cfg.method, cfg.cutoff) : cfg.k)
               : std::vector<double>{};
  ModelParams params =
      init_model(ds.n_features(), cfg.hidden, ds.n_classes, initial_k, backprop, rng);
  const Propagator fixed = backprop ? prop : prop.with_weights(cfg.k).fused();

  AdamConfig adam;
  adam.lr = cfg.lr;
  AdamState state;
  EarlyStopping stopper(cfg.patience);
  ModelParams best = params;
  TrainResult result;
  TrainHistory& h = result.history;

  auto diverged = [&](const std::string& what) {
    h.stop_epoch = h.epochs();
    h.best_epoch = stopper.best_epoch();
    h.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    throw DivergenceError("training diverged at epoch " + std::to_string(h.epochs() + 1) +
                              " (seed " + std::to_string(cfg.seed) + "): " + what,
                          h, cfg.seed);
  };

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double train_loss = 0.0, val_loss = 0.0, val_acc = 0.0;
    try {
      ModelPass pass = model_forward(params, ds.features, fixed, cfg.dropout, &rng);
      LossResult loss = softmax_cross_entropy(pass.logits, ds.labels, ds.train_mask);
      train_loss = loss.loss + cfg.weight_decay * l2_half(params.w1);
      if (!std::isfinite(train_loss)) diverged("non-finite training loss");
      ModelGrads grads = model_backward(pass, loss.d_logits);
      adam_step(params, grads, state, adam, cfg.weight_decay);

      ModelPass eval = model_forward(params, ds.features, fixed, 0.0, nullptr);
      val_loss = softmax_cross_entropy(eval.logits, ds.labels, ds.val_mask).loss;
      if (!std::isfinite(val_loss)) diverged("non-finite validation loss");
      val_acc = accuracy(eval.logits, ds.labels, ds.val_mask);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFinite) throw;
      diverged(e.what());
    }
    h.train_loss.push_back(train_loss);
    h.val_loss.push_back(val_loss);
    h.val_acc.push_back(val_acc);
    if (stopper.observe(val_loss)) best = params;
    if (stopper.should_stop()) break;
  }
  h.best_epoch = stopper.best_epoch();
  h.stop_epoch = h.epochs();
  h.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.params = std::move(best);
  return result;
}

double accuracy(const DenseMatrix& logits, std::span<const std::int32_t> labels,
                std::span<const std::uint8_t> mask) {
  if (labels.size() != logits.rows() || mask.size() != logits.rows()) {
    fail(ErrorCode::ShapeMismatch, "logits, labels and mask disagree in length");
  }
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    ++total;
    auto row = logits.row(i);
    const auto arg = static_cast<std::int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
    if (arg == labels[i]) ++correct;
  }
  if (total == 0) fail(ErrorCode::EmptyMask, "accuracy over an empty mask");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double evaluate(const ModelParams& params, const GraphDataset& ds, const Propagator& prop,
                Split split) {
  if (params.w1.rows() != ds.n_features() || params.w2.cols() != ds.n_classes) {
    fail(ErrorCode::ShapeMismatch, "model shapes do not match the dataset");
  }
  const auto& mask = ds.mask(split);
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
    fail(ErrorCode::EmptyMask, std::string("empty ") + split_name(split) + " mask");
  }
  ModelPass pass = model_forward(params, ds.features, prop, 0.0, nullptr);
  return accuracy(pass.logits, ds.labels, mask);
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

std::vector<CurvePoint> aggregate_curves(const std::vector<const TrainHistory*>& histories,
                                         bool* padded) {
  std::size_t longest = 0, shortest = std::numeric_limits<std::size_t>::max();
  for (const auto* h : histories) {
    longest = std::max(longest, h->epochs());
    shortest = std::min(shortest, h->epochs());
  }
  if (padded) *padded = !histories.empty() && shortest != longest;
  std::vector<CurvePoint> curves;
  std::vector<double> tl, vl, va;
  for (std::size_t e = 0; e < longest; ++e) {
    tl.clear();
    vl.clear();
    va.clear();
    CurvePoint p;
    p.epoch = e + 1;
    for (const auto* h : histories) {
      if (h->epochs() == 0) continue;
      const std::size_t i = std::min(e, h->epochs() - 1);
      if (e < h->epochs()) ++p.active_trials;
      tl.push_back(h->train_loss[i]);
      vl.push_back(h->val_loss[i]);
      va.push_back(h->val_acc[i]);
    }
    const MeanStd a = mean_std(tl), b = mean_std(vl), c = mean_std(va);
    p.train_loss_mean = a.mean;
    p.train_loss_std = a.std;
    p.val_loss_mean = b.mean;
    p.val_loss_std = b.std;
    p.val_acc_mean = c.mean;
    p.val_acc_std = c.std;
    curves.push_back(p);
  }
  return curves;
}

TrialsResult run_trials(const GraphDataset& ds, const TrainConfig& cfg, std::size_t n_trials,
                        std::uint64_t base_seed, std::size_t jobs) {
  if (n_trials < 1) fail(ErrorCode::InvalidArgument, "n_trials must be >= 1");
  const Propagator prop = build_train_propagator(ds, cfg);
  std::vector<TrialRecord> trials(n_trials);
  parallel_for(n_trials, jobs, [&](std::size_t i) {
    TrainConfig c = cfg;
    c.seed = base_seed + i;
    trials[i] = run_one(ds, prop, c);
  });
  TrainConfig reported = cfg;
  reported.seed = base_seed;
  return summarize(reported, std::move(trials));
}

std::vector<std::vector<double>> simplex_grid(std::size_t cutoff, double step) {
  if (!(step > 0.0) || step > 1.0 || !std::isfinite(step)) {
    fail(ErrorCode::InvalidArgument, "grid step must be in (0, 1]");
  }
  const double parts = 1.0 / step;
  const auto m = static_cast<std::size_t>(std::llround(parts));
  if (std::abs(parts - static_cast<double>(m)) > 1e-9) {
    fail(ErrorCode::InvalidArgument, "1 / grid step must be an integer");
  }
  std::vector<std::vector<double>> grid;
  std::vector<std::size_t> counts(cutoff + 1, 0);
  auto fill = [&](auto& self, std::size_t pos, std::size_t remaining) -> void {
    if (pos == cutoff) {
      counts[pos] = remaining;
      std::vector<double> k(cutoff + 1);
      for (std::size_t n = 0; n <= cutoff; ++n) {
        k[n] = static_cast<double>(counts[n]) / static_cast<double>(m);
      }
      grid.push_back(std::move(k));
      return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
      counts[pos] = c;
      self(self, pos + 1, remaining - c);
    }
  };
  fill(fill, 0, m);
  return grid;
}

std::size_t select_best(const std::vector<GridRow>& rows) {
  if (rows.empty()) fail(ErrorCode::InvalidArgument, "empty grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto& b = rows[best];
    if (r.mean_val_acc > b.mean_val_acc ||
        (r.mean_val_acc == b.mean_val_acc && r.mean_val_loss < b.mean_val_loss)) {
      best = i;
    }
  }
  return best;
}

GridResult grid_search_k(const GraphDataset& ds, const TrainConfig& cfg,
                         const std::vector<std::vector<double>>& grid, std::size_t n_trials,
                         std::uint64_t base_seed, std::size_t jobs) {
  if (grid.empty()) fail(ErrorCode::InvalidArgument, "empty grid");
  if (n_trials < 1) fail(ErrorCode::InvalidArgument, "n_trials must be >= 1");
  std::vector<TrainConfig> configs;
  for (const auto& k : grid) {
    TrainConfig c = cfg;
    c.k_mode = KMode::Fixed;
    c.k = k;
    c.validate();
    configs.push_back(std::move(c));
  }
  const Propagator prop = build_train_propagator(ds, configs.front());

  std::vector<TrialRecord> records(grid.size() * n_trials);
  parallel_for(records.size(), jobs, [&](std::size_t task) {
    TrainConfig c = configs[task / n_trials];
    c.seed = base_seed + task % n_trials;
    records[task] = run_one(ds, prop, c);
    records[task].params = {};
  });

  GridResult out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<TrialRecord> trials(std::make_move_iterator(records.begin() + g * n_trials),
                                    std::make_move_iterator(records.begin() + (g + 1) * n_trials));
    TrainConfig reported = configs[g];
    reported.seed = base_seed;
    TrialsResult tr = summarize(reported, std::move(trials));
    GridRow row;
    row.k = grid[g];
    row.mean_val_acc = tr.val_acc_mean;
    row.std_val_acc = tr.val_acc_std;
    row.mean_test_acc = tr.test_acc_mean;
    std::vector<double> losses;
    for (const auto& t : tr.trials) losses.push_back(t.val_loss);
    row.mean_val_loss = mean_std(losses).mean;
    out.rows.push_back(std::move(row));
    out.candidates.push_back(std::move(tr));
  }
  out.best = select_best(out.rows);
  return out;
}

std::string curves_csv(const TrialsResult& result) {
  std::string out = "epoch,train_loss,val_loss,val_acc,trial_id,padded\n";
  std::size_t longest = 0;
  for (const auto& t : result.trials) longest = std::max(longest, t.history.epochs());
  for (const auto& t : result.trials) {
    const auto& h = t.history;
    if (h.epochs() == 0) continue;
    for (std::size_t e = 0; e < longest; ++e) {
      const std::size_t i = std::min(e, h.epochs() - 1);
      out += std::to_string(e + 1) + ',' + fmt(h.train_loss[i]) + ',' + fmt(h.val_loss[i]) + ',' +
             fmt(h.val_acc[i]) + ',' + std::to_string(t.seed) + ',' + (e < h.epochs() ? "0" : "1") +
             '\n';
    }
  }
  return out;
}

std::string curves_summary_csv(const TrialsResult& result) {
  std::string out =
      "epoch,train_loss_mean,train_loss_std,val_loss_mean,val_loss_std,val_acc_mean,"
      "val_acc_std,active_trials\n";
  for (const auto& p : result.curves) {
    out += std::to_string(p.epoch) + ',' + fmt(p.train_loss_mean) + ',' + fmt(p.train_loss_std) +
           ',' + fmt(p.val_loss_mean) + ',' + fmt(p.val_loss_std) + ',' + fmt(p.val_acc_mean) +
           ',' + fmt(p.val_acc_std) + ',' + std::to_string(p.active_trials) + '\n';
  }
  return out;
}

std::string grid_csv(const GridResult& result) {
  std::string out;
  const std::size_t width = result.rows.empty() ? 0 : result.rows.front().k.size();
  for (std::size_t n = 0; n < width; ++n) out += "k" + std::to_string(n) + ',';
  out += "mean_val_acc,std,mean_test_acc,mean_val_loss\n";
  for (const auto& r : result.rows) {
    for (double k : r.k) out += fmt(k) + ',';
    out += fmt(r.mean_val_acc) + ',' + fmt(r.std_val_acc) + ',' + fmt(r.mean_test_acc) + ',' +
           fmt(r.mean_val_loss) + '\n';
  }
  return out;
}

std::vector<GridRow> parse_grid_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  if (!std::getline(in, line)) fail(ErrorCode::Format, "grid CSV has no header");
  const auto header = split(line);
  std::vector<std::size_t> k_cols;
  std::size_t acc = SIZE_MAX, sd = SIZE_MAX, test = SIZE_MAX, loss = SIZE_MAX;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h == "k" + std::to_string(k_cols.size())) {
      k_cols.push_back(c);
    } else if (h == "mean_val_acc") {
      acc = c;
    } else if (h == "std") {
      sd = c;
    } else if (h == "mean_test_acc") {
      test = c;
    } else if (h == "mean_val_loss") {
      loss = c;
    }
  }
  if (k_cols.empty() || acc == SIZE_MAX || sd == SIZE_MAX || test == SIZE_MAX || loss == SIZE_MAX) {
    fail(ErrorCode::Format, "grid CSV header lacks required columns");
  }
  auto number = [](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') fail(ErrorCode::Format, "bad number '" + s + "' in grid CSV");
    return v;
  };
  std::vector<GridRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) fail(ErrorCode::Format, "ragged grid CSV row");
    GridRow r;
    for (auto c : k_cols) r.k.push_back(number(cells[c]));
    r.mean_val_acc = number(cells[acc]);
    r.std_val_acc = number(cells[sd]);
    r.mean_test_acc = number(cells[test]);
    r.mean_val_loss = number(cells[loss]);
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

nlohmann::json dataset_json(const GraphDataset& ds, const std::string& path) {
  return {{"path", path},
          {"checksum", ds.checksum},
          {"n_nodes", ds.n_nodes()},
          {"features_normalized", ds.features_normalized}};
}

}  // namespace

nlohmann::json trials_manifest(const TrialsResult& result, const GraphDataset& ds,
                               const std::string& dataset_path) {
  nlohmann::json trials = nlohmann::json::array();
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& t : result.trials) {
    seeds.push_back(t.seed);
    nlohmann::json rec = {
        {"seed", t.seed},
        {"test_acc", t.test_acc},
        {"val_acc", t.val_acc},
        {"val_loss", t.val_loss},
        {"best_epoch", t.history.best_epoch},
        {"stop_epoch", t.history.stop_epoch},
    };
    if (!t.k1.empty()) {
      rec["k1"] = t.k1;
      rec["k2"] = t.k2;
    }
    trials.push_back(std::move(rec));
  }
  return {
      {"format", "pan-run"},
      {"version", 1},
      {"config", result.config.to_json()},
      {"dataset", dataset_json(ds, dataset_path)},
      {"seeds", seeds},
      {"trials", trials},
      {"summary",
       {{"test_acc_mean", result.test_acc_mean},
        {"test_acc_std", result.test_acc_std},
        {"val_acc_mean", result.val_acc_mean},
        {"val_acc_std", result.val_acc_std}}},
      {"curves", {{"padded", result.padded}, {"epochs", result.curves.size()}}},
  };
}

nlohmann::json grid_manifest(const GridResult& result, const GraphDataset& ds,
                             const std::string& dataset_path) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"k", r.k},
                    {"mean_val_acc", r.mean_val_acc},
                    {"std_val_acc", r.std_val_acc},
                    {"mean_test_acc", r.mean_test_acc},
                    {"mean_val_loss", r.mean_val_loss}});
  }
  nlohmann::json out = {
      {"format", "pan-grid"},
      {"version", 1},
      {"dataset", dataset_json(ds, dataset_path)},
      {"rows", rows},
      {"best", result.best},
  };
  if (!result.candidates.empty()) {
    TrainConfig cfg = result.candidates.front().config;
    cfg.k.clear();
    out["config"] = cfg.to_json();
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& t : result.candidates.front().trials) seeds.push_back(t.seed);
    out["seeds"] = seeds;
  }
  if (!result.rows.empty()) out["best_k"] = result.rows[result.best].k;
  return out;
}

}  // namespace pan
