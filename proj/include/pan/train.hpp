#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pan/data.hpp"
#include "pan/error.hpp"
#include "pan/met.hpp"
#include "pan/nn.hpp"

namespace pan {

enum class KMode { Backprop, Fixed };

/// Hyperparameters of one training run. With KMode::Fixed, `k` holds the
/// L + 1 path-length weights; with KMode::Backprop it is the initial value
/// (empty selects default_initial_k()).
struct TrainConfig {
  int method = 5;
  std::size_t cutoff = 2;
  double lr = 0.01;
  double dropout = 0.5;
  double weight_decay = 5e-3;
  std::size_t max_epochs = 200;
  std::size_t patience = 50;
  std::size_t hidden = 16;
  std::uint64_t seed = 0;
  KMode k_mode = KMode::Fixed;
  std::vector<double> k{0.0, 0.5, 0.5};

  /// Throws InvalidArgument on any broken field.
  void validate() const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// 1/(L+1) each for the per-term methods, 1 each for methods 1, 2 and 7.
std::vector<double> default_initial_k(int method, std::size_t cutoff);

/// Dataset defaults (dropout, weight decay, epochs, patience) for
/// "cora", "citeseer" and "pubmed". Other fields keep their values.
bool apply_preset(TrainConfig& cfg, std::string_view name);

struct TrainHistory {
  std::vector<double> train_loss;  // cross-entropy plus the L2 term
  std::vector<double> val_loss;    // cross-entropy only
  std::vector<double> val_acc;
  std::size_t best_epoch = 0;  // 1-based
  std::size_t stop_epoch = 0;
  double seconds = 0.0;

  std::size_t epochs() const noexcept { return val_loss.size(); }
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, TrainHistory history, std::uint64_t seed)
      : Error(ErrorCode::Divergence, what), history_(std::move(history)), seed_(seed) {}

  const TrainHistory& history() const noexcept { return history_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  TrainHistory history_;
  std::uint64_t seed_;
};

/// Stops once `patience` consecutive epochs bring no strict improvement of the
/// best validation loss so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  /// Records the loss of the next epoch. Returns true when it is the new best.
  bool observe(double val_loss);
  bool should_stop() const noexcept { return since_best_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_loss_;
};

struct TrainResult {
  ModelParams params;  // restored to the best-validation-loss epoch
  TrainHistory history;
};

/// Propagator for `cfg` on the dataset graph. For Backprop mode its weights
/// are the initial k.
Propagator build_train_propagator(const GraphDataset& ds, const TrainConfig& cfg);

TrainResult train_model(const GraphDataset& ds, const TrainConfig& cfg);
/// Same, reusing a propagator built by build_train_propagator for `cfg`.
TrainResult train_model(const GraphDataset& ds, const Propagator& prop, const TrainConfig& cfg);

/// Fraction of masked rows whose argmax logit equals the label. Ties go to
/// the lowest class index.
double accuracy(const DenseMatrix& logits, std::span<const std::int32_t> labels,
                std::span<const std::uint8_t> mask);

/// Inference-mode accuracy on one split.
double evaluate(const ModelParams& params, const GraphDataset& ds, const Propagator& prop,
                Split split);

struct TrialRecord {
  std::uint64_t seed = 0;
  double test_acc = 0.0;
  double val_acc = 0.0;   // at the restored epoch
  double val_loss = 0.0;  // best validation loss
  std::vector<double> k1;
  std::vector<double> k2;
  TrainHistory history;
  ModelParams params;
};

struct CurvePoint {
  std::size_t epoch = 0;
  double train_loss_mean = 0.0, train_loss_std = 0.0;
  double val_loss_mean = 0.0, val_loss_std = 0.0;
  double val_acc_mean = 0.0, val_acc_std = 0.0;
  std::size_t active_trials = 0;  // trials not yet padded at this epoch
};

struct TrialsResult {
  TrainConfig config;
  std::vector<TrialRecord> trials;  // ordered by seed
  double test_acc_mean = 0.0;
  double test_acc_std = 0.0;  // population standard deviation
  double val_acc_mean = 0.0;
  double val_acc_std = 0.0;
  std::vector<CurvePoint> curves;
  bool padded = false;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(std::span<const double> values);

/// Per-epoch statistics over histories of unequal length; a finished history
/// keeps contributing its last value.
std::vector<CurvePoint> aggregate_curves(const std::vector<const TrainHistory*>& histories,
                                         bool* padded = nullptr);

/// Trains seeds base_seed .. base_seed + n_trials - 1 (cfg.seed is ignored) on
/// up to `jobs` threads. Results do not depend on `jobs`.
TrialsResult run_trials(const GraphDataset& ds, const TrainConfig& cfg, std::size_t n_trials,
                        std::uint64_t base_seed, std::size_t jobs = 1);

/// All length-(L+1) vectors with entries in {0, step, 2 step, ..., 1} summing
/// to 1, in lexicographic order of (k0, k1, ...). 1/step must be an integer.
std::vector<std::vector<double>> simplex_grid(std::size_t cutoff, double step);

struct GridRow {
  std::vector<double> k;
  double mean_val_acc = 0.0;
  double std_val_acc = 0.0;
  double mean_test_acc = 0.0;
  double mean_val_loss = 0.0;
};

/// Highest mean_val_acc, then lowest mean_val_loss, then the earliest row.
std::size_t select_best(const std::vector<GridRow>& rows);

struct GridResult {
  std::vector<GridRow> rows;  // grid order
  std::size_t best = 0;
  std::vector<TrialsResult> candidates;
};

/// Runs the trial protocol for every candidate with k fixed and shared by both
/// layers.
GridResult grid_search_k(const GraphDataset& ds, const TrainConfig& cfg,
                         const std::vector<std::vector<double>>& grid, std::size_t n_trials,
                         std::uint64_t base_seed, std::size_t jobs = 1);

/// CSV writers; numbers are printed with 17 significant digits.
std::string curves_csv(const TrialsResult& result);
std::string curves_summary_csv(const TrialsResult& result);
std::string grid_csv(const GridResult& result);
std::vector<GridRow> parse_grid_csv(const std::string& csv);

/// Config, seeds, dataset checksum, per-trial results. No timings.
nlohmann::json trials_manifest(const TrialsResult& result, const GraphDataset& ds,
                               const std::string& dataset_path);
nlohmann::json grid_manifest(const GridResult& result, const GraphDataset& ds,
                             const std::string& dataset_path);

}  // namespace pan
