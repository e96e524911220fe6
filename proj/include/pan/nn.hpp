#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pan/dense.hpp"
#include "pan/met.hpp"
#include "pan/sparse.hpp"

namespace pan {

/// Seeded 64-bit Mersenne Twister with a fixed uniform mapping, so that the
/// same seed gives the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Uniform entries in [-b, b], b = sqrt(6 / (rows + cols)).
DenseMatrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng);

/// Per-entry multipliers of inverted dropout: 0 with probability `rate`,
/// otherwise 1 / (1 - rate).
std::vector<double> dropout_mask(std::size_t count, double rate, Rng& rng);

DenseMatrix dropout(const DenseMatrix& x, double rate, Rng& rng, bool training);

/// Dropout on the stored entries of a sparse matrix. Unstored zeros stay zero,
/// which matches dense inverted dropout entrywise.
SparseMatrix dropout(const SparseMatrix& x, double rate, Rng& rng, bool training);

enum class Activation { ReLU, None };

/// State kept by pan_layer_forward for the matching backward call. A cache is
/// consumed by its backward pass; reusing it raises StaleCache.
struct LayerCache {
  bool live = false;
  std::variant<std::monostate, DenseMatrix, SparseMatrix> input;
  DenseMatrix weight;
  std::optional<Propagator> propagator;
  bool k_supplied = false;
  Activation activation = Activation::None;
  DenseMatrix projected;                  // X W
  std::vector<DenseMatrix> term_outputs;  // T_n X W, or P_n Z^-1/2 X W for method 2
  DenseMatrix pre_activation;
};

struct LayerOutput {
  DenseMatrix y;
  LayerCache cache;
};

struct LayerGrads {
  DenseMatrix d_input;  // empty for sparse inputs
  DenseMatrix d_weight;
  std::optional<std::vector<double>> d_k;
};

/// Y = act(M X W), with M the propagator re-weighted by `k` when given.
LayerOutput pan_layer_forward(const DenseMatrix& x, const Propagator& prop,
                              const std::optional<std::vector<double>>& k,
                              const DenseMatrix& w, Activation activation,
                              std::string_view name = "pan_layer");
LayerOutput pan_layer_forward(const SparseMatrix& x, const Propagator& prop,
                              const std::optional<std::vector<double>>& k,
                              const DenseMatrix& w, Activation activation,
                              std::string_view name = "pan_layer");

/// For the partition-normalized methods (1, 2, 7) d_k is the gradient with
/// respect to the raw weights w_n, taken through the normalizer Z.
LayerGrads pan_layer_backward(LayerCache& cache, const DenseMatrix& d_y);

struct LossResult {
  double loss = 0.0;
  DenseMatrix d_logits;
};

DenseMatrix softmax(const DenseMatrix& logits);

/// Mean cross-entropy over masked rows; gradient rows outside the mask are 0.
LossResult softmax_cross_entropy(const DenseMatrix& logits, std::span<const std::int32_t> labels,
                                 std::span<const std::uint8_t> mask);

/// Two-layer model parameters. k1/k2 are empty unless k(n) is trained.
struct ModelParams {
  DenseMatrix w1;
  DenseMatrix w2;
  std::vector<double> k1;
  std::vector<double> k2;

  bool trainable_k() const noexcept { return !k1.empty(); }
};

struct ModelGrads {
  DenseMatrix w1;
  DenseMatrix w2;
  std::vector<double> k1;
  std::vector<double> k2;
};

ModelParams init_model(std::size_t n_features, std::size_t hidden, std::size_t n_classes,
                       const std::vector<double>& initial_k, bool trainable_k, Rng& rng);

/// Forward state of the full network: input dropout -> PAN conv -> ReLU ->
/// dropout -> PAN conv. Training mode when an Rng is supplied.
struct ModelPass {
  DenseMatrix logits;
  LayerCache layer1;
  LayerCache layer2;
  std::vector<double> hidden_mask;
};

ModelPass model_forward(const ModelParams& params, const SparseMatrix& features,
                        const Propagator& prop, double dropout_rate, Rng* rng);
ModelGrads model_backward(ModelPass& pass, const DenseMatrix& d_logits);

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::size_t step = 0;
};

struct AdamSlot {
  std::span<double> value;
  std::span<const double> grad;
  double weight_decay = 0.0;  // added as weight_decay * value to the gradient
  bool nonnegative = false;   // project to >= 0 after the update
};

/// One bias-corrected Adam update over all slots. Moment buffers are sized on
/// the first call; later calls must present the same slot shapes.
void adam_step(std::span<AdamSlot> slots, AdamState& state, const AdamConfig& cfg);

/// Model-level step: weight decay on W1 only; k1/k2 are kept nonnegative.
void adam_step(ModelParams& params, const ModelGrads& grads, AdamState& state,
               const AdamConfig& cfg, double weight_decay);

/// Checkpoint = `<stem>.json` manifest + `<stem>.bin` with W1 then W2 as
/// little-endian doubles.
void save_checkpoint(const std::string& stem, const ModelParams& params,
                     const nlohmann::json& metadata);

struct Checkpoint {
  ModelParams params;
  nlohmann::json manifest;
};

Checkpoint load_checkpoint(const std::string& stem);

}  // namespace pan
