#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "pan/dense.hpp"
#include "pan/graph.hpp"
#include "pan/sparse.hpp"

namespace pan {

/// Length-dependent path weights, either given directly or as Boltzmann
/// factors exp(-E(n)/T) of a power-law energy E(n) = scale * n^alpha.
struct EnergyForm {
  enum class Kind { Explicit, PowerLaw };

  Kind kind = Kind::Explicit;
  std::vector<double> values;  // Explicit only
  double alpha = 1.0;          // PowerLaw only
  double scale = 1.0;
  double temperature = 1.0;

  static EnergyForm explicit_weights(std::vector<double> values);
  static EnergyForm power_law(double alpha, double scale, double temperature);

  double energy(std::size_t n) const;
};

/// Entry n is exp(-E(n)/T), or the explicit values verbatim.
std::vector<double> boltzmann_weights(const EnergyForm& e, std::size_t cutoff);

inline constexpr int kMinMethod = 1;
inline constexpr int kMaxMethod = 7;

struct PropagatorConfig {
  int method = 5;
  std::size_t cutoff = 2;
  EnergyForm weights = EnergyForm::explicit_weights({0.0, 0.5, 0.5});
  bool trainable_k = false;
};

/// How the per-length terms are combined into the transition matrix.
enum class Normalization {
  PerTerm,             // sum_n k_n T_n, each T_n already normalized
  PartitionRow,        // Z^-1 sum_n w_n P_n
  PartitionSymmetric,  // Z^-1/2 (sum_n w_n P_n) Z^-1/2
};

struct PropagatorTerm {
  SparseMatrix matrix;
  // Present only when `matrix` is not symmetric.
  std::optional<SparseMatrix> transposed;
  std::vector<double> row_sums;
};

/// The MET operator as a weighted list of sparse terms.
///
/// The terms are shared and immutable; with_weights() produces a cheap copy
/// that differs only in the weight vector, which is how trainable k(n) is fed
/// through a forward pass. For the partition-normalized variants (methods 1,
/// 2 and 7) the normalizer Z is recomputed from the current weights.
class Propagator {
 public:
  Propagator(int method, std::size_t cutoff, Normalization normalization,
             std::shared_ptr<const std::vector<PropagatorTerm>> terms,
             std::vector<double> weights);

  int method() const noexcept { return method_; }
  std::size_t cutoff() const noexcept { return cutoff_; }
  std::size_t n_terms() const noexcept { return terms_->size(); }
  std::size_t n_nodes() const noexcept { return terms_->front().matrix.n_rows(); }
  Normalization normalization() const noexcept { return normalization_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const PropagatorTerm& term(std::size_t n) const { return terms_->at(n); }

  Propagator with_weights(std::vector<double> weights) const;

  /// Z_i = sum_n w_n rowsum(P_n)_i. Only meaningful for partition variants.
  std::vector<double> partition() const;

  // term(n) x and term(n)^T x
  DenseMatrix apply_term(std::size_t n, const DenseMatrix& x) const;
  DenseMatrix apply_term_transpose(std::size_t n, const DenseMatrix& x) const;

  DenseMatrix apply(const DenseMatrix& x) const;
  DenseMatrix apply_transpose(const DenseMatrix& x) const;

  SparseMatrix assemble() const;

  /// One-term equivalent with the weights and normalizer folded in. Cheaper
  /// to apply, but its weight no longer maps onto k(n).
  Propagator fused() const;

 private:
  int method_;
  std::size_t cutoff_;
  Normalization normalization_;
  std::shared_ptr<const std::vector<PropagatorTerm>> terms_;
  std::vector<double> weights_;
};

/// Assembles one of the seven propagator variants:
///   1: Z^-1 sum w_n A^n            2: Z^-1/2 (sum w_n A^n) Z^-1/2
///   3: sum k_n D_n^-1 A^n          4: sum k_n Dt_n^-1 At^n,  At = A + I
///   5: sum k_n Ah^n,  Ah = Dt^-1/2 At Dt^-1/2
///   6: sum k_n D_n^-1/2 A^n D_n^-1/2
///   7: Z^-1 sum w_n Ah^n
/// D_n is the degree (row-sum) matrix of the n-th power; zero degrees invert to 0.
Propagator build_propagator(const Graph& g, const PropagatorConfig& cfg);

/// Method 1 propagator at temperature t_small, checked to be within 1e-6 of I.
Propagator low_temperature_limit_check(const Graph& g, const EnergyForm& e,
                                       double t_small, std::size_t cutoff = 2);

/// The operator I + psi psi^T, psi the unit Perron vector of the adjacency.
class RankOneUpdate {
 public:
  explicit RankOneUpdate(std::vector<double> psi) : psi_(std::move(psi)) {}

  const std::vector<double>& vector() const noexcept { return psi_; }
  DenseMatrix apply(const DenseMatrix& x) const;
  DenseMatrix to_dense() const;

 private:
  std::vector<double> psi_;
};

RankOneUpdate high_temperature_propagator(const Graph& g);

inline constexpr std::size_t kStencilMaxCutoff = 3;

/// Method 3 filter seen from an interior node of the infinite 4-connected
/// grid. Entry (L + dy, L + dx) holds sum_n k_n walks_n(dx, dy) / 4^n.
DenseMatrix map_to_grid_stencil(std::size_t cutoff, const std::vector<double>& k);

/// Summary used by the `inspect` command: weights, per-term sparsity and row
/// sums, and the assembled operator's density, row sums and symmetry residual.
nlohmann::json inspect_propagator(const Propagator& p);

}  // namespace pan
