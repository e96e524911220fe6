#include "pan/met.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "pan/error.hpp"

namespace pan {

EnergyForm EnergyForm::explicit_weights(std::vector<double> values) {
  EnergyForm e;
  e.kind = Kind::Explicit;
  e.values = std::move(values);
  return e;
}

EnergyForm EnergyForm::power_law(double alpha, double scale, double temperature) {
  if (!(alpha >= 1.0) || !(scale > 0.0)) {
    fail(ErrorCode::InvalidArgument, "power-law energy needs alpha >= 1 and scale > 0");
  }
  EnergyForm e;
  e.kind = Kind::PowerLaw;
  e.alpha = alpha;
  e.scale = scale;
  e.temperature = temperature;
  return e;
}

double EnergyForm::energy(std::size_t n) const {
  if (kind != Kind::PowerLaw) {
    fail(ErrorCode::InvalidArgument, "explicit weights carry no energy");
  }
  return n == 0 ? 0.0 : scale * std::pow(static_cast<double>(n), alpha);
}

std::vector<double> boltzmann_weights(const EnergyForm& e, std::size_t cutoff) {
  if (e.kind == EnergyForm::Kind::Explicit) {
    if (e.values.size() != cutoff + 1) {
      fail(ErrorCode::InvalidArgument,
           "expected " + std::to_string(cutoff + 1) + " explicit weights, got " +
               std::to_string(e.values.size()));
    }
    return e.values;
  }
  if (!(e.temperature > 0.0)) {
    fail(ErrorCode::InvalidArgument, "temperature must be positive");
  }
  std::vector<double> w(cutoff + 1);
  for (std::size_t n = 0; n <= cutoff; ++n) w[n] = std::exp(-e.energy(n) / e.temperature);
  return w;
}

namespace {

std::vector<double> pseudo_inverse(std::span<const double> d, double power) {
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    out[i] = d[i] == 0.0 ? 0.0 : std::pow(d[i], -power);
  }
  return out;
}

Normalization normalization_for(int method) {
  switch (method) {
    case 1:
    case 7:
      return Normalization::PartitionRow;
    case 2:
      return Normalization::PartitionSymmetric;
    default:
      return Normalization::PerTerm;
  }
}

SparseMatrix self_loop_normalized(const SparseMatrix& a) {
  const SparseMatrix with_loops = add(a, SparseMatrix::identity(a.n_rows()));
  const auto inv_sqrt = pseudo_inverse(row_sums(with_loops), 0.5);
  return scale(with_loops, inv_sqrt, inv_sqrt);
}

}  // namespace

Propagator::Propagator(int method, std::size_t cutoff, Normalization normalization,
                       std::shared_ptr<const std::vector<PropagatorTerm>> terms,
                       std::vector<double> weights)
    : method_(method),
      cutoff_(cutoff),
      normalization_(normalization),
      terms_(std::move(terms)),
      weights_(std::move(weights)) {
  if (!terms_ || terms_->empty()) {
    fail(ErrorCode::InvalidArgument, "propagator needs at least one term");
  }
  if (weights_.size() != terms_->size()) {
    fail(ErrorCode::ShapeMismatch, "propagator weight count differs from term count");
  }
}

Propagator Propagator::with_weights(std::vector<double> weights) const {
  return Propagator(method_, cutoff_, normalization_, terms_, std::move(weights));
}

std::vector<double> Propagator::partition() const {
  std::vector<double> z(n_nodes(), 0.0);
  for (std::size_t n = 0; n < n_terms(); ++n) {
    const auto& rs = term(n).row_sums;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += weights_[n] * rs[i];
  }
  return z;
}

DenseMatrix Propagator::apply_term(std::size_t n, const DenseMatrix& x) const {
  return spmm(term(n).matrix, x);
}

DenseMatrix Propagator::apply_term_transpose(std::size_t n, const DenseMatrix& x) const {
  const auto& t = term(n);
  return t.transposed ? spmm(*t.transposed, x) : spmm(t.matrix, x);
}

DenseMatrix Propagator::apply(const DenseMatrix& x) const {
  if (x.rows() != n_nodes()) {
    fail(ErrorCode::ShapeMismatch, "propagator applied to a matrix with wrong row count");
  }
  DenseMatrix out(x.rows(), x.cols());
  switch (normalization_) {
    case Normalization::PerTerm:
      for (std::size_t n = 0; n < n_terms(); ++n) {
        if (weights_[n] != 0.0) spmm_accumulate(term(n).matrix, x, weights_[n], out);
      }
      break;
    case Normalization::PartitionRow: {
      for (std::size_t n = 0; n < n_terms(); ++n) {
        if (weights_[n] != 0.0) spmm_accumulate(term(n).matrix, x, weights_[n], out);
      }
      scale_rows_inplace(out, pseudo_inverse(partition(), 1.0));
      break;
    }
    case Normalization::PartitionSymmetric: {
      const auto a = pseudo_inverse(partition(), 0.5);
      DenseMatrix scaled = x;
      scale_rows_inplace(scaled, a);
      for (std::size_t n = 0; n < n_terms(); ++n) {
        if (weights_[n] != 0.0) spmm_accumulate(term(n).matrix, scaled, weights_[n], out);
      }
      scale_rows_inplace(out, a);
      break;
    }
  }
  return out;
}

DenseMatrix Propagator::apply_transpose(const DenseMatrix& x) const {
  if (x.rows() != n_nodes()) {
    fail(ErrorCode::ShapeMismatch, "propagator applied to a matrix with wrong row count");
  }
  switch (normalization_) {
    case Normalization::PerTerm: {
      DenseMatrix out(x.rows(), x.cols());
      for (std::size_t n = 0; n < n_terms(); ++n) {
        if (weights_[n] == 0.0) continue;
        const auto& t = term(n);
        spmm_accumulate(t.transposed ? *t.transposed : t.matrix, x, weights_[n], out);
      }
      return out;
    }
    case Normalization::PartitionRow: {
      // The raw terms are symmetric, so M^T x = S (Z^-1 x).
      DenseMatrix scaled = x;
      scale_rows_inplace(scaled, pseudo_inverse(partition(), 1.0));
      DenseMatrix out(x.rows(), x.cols());
      for (std::size_t n = 0; n < n_terms(); ++n) {
        if (weights_[n] != 0.0) spmm_accumulate(term(n).matrix, scaled, weights_[n], out);
      }
      return out;
    }
    case Normalization::PartitionSymmetric:
      return apply(x);
  }
  return {};
}

SparseMatrix Propagator::assemble() const {
  SparseMatrix sum(n_nodes(), n_nodes(), std::vector<std::size_t>(n_nodes() + 1, 0), {}, {});
  for (std::size_t n = 0; n < n_terms(); ++n) {
    if (weights_[n] != 0.0) sum = add(sum, term(n).matrix, 1.0, weights_[n]);
  }
  switch (normalization_) {
    case Normalization::PerTerm:
      return sum;
    case Normalization::PartitionRow:
      return scale(sum, pseudo_inverse(partition(), 1.0), {});
    case Normalization::PartitionSymmetric: {
      const auto a = pseudo_inverse(partition(), 0.5);
      return scale(sum, a, a);
    }
  }
  return sum;
}

Propagator Propagator::fused() const {
  PropagatorTerm t;
  t.matrix = assemble();
  if (symmetry_residual(t.matrix) != 0.0) t.transposed = transpose(t.matrix);
  t.row_sums = row_sums(t.matrix);
  auto terms = std::make_shared<const std::vector<PropagatorTerm>>(
      std::vector<PropagatorTerm>{std::move(t)});
  return Propagator(method_, cutoff_, Normalization::PerTerm, std::move(terms), {1.0});
}

Propagator build_propagator(const Graph& g, const PropagatorConfig& cfg) {
  if (cfg.method < kMinMethod || cfg.method > kMaxMethod) {
    fail(ErrorCode::InvalidArgument,
         "propagator method must be in 1..7, got " + std::to_string(cfg.method));
  }
  if (g.n_nodes() == 0) {
    fail(ErrorCode::InvalidArgument, "cannot build a propagator on an empty graph");
  }
  std::vector<double> weights = boltzmann_weights(cfg.weights, cfg.cutoff);
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      fail(ErrorCode::InvalidArgument, "propagator weights must be finite and nonnegative");
    }
  }

  std::vector<SparseMatrix> powers;
  switch (cfg.method) {
    case 1:
    case 2:
    case 3:
    case 6:
      powers = matrix_power_terms(g, cfg.cutoff);
      break;
    case 4:
      powers = matrix_powers(add(g.adjacency(), SparseMatrix::identity(g.n_nodes())),
                             cfg.cutoff);
      break;
    default:
      powers = matrix_powers(self_loop_normalized(g.adjacency()), cfg.cutoff);
      break;
  }

  auto terms = std::make_shared<std::vector<PropagatorTerm>>();
  terms->reserve(powers.size());
  for (auto& p : powers) {
    PropagatorTerm t;
    const auto degree = row_sums(p);
    switch (cfg.method) {
      case 3:
      case 4:
        t.matrix = scale(p, pseudo_inverse(degree, 1.0), {});
        t.transposed = transpose(t.matrix);
        break;
      case 6: {
        const auto inv_sqrt = pseudo_inverse(degree, 0.5);
        t.matrix = scale(p, inv_sqrt, inv_sqrt);
        break;
      }
      default:
        t.matrix = std::move(p);
        break;
    }
    t.row_sums = row_sums(t.matrix);
    terms->push_back(std::move(t));
  }
  return Propagator(cfg.method, cfg.cutoff, normalization_for(cfg.method), std::move(terms),
                    std::move(weights));
}

Propagator low_temperature_limit_check(const Graph& g, const EnergyForm& e, double t_small,
                                       std::size_t cutoff) {
  if (e.kind != EnergyForm::Kind::PowerLaw) {
    fail(ErrorCode::InvalidArgument,
         "the low-temperature limit needs an energy form, not explicit weights");
  }
  const double gap = e.energy(1) - e.energy(0);
  if (!(t_small > 0.0) || t_small > 1e-3 * gap) {
    fail(ErrorCode::InvalidArgument,
         "low-temperature check needs 0 < T <= 1e-3 * (E(1) - E(0))");
  }
  EnergyForm cold = e;
  cold.temperature = t_small;
  PropagatorConfig cfg;
  cfg.method = 1;
  cfg.cutoff = cutoff;
  cfg.weights = cold;
  Propagator p = build_propagator(g, cfg);
  const DenseMatrix m = to_dense(p.assemble());
  const double deviation = max_abs_diff(m, DenseMatrix::identity(g.n_nodes()));
  if (deviation > 1e-6) {
    fail(ErrorCode::NotConverged,
         "low-temperature propagator deviates from identity by " + std::to_string(deviation));
  }
  return p;
}

DenseMatrix RankOneUpdate::apply(const DenseMatrix& x) const {
  if (x.rows() != psi_.size()) {
    fail(ErrorCode::ShapeMismatch, "rank-one operator applied to wrong row count");
  }
  std::vector<double> proj(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) proj[c] += psi_[r] * row[c];
  }
  DenseMatrix out = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) row[c] += psi_[r] * proj[c];
  }
  return out;
}

DenseMatrix RankOneUpdate::to_dense() const {
  DenseMatrix m = DenseMatrix::identity(psi_.size());
  for (std::size_t i = 0; i < psi_.size(); ++i) {
    for (std::size_t j = 0; j < psi_.size(); ++j) m(i, j) += psi_[i] * psi_[j];
  }
  return m;
}

RankOneUpdate high_temperature_propagator(const Graph& g) {
  return RankOneUpdate(estimate_lambda1(g.adjacency(), 1e-10).vector);
}

DenseMatrix map_to_grid_stencil(std::size_t cutoff, const std::vector<double>& k) {
  if (cutoff > kStencilMaxCutoff) {
    fail(ErrorCode::GuardExceeded, "grid stencil enumeration is limited to L <= 3");
  }
  if (k.size() != cutoff + 1) {
    fail(ErrorCode::InvalidArgument, "stencil weights must have length L + 1");
  }
  const std::size_t side = 2 * cutoff + 1;
  DenseMatrix walks(side, side);
  walks(cutoff, cutoff) = 1.0;
  DenseMatrix stencil(side, side);
  double total = 1.0;  // 4^n
  for (std::size_t n = 0; n <= cutoff; ++n) {
    if (n > 0) {
      // A length-n walk stays within Manhattan distance n <= L of the origin,
      // so the box never clips it.
      DenseMatrix next(side, side);
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          double s = 0.0;
          if (y > 0) s += walks(y - 1, x);
          if (y + 1 < side) s += walks(y + 1, x);
          if (x > 0) s += walks(y, x - 1);
          if (x + 1 < side) s += walks(y, x + 1);
          next(y, x) = s;
        }
      }
      walks = std::move(next);
      total *= 4.0;
    }
    axpy(k[n] / total, walks, stencil);
  }
  return stencil;
}

namespace {

nlohmann::json row_sum_stats(const std::vector<double>& sums) {
  if (sums.empty()) return {{"min", 0.0}, {"max", 0.0}, {"mean", 0.0}};
  const auto [lo, hi] = std::minmax_element(sums.begin(), sums.end());
  const double mean = std::accumulate(sums.begin(), sums.end(), 0.0) /
                      static_cast<double>(sums.size());
  return {{"min", *lo}, {"max", *hi}, {"mean", mean}};
}

const char* normalization_name(Normalization n) {
  switch (n) {
    case Normalization::PerTerm:
      return "per_term";
    case Normalization::PartitionRow:
      return "partition_row";
    case Normalization::PartitionSymmetric:
      return "partition_symmetric";
  }
  return "unknown";
}

}  // namespace

nlohmann::json inspect_propagator(const Propagator& p) {
  nlohmann::json out;
  out["method"] = p.method();
  out["L"] = p.cutoff();
  out["normalization"] = normalization_name(p.normalization());
  out["weights"] = p.weights();
  out["n_nodes"] = p.n_nodes();
  nlohmann::json terms = nlohmann::json::array();
  for (std::size_t n = 0; n < p.n_terms(); ++n) {
    const auto& t = p.term(n);
    terms.push_back({{"n", n}, {"nnz", t.matrix.nnz()}, {"row_sum", row_sum_stats(t.row_sums)}});
  }
  out["terms"] = std::move(terms);
  const SparseMatrix m = p.assemble();
  const double cells = static_cast<double>(p.n_nodes()) * static_cast<double>(p.n_nodes());
  out["assembled"] = {
      {"nnz", m.nnz()},
      {"density", static_cast<double>(m.nnz()) / cells},
      {"row_sum", row_sum_stats(row_sums(m))},
      {"symmetry_residual", symmetry_residual(m)},
  };
  return out;
}

}  // namespace pan
