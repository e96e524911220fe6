#include "pan/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "pan/error.hpp"

namespace pan {

DenseMatrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) {
    fail(ErrorCode::InvalidArgument, "glorot_init needs positive dimensions");
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = -bound + 2.0 * bound * rng.uniform();
  return m;
}

namespace {

void check_rate(double rate) {
  if (!(rate >= 0.0) || rate >= 1.0) {
    fail(ErrorCode::InvalidArgument, "dropout rate must lie in [0, 1)");
  }
}

}  // namespace

std::vector<double> dropout_mask(std::size_t count, double rate, Rng& rng) {
  check_rate(rate);
  std::vector<double> mask(count, 1.0);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

DenseMatrix dropout(const DenseMatrix& x, double rate, Rng& rng, bool training) {
  check_rate(rate);
  if (!training || rate == 0.0) return x;
  const auto mask = dropout_mask(x.size(), rate, rng);
  DenseMatrix out = x;
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= mask[i];
  return out;
}

SparseMatrix dropout(const SparseMatrix& x, double rate, Rng& rng, bool training) {
  check_rate(rate);
  if (!training || rate == 0.0) return x;
  const auto mask = dropout_mask(x.nnz(), rate, rng);
  std::vector<double> vals(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] *= mask[i];
  return SparseMatrix(x.n_rows(), x.n_cols(),
                      std::vector<std::size_t>(x.row_offsets().begin(), x.row_offsets().end()),
                      std::vector<Index>(x.col_indices().begin(), x.col_indices().end()),
                      std::move(vals));
}

namespace {

std::vector<double> inverse_power(const std::vector<double>& z, double power) {
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] == 0.0 ? 0.0 : std::pow(z[i], -power);
  return out;
}

double row_dot(const DenseMatrix& a, const DenseMatrix& b, std::size_t r) {
  auto ar = a.row(r);
  auto br = b.row(r);
  double s = 0.0;
  for (std::size_t c = 0; c < ar.size(); ++c) s += ar[c] * br[c];
  return s;
}

DenseMatrix weighted_sum(const std::vector<DenseMatrix>& terms, const std::vector<double>& w,
                         std::size_t rows, std::size_t cols) {
  DenseMatrix out(rows, cols);
  for (std::size_t n = 0; n < terms.size(); ++n) {
    if (w[n] != 0.0) axpy(w[n], terms[n], out);
  }
  return out;
}

LayerOutput finish_forward(LayerCache cache, std::string_view name) {
  const Propagator& p = *cache.propagator;
  const DenseMatrix& h = cache.projected;
  const auto& w = p.weights();
  DenseMatrix pre;
  cache.term_outputs.clear();
  switch (p.normalization()) {
    case Normalization::PerTerm:
    case Normalization::PartitionRow:
      for (std::size_t n = 0; n < p.n_terms(); ++n) {
        cache.term_outputs.push_back(p.apply_term(n, h));
      }
      pre = weighted_sum(cache.term_outputs, w, h.rows(), h.cols());
      if (p.normalization() == Normalization::PartitionRow) {
        scale_rows_inplace(pre, inverse_power(p.partition(), 1.0));
      }
      break;
    case Normalization::PartitionSymmetric: {
      const auto a = inverse_power(p.partition(), 0.5);
      DenseMatrix scaled = h;
      scale_rows_inplace(scaled, a);
      for (std::size_t n = 0; n < p.n_terms(); ++n) {
        cache.term_outputs.push_back(p.apply_term(n, scaled));
      }
      pre = weighted_sum(cache.term_outputs, w, h.rows(), h.cols());
      scale_rows_inplace(pre, a);
      break;
    }
  }
  DenseMatrix y = pre;
  if (cache.activation == Activation::ReLU) {
    for (double& v : y.data()) v = std::max(v, 0.0);
  }
  if (!y.all_finite()) {
    fail(ErrorCode::NonFinite, std::string(name) + ": non-finite layer output");
  }
  cache.pre_activation = std::move(pre);
  cache.live = true;
  return {std::move(y), std::move(cache)};
}

LayerCache start_cache(const Propagator& prop, const std::optional<std::vector<double>>& k,
                       const DenseMatrix& w, Activation activation, std::size_t x_rows,
                       std::size_t x_cols) {
  if (x_cols != w.rows()) {
    fail(ErrorCode::ShapeMismatch, "layer input columns differ from weight rows");
  }
  if (x_rows != prop.n_nodes()) {
    fail(ErrorCode::ShapeMismatch, "layer input rows differ from propagator size");
  }
  if (k && k->size() != prop.n_terms()) {
    fail(ErrorCode::ShapeMismatch, "k length differs from propagator term count");
  }
  LayerCache cache;
  cache.weight = w;
  cache.propagator = k ? prop.with_weights(*k) : prop;
  cache.k_supplied = k.has_value();
  cache.activation = activation;
  return cache;
}

}  // namespace

LayerOutput pan_layer_forward(const DenseMatrix& x, const Propagator& prop,
                              const std::optional<std::vector<double>>& k, const DenseMatrix& w,
                              Activation activation, std::string_view name) {
  LayerCache cache = start_cache(prop, k, w, activation, x.rows(), x.cols());
  cache.projected = matmul(x, w);
  cache.input = x;
  return finish_forward(std::move(cache), name);
}

LayerOutput pan_layer_forward(const SparseMatrix& x, const Propagator& prop,
                              const std::optional<std::vector<double>>& k, const DenseMatrix& w,
                              Activation activation, std::string_view name) {
  LayerCache cache = start_cache(prop, k, w, activation, x.n_rows(), x.n_cols());
  cache.projected = spmm(x, w);
  cache.input = x;
  return finish_forward(std::move(cache), name);
}

LayerGrads pan_layer_backward(LayerCache& cache, const DenseMatrix& d_y) {
  if (!cache.live) {
    fail(ErrorCode::StaleCache, "layer cache was already consumed or never filled");
  }
  if (d_y.rows() != cache.pre_activation.rows() || d_y.cols() != cache.pre_activation.cols()) {
    fail(ErrorCode::ShapeMismatch, "upstream gradient shape differs from layer output");
  }
  cache.live = false;

  DenseMatrix g = d_y;
  if (cache.activation == Activation::ReLU) {
    auto gd = g.data();
    auto pd = cache.pre_activation.data();
    for (std::size_t i = 0; i < gd.size(); ++i) {
      if (pd[i] <= 0.0) gd[i] = 0.0;
    }
  }

  const Propagator& p = *cache.propagator;
  const auto& w = p.weights();
  const DenseMatrix& h = cache.projected;
  const std::size_t n_terms = p.n_terms();
  std::vector<double> dk(n_terms, 0.0);
  DenseMatrix d_h;

  switch (p.normalization()) {
    case Normalization::PerTerm:
      for (std::size_t n = 0; n < n_terms; ++n) dk[n] = frobenius_dot(cache.term_outputs[n], g);
      d_h = p.apply_transpose(g);
      break;
    case Normalization::PartitionRow: {
      // Y = Z^-1 S H with Z_i = sum_n w_n r_ni.
      const auto z_inv = inverse_power(p.partition(), 1.0);
      const DenseMatrix sh = weighted_sum(cache.term_outputs, w, h.rows(), h.cols());
      std::vector<double> v(h.rows());
      for (std::size_t i = 0; i < h.rows(); ++i) v[i] = row_dot(sh, g, i);
      for (std::size_t n = 0; n < n_terms; ++n) {
        const auto& r = p.term(n).row_sums;
        double s = 0.0;
        for (std::size_t i = 0; i < h.rows(); ++i) {
          s += z_inv[i] * row_dot(cache.term_outputs[n], g, i) -
               r[i] * z_inv[i] * z_inv[i] * v[i];
        }
        dk[n] = s;
      }
      d_h = p.apply_transpose(g);
      break;
    }
    case Normalization::PartitionSymmetric: {
      // Y = a * S (a * H), a_i = Z_i^-1/2, da_i/dw_n = -a_i^3 r_ni / 2.
      const auto a = inverse_power(p.partition(), 0.5);
      const DenseMatrix sah = weighted_sum(cache.term_outputs, w, h.rows(), h.cols());
      DenseMatrix ag = g;
      scale_rows_inplace(ag, a);
      DenseMatrix b(h.rows(), h.cols());
      for (std::size_t n = 0; n < n_terms; ++n) {
        if (w[n] != 0.0) spmm_accumulate(p.term(n).matrix, ag, w[n], b);
      }
      std::vector<double> coupling(h.rows());
      for (std::size_t i = 0; i < h.rows(); ++i) {
        coupling[i] = row_dot(g, sah, i) + row_dot(h, b, i);
      }
      for (std::size_t n = 0; n < n_terms; ++n) {
        const auto& r = p.term(n).row_sums;
        double s = 0.0;
        for (std::size_t i = 0; i < h.rows(); ++i) {
          s += a[i] * row_dot(cache.term_outputs[n], g, i) -
               0.5 * a[i] * a[i] * a[i] * r[i] * coupling[i];
        }
        dk[n] = s;
      }
      d_h = std::move(b);
      scale_rows_inplace(d_h, a);
      break;
    }
  }

  LayerGrads grads;
  if (const auto* dense = std::get_if<DenseMatrix>(&cache.input)) {
    grads.d_weight = matmul_tn(*dense, d_h);
    grads.d_input = matmul_nt(d_h, cache.weight);
  } else if (const auto* sparse = std::get_if<SparseMatrix>(&cache.input)) {
    grads.d_weight = spmm_tn(*sparse, d_h);
  }
  if (cache.k_supplied) grads.d_k = std::move(dk);
  return grads;
}

DenseMatrix softmax(const DenseMatrix& logits) {
  DenseMatrix out = logits;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return out;
}

LossResult softmax_cross_entropy(const DenseMatrix& logits, std::span<const std::int32_t> labels,
                                 std::span<const std::uint8_t> mask) {
  if (labels.size() != logits.rows() || mask.size() != logits.rows()) {
    fail(ErrorCode::ShapeMismatch, "labels/mask length differs from logit rows");
  }
  const auto count = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
  if (count == 0) fail(ErrorCode::EmptyMask, "cross-entropy over an empty mask");
  const double inv = 1.0 / static_cast<double>(count);

  LossResult result;
  result.d_logits = DenseMatrix(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (!mask[r]) continue;
    const auto label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= logits.cols()) {
      fail(ErrorCode::InvalidArgument, "masked row has an invalid class label");
    }
    auto row = logits.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    const double log_z = mx + std::log(sum);
    result.loss += (log_z - row[static_cast<std::size_t>(label)]) * inv;
    auto grad = result.d_logits.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) grad[c] = std::exp(row[c] - log_z) * inv;
    grad[static_cast<std::size_t>(label)] -= inv;
  }
  return result;
}

ModelParams init_model(std::size_t n_features, std::size_t hidden, std::size_t n_classes,
                       const std::vector<double>& initial_k, bool trainable_k, Rng& rng) {
  ModelParams params;
  params.w1 = glorot_init(n_features, hidden, rng);
  params.w2 = glorot_init(hidden, n_classes, rng);
  if (trainable_k) {
    params.k1 = initial_k;
    params.k2 = initial_k;
  }
  return params;
}

ModelPass model_forward(const ModelParams& params, const SparseMatrix& features,
                        const Propagator& prop, double dropout_rate, Rng* rng) {
  const bool training = rng != nullptr;
  std::optional<std::vector<double>> k1, k2;
  if (params.trainable_k()) {
    k1 = params.k1;
    k2 = params.k2;
  }
  ModelPass pass;
  LayerOutput l1 = [&] {
    if (training && dropout_rate > 0.0) {
      return pan_layer_forward(dropout(features, dropout_rate, *rng, true), prop, k1, params.w1,
                               Activation::ReLU, "layer1");
    }
    return pan_layer_forward(features, prop, k1, params.w1, Activation::ReLU, "layer1");
  }();
  DenseMatrix hidden = std::move(l1.y);
  if (training && dropout_rate > 0.0) {
    pass.hidden_mask = dropout_mask(hidden.size(), dropout_rate, *rng);
    auto hd = hidden.data();
    for (std::size_t i = 0; i < hd.size(); ++i) hd[i] *= pass.hidden_mask[i];
  }
  LayerOutput l2 = pan_layer_forward(hidden, prop, k2, params.w2, Activation::None, "layer2");
  pass.logits = std::move(l2.y);
  pass.layer1 = std::move(l1.cache);
  pass.layer2 = std::move(l2.cache);
  return pass;
}

ModelGrads model_backward(ModelPass& pass, const DenseMatrix& d_logits) {
  LayerGrads g2 = pan_layer_backward(pass.layer2, d_logits);
  DenseMatrix d_hidden = std::move(g2.d_input);
  if (!pass.hidden_mask.empty()) {
    auto hd = d_hidden.data();
    for (std::size_t i = 0; i < hd.size(); ++i) hd[i] *= pass.hidden_mask[i];
  }
  LayerGrads g1 = pan_layer_backward(pass.layer1, d_hidden);
  ModelGrads grads;
  grads.w1 = std::move(g1.d_weight);
  grads.w2 = std::move(g2.d_weight);
  if (g1.d_k) grads.k1 = std::move(*g1.d_k);
  if (g2.d_k) grads.k2 = std::move(*g2.d_k);
  return grads;
}

void adam_step(std::span<AdamSlot> slots, AdamState& state, const AdamConfig& cfg) {
  if (state.step == 0 && state.first_moment.empty()) {
    for (const auto& s : slots) {
      state.first_moment.emplace_back(s.value.size(), 0.0);
      state.second_moment.emplace_back(s.value.size(), 0.0);
    }
  }
  if (state.first_moment.size() != slots.size()) {
    fail(ErrorCode::ShapeMismatch, "Adam state has a different number of tensors");
  }
  for (std::size_t t = 0; t < slots.size(); ++t) {
    if (slots[t].value.size() != slots[t].grad.size() ||
        slots[t].value.size() != state.first_moment[t].size()) {
      fail(ErrorCode::ShapeMismatch, "Adam parameter/gradient/state shapes differ");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    auto& slot = slots[s];
    auto& m = state.first_moment[s];
    auto& v = state.second_moment[s];
    for (std::size_t i = 0; i < slot.value.size(); ++i) {
      const double g = slot.grad[i] + slot.weight_decay * slot.value[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      slot.value[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
      if (slot.nonnegative && slot.value[i] < 0.0) slot.value[i] = 0.0;
    }
  }
}

void adam_step(ModelParams& params, const ModelGrads& grads, AdamState& state,
               const AdamConfig& cfg, double weight_decay) {
  std::vector<AdamSlot> slots;
  slots.push_back({params.w1.data(), grads.w1.data(), weight_decay, false});
  slots.push_back({params.w2.data(), grads.w2.data(), 0.0, false});
  if (params.trainable_k()) {
    slots.push_back({params.k1, grads.k1, 0.0, true});
    slots.push_back({params.k2, grads.k2, 0.0, true});
  }
  adam_step(slots, state, cfg);
}

namespace {

void write_le_doubles(std::ostream& out, std::span<const double> values) {
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
}

void read_le_doubles(std::istream& in, std::span<double> values) {
  for (double& v : values) {
    std::uint64_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
      fail(ErrorCode::Format, "checkpoint blob is truncated");
    }
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
}

std::string base_name(const std::string& path) {
  const auto pos = path.find_last_of('/');
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

}  // namespace

void save_checkpoint(const std::string& stem, const ModelParams& params,
                     const nlohmann::json& metadata) {
  nlohmann::json manifest;
  manifest["format"] = "pan-checkpoint";
  manifest["version"] = 1;
  manifest["blob"] = base_name(stem) + ".bin";
  manifest["tensors"] = nlohmann::json::array(
      {{{"name", "W1"}, {"shape", {params.w1.rows(), params.w1.cols()}}},
       {{"name", "W2"}, {"shape", {params.w2.rows(), params.w2.cols()}}}});
  manifest["k1"] = params.k1;
  manifest["k2"] = params.k2;
  manifest["metadata"] = metadata;

  std::ofstream blob(stem + ".bin", std::ios::binary | std::ios::trunc);
  if (!blob) fail(ErrorCode::Io, "cannot write " + stem + ".bin");
  write_le_doubles(blob, params.w1.data());
  write_le_doubles(blob, params.w2.data());
  std::ofstream json(stem + ".json", std::ios::trunc);
  if (!json) fail(ErrorCode::Io, "cannot write " + stem + ".json");
  json << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& stem) {
  std::ifstream json(stem + ".json");
  if (!json) fail(ErrorCode::Io, "cannot read " + stem + ".json");
  Checkpoint ck;
  try {
    ck.manifest = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("checkpoint manifest: ") + e.what());
  }
  if (ck.manifest.value("format", "") != "pan-checkpoint") {
    fail(ErrorCode::Format, "not a pan checkpoint manifest");
  }
  if (ck.manifest.value("version", 0) != 1) {
    fail(ErrorCode::VersionMismatch, "unsupported checkpoint version");
  }
  const auto& tensors = ck.manifest.at("tensors");
  auto shape_of = [&](std::size_t i) {
    const auto& s = tensors.at(i).at("shape");
    return std::pair{s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()};
  };
  const auto [r1, c1] = shape_of(0);
  const auto [r2, c2] = shape_of(1);
  ck.params.w1 = DenseMatrix(r1, c1);
  ck.params.w2 = DenseMatrix(r2, c2);
  ck.params.k1 = ck.manifest.at("k1").get<std::vector<double>>();
  ck.params.k2 = ck.manifest.at("k2").get<std::vector<double>>();

  std::ifstream blob(stem + ".bin", std::ios::binary);
  if (!blob) fail(ErrorCode::Io, "cannot read " + stem + ".bin");
  read_le_doubles(blob, ck.params.w1.data());
  read_le_doubles(blob, ck.params.w2.data());
  if (blob.peek() != std::char_traits<char>::eof()) {
    fail(ErrorCode::Format, "checkpoint blob has trailing bytes");
  }
  return ck;
}

}  // namespace pan
