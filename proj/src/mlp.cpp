#include "sadam/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sadam/csv.hpp"

namespace sadam {

void SampleSet::validate() const {
  if (inputs.empty()) throw std::invalid_argument("SampleSet: at least one sample is required");
  if (inputs.size() != labels.size()) {
    throw std::invalid_argument("SampleSet: inputs and labels differ in length");
  }
  const std::size_t d = inputs.front().size();
  if (d == 0) throw std::invalid_argument("SampleSet: feature vectors must be non-empty");
  for (const auto& row : inputs) {
    if (row.size() != d) throw std::invalid_argument("SampleSet: ragged feature vectors");
  }
}

std::vector<double> draw_blob_sample(std::size_t d, double separation, int label, SeededRng& rng) {
  const double offset = (label == 0 ? -0.5 : 0.5) * separation / std::sqrt(static_cast<double>(d));
  std::vector<double> x(d);
  for (auto& v : x) v = offset + rng.normal();
  return x;
}

SampleSet make_blobs(std::size_t n, std::size_t d, double separation, SeededRng& rng) {
  if (n < 2) throw std::invalid_argument("make_blobs: n must be >= 2");
  if (d == 0) throw std::invalid_argument("make_blobs: d must be >= 1");
  SampleSet s;
  s.inputs.reserve(n);
  s.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    s.inputs.push_back(draw_blob_sample(d, separation, label, rng));
    s.labels.push_back(label);
  }
  return s;
}

void write_csv(std::ostream& os, const SampleSet& data) {
  data.validate();
  for (std::size_t j = 0; j < data.feature_dim(); ++j) os << 'x' << j << ',';
  os << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.inputs[i]) os << format_double(v) << ',';
    os << data.labels[i] << '\n';
  }
}

// ---- TinyMlp ----------------------------------------------------------------

TinyMlp::TinyMlp(std::vector<std::size_t> widths, std::optional<QuantizerConfig> quantizer)
    : widths_(std::move(widths)), quantizer_(quantizer) {
  if (widths_.size() < 2) throw std::invalid_argument("TinyMlp: need at least input and output widths");
  for (auto w : widths_) {
    if (w == 0) throw std::invalid_argument("TinyMlp: layer widths must be positive");
  }
  if (widths_.back() < 2) throw std::invalid_argument("TinyMlp: need at least two classes");
  if (quantizer_) quantizer_->validate();
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(param_count_);
    param_count_ += widths_[l] * widths_[l + 1] + widths_[l + 1];
  }
}

bool TinyMlp::is_weight_index(std::size_t flat_index) const {
  for (std::size_t l = 0; l < num_layers(); ++l) {
    if (flat_index >= weight_offset(l) && flat_index < bias_offset(l)) return true;
  }
  return false;
}

ParamVector TinyMlp::init_params(SeededRng& rng) const {
  ParamVector p(param_count_);
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(widths_[l]));
    for (std::size_t i = weight_offset(l); i < bias_offset(l); ++i) p[i] = stddev * rng.normal();
  }
  return p;
}

double TinyMlp::forward_backward(const ParamVector& params, const SampleSet& data, Batch batch,
                                 ParamVector* grad, double* min_margin) const {
  if (params.dim() != param_count_) throw DimensionError("TinyMlp: parameter count mismatch");
  if (batch.empty()) throw std::invalid_argument("TinyMlp: empty batch");
  if (data.feature_dim() != widths_.front()) {
    throw DimensionError("TinyMlp: feature width does not match the input layer");
  }

  // effective (possibly fake-quantized) weights
  std::vector<double> eff(params.begin(), params.end());
  if (quantizer_) {
    for (std::size_t l = 0; l < num_layers(); ++l) {
      for (std::size_t i = weight_offset(l); i < bias_offset(l); ++i) {
        eff[i] = fake_quantize(params[i], *quantizer_);
      }
    }
  }

  const std::size_t L = num_layers();
  std::vector<std::vector<double>> act(L + 1);
  std::vector<std::vector<double>> pre(L);
  std::vector<double> eff_grad;
  if (grad) eff_grad.assign(param_count_, 0.0);

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  double margin = std::numeric_limits<double>::infinity();

  for (std::size_t idx : batch) {
    if (idx >= data.size()) throw std::out_of_range("TinyMlp: batch index out of range");
    act[0] = data.inputs[idx];
    for (std::size_t l = 0; l < L; ++l) {
      const std::size_t in = widths_[l];
      const std::size_t out = widths_[l + 1];
      const double* W = eff.data() + weight_offset(l);
      const double* b = eff.data() + bias_offset(l);
      pre[l].assign(out, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        double z = b[o];
        for (std::size_t i = 0; i < in; ++i) z += W[o * in + i] * act[l][i];
        pre[l][o] = z;
      }
      act[l + 1] = pre[l];
      if (l + 1 < L) {
        for (auto& a : act[l + 1]) a = std::max(a, 0.0);
        for (double z : pre[l]) margin = std::min(margin, std::abs(z));
      }
    }

    const auto& logits = pre[L - 1];
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - zmax);
    const double log_norm = zmax + std::log(sum);
    const auto label = static_cast<std::size_t>(data.labels[idx]);
    if (label >= num_classes()) throw std::out_of_range("TinyMlp: label out of range");
    total += log_norm - logits[label];

    if (!grad) continue;
    std::vector<double> delta(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
      delta[c] = (std::exp(logits[c] - log_norm) - (c == label ? 1.0 : 0.0)) * inv_b;
    }
    for (std::size_t l = L; l-- > 0;) {
      const std::size_t in = widths_[l];
      const std::size_t out = widths_[l + 1];
      double* gW = eff_grad.data() + weight_offset(l);
      double* gb = eff_grad.data() + bias_offset(l);
      const double* W = eff.data() + weight_offset(l);
      for (std::size_t o = 0; o < out; ++o) {
        gb[o] += delta[o];
        for (std::size_t i = 0; i < in; ++i) gW[o * in + i] += delta[o] * act[l][i];
      }
      if (l == 0) break;
      std::vector<double> prev(in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) prev[i] += W[o * in + i] * delta[o];
      }
      // ReLU derivative taken as 0 at the kink
      for (std::size_t i = 0; i < in; ++i) prev[i] = pre[l - 1][i] > 0.0 ? prev[i] : 0.0;
      delta = std::move(prev);
    }
  }

  if (grad) {
    ParamVector g(std::move(eff_grad));
    if (quantizer_) {
      for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t i = weight_offset(l); i < bias_offset(l); ++i) {
          if (!ste_passes(params[i], *quantizer_)) g[i] = 0.0;
        }
      }
    }
    *grad = std::move(g);
  }
  if (min_margin) *min_margin = margin;
  return total * inv_b;
}

double TinyMlp::loss(const ParamVector& params, const SampleSet& data, Batch batch) const {
  return forward_backward(params, data, batch, nullptr, nullptr);
}

LossAndGradient TinyMlp::loss_and_gradient(const ParamVector& params, const SampleSet& data,
                                           Batch batch) const {
  ParamVector g(param_count_);
  const double l = forward_backward(params, data, batch, &g, nullptr);
  return {l, std::move(g)};
}

double TinyMlp::min_hidden_margin(const ParamVector& params, const SampleSet& data,
                                  Batch batch) const {
  double m = 0.0;
  forward_backward(params, data, batch, nullptr, &m);
  return m;
}

// ---- MlpObjective -------------------------------------------------------------

MlpObjective::MlpObjective(TinyMlp mlp, SampleSet data)
    : mlp_(std::move(mlp)), data_(std::move(data)), all_(data_.size()) {
  data_.validate();
  if (data_.feature_dim() != mlp_.widths().front()) {
    throw DimensionError("MlpObjective: feature width does not match the input layer");
  }
  std::iota(all_.begin(), all_.end(), std::size_t{0});
}

Batch MlpObjective::resolve(Batch batch) const { return batch.empty() ? Batch(all_) : batch; }

double MlpObjective::value(const ParamVector& x, Batch batch) const {
  return mlp_.loss(x, data_, resolve(batch));
}

ParamVector MlpObjective::gradient(const ParamVector& x, Batch batch) const {
  return mlp_.loss_and_gradient(x, data_, resolve(batch)).gradient;
}

}  // namespace sadam
