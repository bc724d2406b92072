#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "sadam/numerics.hpp"
#include "sadam/objectives.hpp"

namespace sadam {

/// Labelled feature vectors. inputs.size() == labels.size() >= 1 and all
/// feature vectors share one width.
struct SampleSet {
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;

  std::size_t size() const { return inputs.size(); }
  std::size_t feature_dim() const { return inputs.empty() ? 0 : inputs.front().size(); }
  void validate() const;
};

/// Two Gaussian blobs with unit variance, centred at -/+ (separation/2) along
/// the diagonal direction. Labels alternate 0, 1, 0, ... so any even prefix is
/// balanced.
SampleSet make_blobs(std::size_t n, std::size_t d, double separation, SeededRng& rng);

/// Draws one fresh sample from the same two-blob distribution with the given label.
std::vector<double> draw_blob_sample(std::size_t d, double separation, int label, SeededRng& rng);

/// CSV with header x0,...,x{d-1},label.
void write_csv(std::ostream& os, const SampleSet& data);

struct LossAndGradient {
  double loss;
  ParamVector gradient;
};

/// Dense ReLU network with softmax cross-entropy. Parameters are flattened layer
/// by layer as W (row-major, out x in) followed by b. When a quantizer is set,
/// weights (not biases) go through fake quantization in the forward pass and the
/// backward pass uses the clipped straight-through rule.
class TinyMlp {
 public:
  explicit TinyMlp(std::vector<std::size_t> widths,
                   std::optional<QuantizerConfig> quantizer = std::nullopt);

  const std::vector<std::size_t>& widths() const { return widths_; }
  const std::optional<QuantizerConfig>& quantizer() const { return quantizer_; }
  std::size_t param_count() const { return param_count_; }
  std::size_t num_classes() const { return widths_.back(); }

  /// Offset of layer l's weight block and bias block inside the flat vector.
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + widths_[layer] * widths_[layer + 1];
  }
  std::size_t num_layers() const { return widths_.size() - 1; }
  bool is_weight_index(std::size_t flat_index) const;

  /// He-normal weights, zero biases.
  ParamVector init_params(SeededRng& rng) const;

  /// Mean cross-entropy over the selected samples. Throws on an empty batch.
  double loss(const ParamVector& params, const SampleSet& data, Batch batch) const;
  LossAndGradient loss_and_gradient(const ParamVector& params, const SampleSet& data,
                                    Batch batch) const;

  /// Smallest |pre-activation| over all hidden units and samples in the batch;
  /// used to keep finite-difference checks away from ReLU kinks.
  double min_hidden_margin(const ParamVector& params, const SampleSet& data, Batch batch) const;

 private:
  double forward_backward(const ParamVector& params, const SampleSet& data, Batch batch,
                          ParamVector* grad, double* min_margin) const;

  std::vector<std::size_t> widths_;
  std::optional<QuantizerConfig> quantizer_;
  std::vector<std::size_t> offsets_;
  std::size_t param_count_ = 0;
};

/// Training loss of a TinyMlp on a fixed dataset. An empty batch means the full set.
class MlpObjective final : public Objective {
 public:
  MlpObjective(TinyMlp mlp, SampleSet data);

  std::string id() const override { return mlp_.quantizer() ? "mlp_quantized" : "mlp"; }
  std::size_t dim() const override { return mlp_.param_count(); }
  double value(const ParamVector& x, Batch batch = {}) const override;
  ParamVector gradient(const ParamVector& x, Batch batch = {}) const override;
  std::size_t sample_count() const override { return data_.size(); }

  const TinyMlp& mlp() const { return mlp_; }
  const SampleSet& data() const { return data_; }

 private:
  Batch resolve(Batch batch) const;

  TinyMlp mlp_;
  SampleSet data_;
  std::vector<std::size_t> all_;
};

}  // namespace sadam
