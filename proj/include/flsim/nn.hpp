#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "flsim/common.hpp"

namespace flsim {

// kIdentity disables the nonlinearity; it exists as a test hook for
// linearity checks and is not offered through experiment configs.
enum class Activation { kRelu, kTanh, kIdentity };

// Fully-connected feed-forward classifier: input -> hidden layers ->
// num_classes logits. The last hidden layer doubles as the feature
// extractor, so at least one hidden layer is required.
struct ModelSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int num_classes = 0;
  Activation activation = Activation::kRelu;
};

void validate_spec(const ModelSpec& spec);

// Sum over layers of (fan_in + 1) * fan_out.
int param_count(const ModelSpec& spec);

// Width of the last hidden layer.
int feature_dim(const ModelSpec& spec);

// Structured view of one affine layer. weights[r] is the fan_in-long row
// feeding output unit r.
struct LayerParams {
  std::vector<std::vector<double>> weights;
  std::vector<double> biases;
};

std::vector<LayerParams> unflatten(const ModelSpec& spec, const ParamVector& w);
ParamVector flatten(const ModelSpec& spec, const std::vector<LayerParams>& layers);

// Weights uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
// Bit-identical for a fixed (spec, seed).
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

struct ForwardResult {
  std::vector<double> logits;
  FeatureVector features;
};

ForwardResult forward(const ModelSpec& spec, const ParamVector& w,
                      const std::vector<double>& x);

// Mean softmax cross-entropy over the batch and its exact gradient.
std::pair<double, ParamVector> loss_and_grad(
    const ModelSpec& spec, const ParamVector& w,
    const std::vector<std::vector<double>>& inputs,
    const std::vector<int>& labels);

// Cross-entropy through a restricted softmax: logits are scaled per class
// by alpha_scale (each in (0, 1]) before normalization, and the gradient
// is taken through the scaling. alpha_scale of all ones reduces to
// loss_and_grad exactly.
std::pair<double, ParamVector> restricted_loss_and_grad(
    const ModelSpec& spec, const ParamVector& w,
    const std::vector<std::vector<double>>& inputs,
    const std::vector<int>& labels, const std::vector<double>& alpha_scale);

// Penultimate-layer features of the model whose parameters are exactly
// `params` (typically a deviation from the global model), evaluated at each
// probe. Output order matches probe order.
std::vector<FeatureVector> probe_features(
    const ModelSpec& spec, const ParamVector& params,
    const std::vector<std::vector<double>>& probes);

}  // namespace flsim
