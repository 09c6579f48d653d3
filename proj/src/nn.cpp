#include "flsim/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace flsim {

namespace {

struct LayerDims {
  int fan_in;
  int fan_out;
  int weight_offset;  // into the flat vector
  int bias_offset;
};

std::vector<LayerDims> layer_dims(const ModelSpec& spec) {
  std::vector<LayerDims> dims;
  int fan_in = spec.input_dim;
  int offset = 0;
  for (std::size_t l = 0; l <= spec.hidden_dims.size(); ++l) {
    int fan_out = l < spec.hidden_dims.size() ? spec.hidden_dims[l]
                                              : spec.num_classes;
    dims.push_back({fan_in, fan_out, offset, offset + fan_in * fan_out});
    offset += (fan_in + 1) * fan_out;
    fan_in = fan_out;
  }
  return dims;
}

double activate(Activation act, double z) {
  switch (act) {
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kIdentity:
      return z;
  }
  return z;
}

// Derivative expressed through pre-activation z and post-activation a.
double activate_grad(Activation act, double z, double a) {
  switch (act) {
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh:
      return 1.0 - a * a;
    case Activation::kIdentity:
      return 1.0;
  }
  return 1.0;
}

void check_weights(const ModelSpec& spec, const ParamVector& w) {
  if (static_cast<int>(w.size()) != param_count(spec)) {
    throw std::invalid_argument("parameter vector length does not match spec");
  }
}

void check_input(const ModelSpec& spec, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != spec.input_dim) {
    throw std::invalid_argument("input dimension does not match spec");
  }
}

// All layer activations for one sample: pre[l], post[l] for every layer,
// post of the final layer being the raw logits.
struct Trace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
};

Trace run_forward(const ModelSpec& spec, const std::vector<LayerDims>& dims,
                  const ParamVector& w, const std::vector<double>& x) {
  Trace t;
  t.pre.resize(dims.size());
  t.post.resize(dims.size());
  const std::vector<double>* in = &x;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const LayerDims& d = dims[l];
    t.pre[l].assign(d.fan_out, 0.0);
    for (int r = 0; r < d.fan_out; ++r) {
      double z = w[d.bias_offset + r];
      const double* row = w.data() + d.weight_offset + r * d.fan_in;
      for (int c = 0; c < d.fan_in; ++c) z += row[c] * (*in)[c];
      t.pre[l][r] = z;
    }
    if (l + 1 == dims.size()) {
      t.post[l] = t.pre[l];  // logits stay affine
    } else {
      t.post[l].resize(d.fan_out);
      for (int r = 0; r < d.fan_out; ++r) {
        t.post[l][r] = activate(spec.activation, t.pre[l][r]);
      }
    }
    in = &t.post[l];
  }
  return t;
}

// Shared core for the plain and restricted losses; alpha == nullptr means
// unscaled logits.
std::pair<double, ParamVector> loss_and_grad_impl(
    const ModelSpec& spec, const ParamVector& w,
    const std::vector<std::vector<double>>& inputs,
    const std::vector<int>& labels, const std::vector<double>* alpha) {
  validate_spec(spec);
  check_weights(spec, w);
  require(!inputs.empty(), "loss_and_grad: empty batch");
  require(inputs.size() == labels.size(),
          "loss_and_grad: inputs/labels length mismatch");
  const int c_count = spec.num_classes;
  for (int y : labels) {
    require(y >= 0 && y < c_count, "loss_and_grad: label out of range");
  }
  const auto dims = layer_dims(spec);
  const std::size_t batch = inputs.size();

  double loss_sum = 0.0;
  ParamVector grad(w.size(), 0.0);
  std::vector<double> scaled(c_count);
  std::vector<double> prob(c_count);

  for (std::size_t s = 0; s < batch; ++s) {
    check_input(spec, inputs[s]);
    Trace t = run_forward(spec, dims, w, inputs[s]);
    const std::vector<double>& logits = t.post.back();
    for (int c = 0; c < c_count; ++c) {
      scaled[c] = alpha ? (*alpha)[c] * logits[c] : logits[c];
    }
    double mx = *std::max_element(scaled.begin(), scaled.end());
    double sum_exp = 0.0;
    for (int c = 0; c < c_count; ++c) {
      prob[c] = std::exp(scaled[c] - mx);
      sum_exp += prob[c];
    }
    for (int c = 0; c < c_count; ++c) prob[c] /= sum_exp;
    loss_sum += std::log(sum_exp) + mx - scaled[labels[s]];

    // Backward pass; delta holds dLoss/dpre for the current layer.
    std::vector<double> delta(c_count);
    for (int c = 0; c < c_count; ++c) {
      double dt = prob[c] - (c == labels[s] ? 1.0 : 0.0);
      delta[c] = alpha ? (*alpha)[c] * dt : dt;
    }
    for (int l = static_cast<int>(dims.size()) - 1; l >= 0; --l) {
      const LayerDims& d = dims[l];
      const std::vector<double>& in_act =
          l == 0 ? inputs[s] : t.post[l - 1];
      for (int r = 0; r < d.fan_out; ++r) {
        double* grow = grad.data() + d.weight_offset + r * d.fan_in;
        for (int c = 0; c < d.fan_in; ++c) grow[c] += delta[r] * in_act[c];
        grad[d.bias_offset + r] += delta[r];
      }
      if (l > 0) {
        const LayerDims& dp = dims[l - 1];
        std::vector<double> prev(dp.fan_out, 0.0);
        for (int r = 0; r < d.fan_out; ++r) {
          const double* row = w.data() + d.weight_offset + r * d.fan_in;
          for (int c = 0; c < d.fan_in; ++c) prev[c] += row[c] * delta[r];
        }
        for (int c = 0; c < dp.fan_out; ++c) {
          prev[c] *= activate_grad(spec.activation, t.pre[l - 1][c],
                                   t.post[l - 1][c]);
        }
        delta = std::move(prev);
      }
    }
  }

  double inv = 1.0 / static_cast<double>(batch);
  for (double& g : grad) g *= inv;
  return {loss_sum * inv, std::move(grad)};
}

}  // namespace

void validate_spec(const ModelSpec& spec) {
  require(spec.input_dim >= 1, "ModelSpec: input_dim must be positive");
  require(spec.num_classes >= 1, "ModelSpec: num_classes must be positive");
  require(!spec.hidden_dims.empty(),
          "ModelSpec: at least one hidden layer is required");
  for (int h : spec.hidden_dims) {
    require(h >= 1, "ModelSpec: hidden widths must be positive");
  }
}

int param_count(const ModelSpec& spec) {
  validate_spec(spec);
  int total = 0;
  int fan_in = spec.input_dim;
  for (int h : spec.hidden_dims) {
    total += (fan_in + 1) * h;
    fan_in = h;
  }
  total += (fan_in + 1) * spec.num_classes;
  return total;
}

int feature_dim(const ModelSpec& spec) {
  validate_spec(spec);
  return spec.hidden_dims.back();
}

std::vector<LayerParams> unflatten(const ModelSpec& spec, const ParamVector& w) {
  validate_spec(spec);
  check_weights(spec, w);
  std::vector<LayerParams> layers;
  for (const LayerDims& d : layer_dims(spec)) {
    LayerParams lp;
    lp.weights.resize(d.fan_out);
    for (int r = 0; r < d.fan_out; ++r) {
      auto begin = w.begin() + d.weight_offset + r * d.fan_in;
      lp.weights[r].assign(begin, begin + d.fan_in);
    }
    lp.biases.assign(w.begin() + d.bias_offset,
                     w.begin() + d.bias_offset + d.fan_out);
    layers.push_back(std::move(lp));
  }
  return layers;
}

ParamVector flatten(const ModelSpec& spec,
                    const std::vector<LayerParams>& layers) {
  validate_spec(spec);
  const auto dims = layer_dims(spec);
  require(layers.size() == dims.size(), "flatten: wrong layer count");
  ParamVector w(param_count(spec));
  for (std::size_t l = 0; l < dims.size(); ++l) {
    const LayerDims& d = dims[l];
    require(static_cast<int>(layers[l].weights.size()) == d.fan_out &&
                static_cast<int>(layers[l].biases.size()) == d.fan_out,
            "flatten: layer shape mismatch");
    for (int r = 0; r < d.fan_out; ++r) {
      require(static_cast<int>(layers[l].weights[r].size()) == d.fan_in,
              "flatten: layer shape mismatch");
      std::copy(layers[l].weights[r].begin(), layers[l].weights[r].end(),
                w.begin() + d.weight_offset + r * d.fan_in);
    }
    std::copy(layers[l].biases.begin(), layers[l].biases.end(),
              w.begin() + d.bias_offset);
  }
  return w;
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  ParamVector w(param_count(spec), 0.0);
  std::mt19937_64 rng(seed);
  for (const LayerDims& d : layer_dims(spec)) {
    double bound = 1.0 / std::sqrt(static_cast<double>(d.fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int i = 0; i < d.fan_in * d.fan_out; ++i) {
      w[d.weight_offset + i] = dist(rng);
    }
    // biases stay zero
  }
  return w;
}

ForwardResult forward(const ModelSpec& spec, const ParamVector& w,
                      const std::vector<double>& x) {
  validate_spec(spec);
  check_weights(spec, w);
  check_input(spec, x);
  const auto dims = layer_dims(spec);
  Trace t = run_forward(spec, dims, w, x);
  ForwardResult out;
  out.logits = t.post.back();
  out.features = t.post[dims.size() - 2];
  return out;
}

std::pair<double, ParamVector> loss_and_grad(
    const ModelSpec& spec, const ParamVector& w,
    const std::vector<std::vector<double>>& inputs,
    const std::vector<int>& labels) {
  return loss_and_grad_impl(spec, w, inputs, labels, nullptr);
}

std::pair<double, ParamVector> restricted_loss_and_grad(
    const ModelSpec& spec, const ParamVector& w,
    const std::vector<std::vector<double>>& inputs,
    const std::vector<int>& labels, const std::vector<double>& alpha_scale) {
  require(static_cast<int>(alpha_scale.size()) == spec.num_classes,
          "restricted_loss_and_grad: alpha_scale length must equal C");
  for (double a : alpha_scale) {
    require(a > 0.0 && a <= 1.0,
            "restricted_loss_and_grad: alpha_scale entries must lie in (0,1]");
  }
  return loss_and_grad_impl(spec, w, inputs, labels, &alpha_scale);
}

std::vector<FeatureVector> probe_features(
    const ModelSpec& spec, const ParamVector& params,
    const std::vector<std::vector<double>>& probes) {
  validate_spec(spec);
  check_weights(spec, params);
  std::vector<FeatureVector> out;
  out.reserve(probes.size());
  for (const auto& v : probes) {
    out.push_back(forward(spec, params, v).features);
  }
  return out;
}

}  // namespace flsim
