#include "treereg/nn.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace treereg::nn {

namespace {

constexpr double kProbEps = 1e-7;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

void check_architecture(const std::vector<int>& sizes) {
  if (sizes.size() < 2)
    fail_invalid("invalid architecture: need at least input and output sizes");
  for (int s : sizes)
    if (s < 1) fail_invalid("invalid architecture: layer sizes must be >= 1");
}

// Per-layer offsets recomputed on demand; layer counts are single digits.
std::size_t layer_offset(const std::vector<int>& sizes, int layer, bool bias) {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l)
    off += static_cast<std::size_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
  if (bias) off += static_cast<std::size_t>(sizes[layer + 1]) * sizes[layer];
  return off;
}

struct Workspace {
  // activations[l] = layer input l (activations[0] = x), post[last] = output
  std::vector<std::vector<double>> act;
  std::vector<std::vector<double>> delta;

  explicit Workspace(const std::vector<int>& sizes) {
    act.resize(sizes.size());
    delta.resize(sizes.size());
    for (std::size_t l = 0; l < sizes.size(); ++l) {
      act[l].resize(static_cast<std::size_t>(sizes[l]));
      delta[l].resize(static_cast<std::size_t>(sizes[l]));
    }
  }
};

void forward_into(const MlpModel& m, std::span<const double> x, Workspace& ws) {
  std::copy(x.begin(), x.end(), ws.act[0].begin());
  const int L = m.layer_count();
  for (int l = 0; l < L; ++l) {
    const int in = m.layer_sizes[l];
    const int out = m.layer_sizes[l + 1];
    const double* W = m.weights(l);
    const double* b = m.biases(l);
    const double* a = ws.act[l].data();
    double* z = ws.act[l + 1].data();
    for (int o = 0; o < out; ++o) {
      double s = b[o];
      const double* wrow = W + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) s += wrow[i] * a[i];
      z[o] = s;
    }
    if (l + 1 < L) {
      for (int o = 0; o < out; ++o) z[o] = z[o] > 0.0 ? z[o] : 0.0;
    } else if (m.head == Head::Sigmoid) {
      for (int o = 0; o < out; ++o) z[o] = sigmoid(z[o]);
    }
  }
}

// Backprop from output deltas (dL/d pre-activation for sigmoid+BCE, or
// dL/d output for identity head) down to grad and optionally input grad.
void backprop_into(const MlpModel& m, Workspace& ws,
                   std::span<const double> out_delta, double* grad,
                   double* input_grad) {
  const int L = m.layer_count();
  std::copy(out_delta.begin(), out_delta.end(), ws.delta[L].begin());
  for (int l = L - 1; l >= 0; --l) {
    const int in = m.layer_sizes[l];
    const int out = m.layer_sizes[l + 1];
    const double* W = m.weights(l);
    const double* a = ws.act[l].data();
    const double* d = ws.delta[l + 1].data();
    if (grad) {
      double* gw = grad + layer_offset(m.layer_sizes, l, false);
      double* gb = grad + layer_offset(m.layer_sizes, l, true);
      for (int o = 0; o < out; ++o) {
        double* grow = gw + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) grow[i] += d[o] * a[i];
        gb[o] += d[o];
      }
    }
    if (l == 0 && !input_grad) break;
    double* dprev = ws.delta[l].data();
    for (int i = 0; i < in; ++i) {
      double s = 0.0;
      for (int o = 0; o < out; ++o)
        s += W[static_cast<std::size_t>(o) * in + i] * d[o];
      dprev[i] = s;
    }
    if (l > 0) {
      // ReLU gate on the hidden activation
      for (int i = 0; i < in; ++i)
        if (ws.act[l][i] <= 0.0) dprev[i] = 0.0;
    }
  }
  if (input_grad)
    std::copy(ws.delta[0].begin(), ws.delta[0].end(), input_grad);
}

}  // namespace

std::size_t MlpModel::weight_offset(int layer) const {
  return layer_offset(layer_sizes, layer, false);
}
std::size_t MlpModel::bias_offset(int layer) const {
  return layer_offset(layer_sizes, layer, true);
}

std::size_t mlp_param_count(const std::vector<int>& layer_sizes) {
  check_architecture(layer_sizes);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    n += static_cast<std::size_t>(layer_sizes[l + 1]) * layer_sizes[l] +
         layer_sizes[l + 1];
  return n;
}

MlpModel init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed,
                  Head head) {
  check_architecture(layer_sizes);
  MlpModel m;
  m.layer_sizes = layer_sizes;
  m.head = head;
  m.params.assign(mlp_param_count(layer_sizes), 0.0);
  Rng rng(derive_seed(seed, "mlp-init"));
  for (int l = 0; l + 1 < static_cast<int>(layer_sizes.size()); ++l) {
    const int in = layer_sizes[l];
    const int out = layer_sizes[l + 1];
    double scale = 1.0 / std::sqrt(static_cast<double>(in));
    double* W = m.params.data() + m.weight_offset(l);
    for (int i = 0; i < out * in; ++i) W[i] = scale * rng.normal();
    // biases stay zero
  }
  return m;
}

ParamVector flatten(const MlpModel& model) { return model.params; }

void unflatten(MlpModel& model, const ParamVector& params) {
  if (params.size() != model.params.size())
    fail_shape("unflatten: parameter vector length mismatch");
  model.params = params;
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.input_size())
    fail_shape("forward: input length does not match model input size");
  Workspace ws(model.layer_sizes);
  forward_into(model, x, ws);
  return ws.act.back();
}

void forward_batch(const MlpModel& model, const Matrix& X, Matrix& out) {
  if (X.cols != model.input_size())
    fail_shape("forward_batch: input width does not match model input size");
  out = Matrix(X.rows, model.output_size());
  Workspace ws(model.layer_sizes);
  for (int i = 0; i < X.rows; ++i) {
    forward_into(model, X.row_span(i), ws);
    std::copy(ws.act.back().begin(), ws.act.back().end(), out.row(i));
  }
}

double loss_bce(std::span<const double> pred, std::span<const double> y) {
  if (pred.size() != y.size()) fail_shape("loss_bce: length mismatch");
  if (pred.empty()) fail_invalid("loss_bce: empty vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double p = std::clamp(pred[i], kProbEps, 1.0 - kProbEps);
    s += -(y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p));
  }
  return s / static_cast<double>(pred.size());
}

double loss_mse(std::span<const double> pred, std::span<const double> y) {
  if (pred.size() != y.size()) fail_shape("loss_mse: length mismatch");
  if (pred.empty()) fail_invalid("loss_mse: empty vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - y[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

double batch_loss(const MlpModel& model, const Matrix& X, const Matrix& Y) {
  if (X.rows != Y.rows) fail_shape("batch_loss: row count mismatch");
  if (X.rows == 0) fail_invalid("batch_loss: empty batch");
  if (Y.cols != model.output_size()) fail_shape("batch_loss: label width mismatch");
  Workspace ws(model.layer_sizes);
  double s = 0.0;
  for (int i = 0; i < X.rows; ++i) {
    forward_into(model, X.row_span(i), ws);
    std::span<const double> pred(ws.act.back());
    s += model.head == Head::Sigmoid ? loss_bce(pred, Y.row_span(i))
                                     : loss_mse(pred, Y.row_span(i));
  }
  return s / X.rows;
}

ParamVector backward(const MlpModel& model, const Matrix& X, const Matrix& Y,
                     const ParamVector* extra) {
  if (X.rows != Y.rows) fail_shape("backward: row count mismatch");
  if (X.rows == 0) fail_invalid("backward: empty batch");
  if (X.cols != model.input_size() || Y.cols != model.output_size())
    fail_shape("backward: batch width mismatch");
  if (extra && extra->size() != model.param_count())
    fail_shape("backward: extra gradient length mismatch");

  ParamVector grad(model.param_count(), 0.0);
  Workspace ws(model.layer_sizes);
  const int q = model.output_size();
  const double inv = 1.0 / (static_cast<double>(X.rows) * q);
  std::vector<double> out_delta(static_cast<std::size_t>(q));
  for (int i = 0; i < X.rows; ++i) {
    forward_into(model, X.row_span(i), ws);
    const double* pred = ws.act.back().data();
    const double* y = Y.row(i);
    for (int o = 0; o < q; ++o) {
      // sigmoid+BCE: dL/dz = p - y; identity+MSE: dL/dz = 2 (p - y)
      out_delta[static_cast<std::size_t>(o)] =
          model.head == Head::Sigmoid ? (pred[o] - y[o]) * inv
                                      : 2.0 * (pred[o] - y[o]) * inv;
    }
    backprop_into(model, ws, out_delta, grad.data(), nullptr);
  }
  if (extra)
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += (*extra)[i];
  return grad;
}

std::vector<double> grad_wrt_input(const MlpModel& model,
                                   std::span<const double> x) {
  if (model.head != Head::Identity || model.output_size() != 1)
    fail_contract("grad_wrt_input: model must have a scalar identity head");
  if (static_cast<int>(x.size()) != model.input_size())
    fail_shape("grad_wrt_input: input length mismatch");
  Workspace ws(model.layer_sizes);
  forward_into(model, x, ws);
  std::vector<double> input_grad(x.size(), 0.0);
  const double one = 1.0;
  backprop_into(model, ws, std::span<const double>(&one, 1), nullptr,
                input_grad.data());
  return input_grad;
}

void adam_step(MlpModel& model, const ParamVector& grad, AdamState& state) {
  const std::size_t n = model.param_count();
  if (grad.size() != n) fail_shape("adam_step: gradient length mismatch");
  if (state.m.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  if (state.m.size() != n || state.v.size() != n)
    fail_shape("adam_step: state length mismatch");
  state.step += 1;
  const double b1t = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double b2t = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    double mhat = state.m[i] / b1t;
    double vhat = state.v[i] / b2t;
    model.params[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.eps);
  }
}

std::string model_to_json(const MlpModel& model) {
  nlohmann::json j;
  j["format"] = "treereg-model";
  j["version"] = 1;
  j["layer_sizes"] = model.layer_sizes;
  j["hidden_activation"] = "relu";
  j["output_activation"] = model.head == Head::Sigmoid ? "sigmoid" : "identity";
  j["params"] = model.params;
  return j.dump();
}

MlpModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail_io(std::string("model_from_json: ") + e.what());
  }
  MlpModel m;
  try {
    m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    std::string act = j.at("output_activation").get<std::string>();
    if (act == "sigmoid")
      m.head = Head::Sigmoid;
    else if (act == "identity")
      m.head = Head::Identity;
    else
      fail_io("model_from_json: unknown output activation '" + act + "'");
    m.params = j.at("params").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail_io(std::string("model_from_json: ") + e.what());
  }
  check_architecture(m.layer_sizes);
  if (m.params.size() != mlp_param_count(m.layer_sizes))
    fail_io("model_from_json: parameter count does not match layer sizes");
  return m;
}

}  // namespace treereg::nn
