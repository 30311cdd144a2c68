#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treereg/common.hpp"

namespace treereg::nn {

using ParamVector = std::vector<double>;

enum class Head { Sigmoid, Identity };

/// Fully connected network: ReLU hidden layers, sigmoid or identity output.
/// Parameters live in one flat vector laid out [W1 (out x in, row-major), b1,
/// W2, b2, ...] so that flatten/unflatten are plain copies.
struct MlpModel {
  std::vector<int> layer_sizes;
  Head head = Head::Sigmoid;
  ParamVector params;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int layer_count() const { return static_cast<int>(layer_sizes.size()) - 1; }
  std::size_t param_count() const { return params.size(); }

  // offset of layer l's weight block / bias block in params
  std::size_t weight_offset(int layer) const;
  std::size_t bias_offset(int layer) const;

  const double* weights(int layer) const { return params.data() + weight_offset(layer); }
  const double* biases(int layer) const { return params.data() + bias_offset(layer); }
};

std::size_t mlp_param_count(const std::vector<int>& layer_sizes);

MlpModel init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed,
                  Head head = Head::Sigmoid);

ParamVector flatten(const MlpModel& model);
void unflatten(MlpModel& model, const ParamVector& params);

std::vector<double> forward(const MlpModel& model, std::span<const double> x);
void forward_batch(const MlpModel& model, const Matrix& X, Matrix& out);

/// Mean binary cross-entropy over outputs; predictions clamped to
/// [1e-7, 1 - 1e-7] before the logs.
double loss_bce(std::span<const double> pred, std::span<const double> y);
/// Mean squared error over outputs.
double loss_mse(std::span<const double> pred, std::span<const double> y);

/// Mean per-example loss (BCE for sigmoid head, MSE for identity head).
double batch_loss(const MlpModel& model, const Matrix& X, const Matrix& Y);

/// Gradient of batch_loss w.r.t. params; extra, when present, is added
/// elementwise (the lambda-scaled penalty gradient).
ParamVector backward(const MlpModel& model, const Matrix& X, const Matrix& Y,
                     const ParamVector* extra = nullptr);

/// d(output)/d(input) for a scalar identity-head model.
std::vector<double> grad_wrt_input(const MlpModel& model, std::span<const double> x);

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m, v;
  std::int64_t step = 0;
};

void adam_step(MlpModel& model, const ParamVector& grad, AdamState& state);

std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(const std::string& text);

}  // namespace treereg::nn
