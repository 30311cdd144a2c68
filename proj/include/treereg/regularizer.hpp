#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "treereg/common.hpp"
#include "treereg/datasets.hpp"
#include "treereg/nn.hpp"
#include "treereg/regions.hpp"
#include "treereg/tree.hpp"

namespace treereg::reg {

enum class Kind {
  None,
  L2,
  GlobalTree,
  RegionalL1,
  RegionalL0,
  RegionalLsp,
};

Kind kind_from_string(const std::string& name);
std::string kind_to_string(Kind kind);
bool uses_surrogates(Kind kind);

/// Rolling store of (theta, per-region true path length) pairs used as
/// surrogate training data. FIFO eviction at capacity.
class ParamBuffer {
 public:
  struct Record {
    nn::ParamVector theta;
    std::vector<double> apls;
  };

  explicit ParamBuffer(int capacity = 50);

  void push(nn::ParamVector theta, std::vector<double> apls);
  const std::deque<Record>& records() const { return records_; }
  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(records_.size()); }
  bool empty() const { return records_.empty(); }
  int param_dim() const;
  int region_count() const;

 private:
  int capacity_;
  std::deque<Record> records_;
};

/// Uniform Dirichlet draw (alpha = 1): nonnegative, sums to one.
std::vector<double> dirichlet_weights(int j, Rng& rng);

using AplOracle = std::function<std::vector<double>(const nn::ParamVector&)>;

/// Enlarges the buffer with n_synthetic convex combinations of the stored
/// parameter vectors, each paired with its true path lengths from the
/// oracle. The result's capacity is grown so nothing is evicted.
ParamBuffer augment_buffer(const ParamBuffer& buffer, int n_synthetic,
                           std::uint64_t seed, const AplOracle& apl_oracle);

/// Euclidean projection onto the probability simplex.
std::vector<double> sparsemax(std::span<const double> z);

struct PenaltyResult {
  double value = 0.0;
  std::vector<double> weights;  // which regional gradients flow, and how much
};

/// Combines per-region path-length estimates: sum (regional L1), max
/// (regional L0, ties to the lowest index), or a sparsemax-weighted sum.
/// Estimates are clamped at zero first. GlobalTree and None are accepted for
/// uniformity (sum over the single region / zero).
PenaltyResult penalty(Kind kind, std::span<const double> apl_estimates,
                      double temperature = 1.0);

struct SurrogateConfig {
  std::vector<int> hidden{25};
  int epochs = 60;
  double learning_rate = 5e-3;
  int batch_size = 64;  // 0 = full batch
  int retrain_period = 25;
  int n_augment = 500;
  int buffer_capacity = 50;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// One scalar-output estimator per (nonempty) region, mapping the target's
/// flattened parameters to that region's path length.
struct SurrogateSet {
  std::vector<nn::MlpModel> models;
  std::vector<bool> trained;
  SurrogateConfig cfg;
  int input_dim = 0;

  void init(int n_regions, int input_dim, const SurrogateConfig& cfg);
  int count() const { return static_cast<int>(models.size()); }
  bool all_trained() const;
  /// Clamped-at-zero per-region estimates at theta.
  std::vector<double> estimates(const nn::ParamVector& theta) const;
};

struct SurrogateFitStats {
  std::vector<double> train_mse;    // per region
  std::vector<double> holdout_mse;  // per region, NaN when no holdout given
};

/// Fits every region's surrogate on {(theta_j, apls_j[r])} by minibatch
/// Adam on squared error. Models warm-start from their previous parameters.
SurrogateFitStats train_surrogates(const ParamBuffer& buffer, SurrogateSet& set,
                                   const ParamBuffer* holdout = nullptr);

struct PenaltyGradResult {
  double value = 0.0;
  nn::ParamVector grad;
};

/// Penalty value and its gradient w.r.t. theta through the surrogates. The
/// combination weights (sparsemax output / argmax mask) are treated as
/// constants, so only the selected regions' surrogate gradients flow.
PenaltyGradResult penalty_grad(Kind kind, const SurrogateSet& surrogates,
                               const nn::ParamVector& theta,
                               double temperature = 1.0);

/// Per-region true path lengths for the model's thresholded predictions,
/// averaged over outputs. Regions with fewer than 2 points contribute 0.
std::vector<double> true_regional_apls(const nn::MlpModel& model,
                                       const data::Dataset& dataset,
                                       const regions::RegionSpec& spec,
                                       const tree::TreeConfig& cfg);

/// Same, but over an explicit partition of the dataset rows.
std::vector<double> true_apls_for_partition(
    const nn::MlpModel& model, const data::Dataset& dataset,
    const std::vector<std::vector<int>>& parts, const tree::TreeConfig& cfg);

struct SurrogateDiagRecord {
  int epoch = 0;
  int region = 0;
  int buffer_size = 0;
  double train_mse = 0.0;
  double holdout_mse = 0.0;
};

std::string surrogate_diag_csv(const std::vector<SurrogateDiagRecord>& rows);

}  // namespace treereg::reg
