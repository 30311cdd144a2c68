#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "treereg/common.hpp"
#include "treereg/datasets.hpp"
#include "treereg/nn.hpp"
#include "treereg/regions.hpp"
#include "treereg/regularizer.hpp"
#include "treereg/tree.hpp"

namespace treereg::exp {

struct ModelConfig {
  std::vector<int> hidden{32};
  std::uint64_t seed = 0;
  int epochs = 400;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double val_fraction = 0.2;  // carved from train when no explicit val split
  int convergence_window = 10;
  double convergence_tol = 1e-3;
  bool early_stop = true;
};

struct TrainConfig {
  ModelConfig model;
  reg::Kind kind = reg::Kind::None;
  double lambda = 0.0;
  double temperature = 1.0;
  tree::TreeConfig tree;
  reg::SurrogateConfig surrogate;
};

/// lambda grid used by the paper-protocol sweeps.
const std::vector<double>& paper_lambda_grid();

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double penalty = 0.0;
  double val_accuracy = 0.0;
  double val_apl = 0.0;
  double true_apl = std::numeric_limits<double>::quiet_NaN();
  double surrogate_apl = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct TrainResult {
  nn::MlpModel model;
  std::vector<EpochRecord> history;
  std::vector<reg::SurrogateDiagRecord> surrogate_diag;
  int epochs_run = 0;
  int epochs_to_converge = 0;  // epochs cap when convergence never triggered
  bool converged = false;
  double train_seconds = 0.0;
};

/// Minibatch training of data loss + lambda * penalty. Every
/// surrogate.retrain_period epochs the current parameters and their true
/// regional path lengths enter the buffer, the buffer is augmented, and the
/// surrogates are refit. val may be null: a validation split is then carved
/// from train.
TrainResult train_target(const TrainConfig& cfg, const data::Dataset& train,
                         const data::Dataset* val,
                         const regions::RegionSpec& spec);

/// Probability predictor abstraction so tree baselines share the evaluation
/// path with MLP models.
using PredictProbaFn =
    std::function<std::vector<double>(std::span<const double>)>;

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  double eval_apl = 0.0;  // regional-L1 evaluation APL: sum of per-region test APLs
  double fidelity = 0.0;
  std::vector<double> region_apls;
  std::vector<double> per_output_f1;
  std::vector<double> per_output_auc;
};

Metrics evaluate(const nn::MlpModel& model, const data::Dataset& train,
                 const data::Dataset& test, const regions::RegionSpec& spec,
                 const TrainConfig& cfg);

Metrics evaluate_predictor(const PredictProbaFn& predict, int outputs,
                           const data::Dataset& train,
                           const data::Dataset& test,
                           const regions::RegionSpec& spec,
                           const TrainConfig& cfg);

/// One pruned tree per nonempty region and output, fit on region-routed
/// training inputs labeled by the model. trees[region] is empty when the
/// region had fewer than 2 training points.
using RegionTrees = std::vector<std::vector<tree::DecisionTree>>;

RegionTrees distill(const nn::MlpModel& model, const data::Dataset& train,
                    const regions::RegionSpec& spec, const TrainConfig& cfg);

RegionTrees distill_predictor(const PredictProbaFn& predict, int outputs,
                              const data::Dataset& train,
                              const regions::RegionSpec& spec,
                              const TrainConfig& cfg);

/// Fraction of rows where the region-routed tree agrees with the model's
/// thresholded prediction (mean over outputs).
double fidelity(const nn::MlpModel& model, const RegionTrees& trees,
                const Matrix& X, const regions::RegionSpec& spec);

double fidelity_predictor(const PredictProbaFn& predict, int outputs,
                          const RegionTrees& trees, const Matrix& X,
                          const regions::RegionSpec& spec);

std::string region_trees_to_json(const RegionTrees& trees, int region);

struct SweepConfig {
  std::vector<reg::Kind> kinds;
  std::vector<double> lambdas;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int threads = 0;  // 0 = hardware concurrency
  bool include_baselines = true;
};

struct SweepRow {
  std::string kind;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  double eval_apl = 0.0;
  double fidelity = 0.0;
  double train_seconds = 0.0;
  int epochs_to_converge = 0;
  std::string error;  // empty on success; failures do not stop the sweep
};

/// Runs every (kind, lambda, seed) cell plus the tree baselines on a work
/// queue. Rows come back ordered by (kind, lambda, seed) regardless of
/// completion order.
std::vector<SweepRow> sweep(const SweepConfig& grid, const TrainConfig& base,
                            const data::Dataset& train,
                            const data::Dataset* val,
                            const data::Dataset& test,
                            const regions::RegionSpec& spec);

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string history_csv(const std::vector<EpochRecord>& rows);

}  // namespace treereg::exp
