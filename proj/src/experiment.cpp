#include "treereg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace treereg::exp {

const std::vector<double>& paper_lambda_grid() {
  static const std::vector<double> grid = {0.0001, 0.0005, 0.001, 0.005, 0.01,
                                           0.02,   0.05,   0.1,   0.2,   0.5,
                                           1.0,    2.0,    5.0,   10.0};
  return grid;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Split {
  data::Dataset fit;
  data::Dataset val;
};

Split make_split(const TrainConfig& cfg, const data::Dataset& train,
                 const data::Dataset* val) {
  Split out;
  if (val && val->rows() > 0) {
    out.fit = train;
    out.val = *val;
    return out;
  }
  const int n = train.rows();
  if (cfg.model.val_fraction <= 0.0) {
    out.fit = train;
    out.val = train;  // convergence tracked on the training data itself
    return out;
  }
  int n_val = std::clamp(
      static_cast<int>(std::lround(cfg.model.val_fraction * n)), 1, n - 1);
  std::vector<int> order = iota_indices(n);
  Rng rng(derive_seed(cfg.model.seed, "val-split"));
  rng.shuffle(order);
  std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  std::vector<int> fit_idx(order.begin() + n_val, order.end());
  out.fit.X = train.X.take_rows(fit_idx);
  out.fit.Y = train.Y.take_rows(fit_idx);
  out.val.X = train.X.take_rows(val_idx);
  out.val.Y = train.Y.take_rows(val_idx);
  return out;
}

double predictions_accuracy(const Matrix& pred, const Matrix& Y) {
  int hits = 0;
  for (int i = 0; i < pred.rows; ++i)
    for (int c = 0; c < pred.cols; ++c)
      hits += (pred.at(i, c) > 0.5 ? 1.0 : 0.0) == Y.at(i, c);
  return static_cast<double>(hits) / (pred.rows * pred.cols);
}

/// Sum over regions (undersized ones count 0) of the per-region
/// mean-over-outputs APL of the predictor's thresholded labels: the
/// regional-L1 evaluation criterion.
double regional_apl_sum(const PredictProbaFn& predict, int outputs,
                        const Matrix& X,
                        const std::vector<std::vector<int>>& parts,
                        const tree::TreeConfig& tree_cfg, bool warn_empty) {
  if (parts.empty()) fail_invalid("regional_apl_sum: no regions");
  double total = 0.0;
  for (std::size_t r = 0; r < parts.size(); ++r) {
    if (parts[r].size() < 2) {
      if (warn_empty)
        log_warning("evaluation: region " + std::to_string(r) +
                    " has fewer than 2 rows; APL 0");
      continue;
    }
    Matrix Xr = X.take_rows(parts[r]);
    double sum = 0.0;
    for (int o = 0; o < outputs; ++o) {
      auto label_fn = [&](std::span<const double> x) {
        return predict(x)[static_cast<std::size_t>(o)] > 0.5 ? 1 : 0;
      };
      sum += tree::apl(Xr, label_fn, tree_cfg);
    }
    total += sum / outputs;
  }
  return total;
}

PredictProbaFn model_predictor(const nn::MlpModel& model) {
  return [&model](std::span<const double> x) { return nn::forward(model, x); };
}

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TrainResult train_target(const TrainConfig& cfg, const data::Dataset& train,
                         const data::Dataset* val,
                         const regions::RegionSpec& spec) {
  if (train.rows() == 0) fail_invalid("train_target: empty training set");
  if (train.X.cols != spec.input_dim())
    fail_shape("train_target: region spec dimension does not match data");
  if (cfg.lambda < 0.0) fail_invalid("train_target: lambda must be >= 0");
  if (cfg.model.epochs < 1) fail_invalid("train_target: epochs must be >= 1");
  if (cfg.model.batch_size < 1)
    fail_invalid("train_target: batch_size must be >= 1");

  const auto t0 = Clock::now();
  Split split = make_split(cfg, train, val);
  const int n = split.fit.rows();
  const int p = split.fit.features();
  const int q = split.fit.outputs();

  std::vector<int> sizes;
  sizes.push_back(p);
  for (int h : cfg.model.hidden) sizes.push_back(h);
  sizes.push_back(q);
  nn::MlpModel model = nn::init_mlp(sizes, cfg.model.seed, nn::Head::Sigmoid);

  nn::AdamState opt;
  opt.learning_rate = cfg.model.learning_rate;

  // region bookkeeping: surrogates cover the regions with enough data
  const bool surrogate_kind = reg::uses_surrogates(cfg.kind);
  const bool penalty_active = surrogate_kind && cfg.lambda > 0.0;
  std::vector<std::vector<int>> fit_parts;
  std::vector<std::vector<int>> active_parts;  // what the oracle scores
  if (penalty_active) {
    if (cfg.kind == reg::Kind::GlobalTree) {
      active_parts.push_back(iota_indices(n));
    } else {
      fit_parts = regions::partition(split.fit.X, spec);
      for (const auto& part : fit_parts)
        if (part.size() >= 2) active_parts.push_back(part);
      if (active_parts.empty())
        fail_invalid("train_target: no region has at least 2 training points");
    }
  }

  reg::SurrogateSet surrogates;
  reg::ParamBuffer buffer(cfg.surrogate.buffer_capacity);
  reg::AplOracle oracle;
  if (penalty_active) {
    surrogates.init(static_cast<int>(active_parts.size()),
                    static_cast<int>(model.param_count()), cfg.surrogate);
    nn::MlpModel probe = model;
    oracle = [&split, &cfg, &active_parts, probe](
                 const nn::ParamVector& theta) mutable {
      nn::unflatten(probe, theta);
      return reg::true_apls_for_partition(probe, split.fit, active_parts,
                                          cfg.tree);
    };
  }

  // validation-side region partition for convergence tracking
  std::vector<std::vector<int>> val_parts = regions::partition(split.val.X, spec);

  TrainResult out;
  Rng batch_rng(derive_seed(cfg.model.seed, "batches"));
  std::vector<int> order = iota_indices(n);
  const int batch = std::min(cfg.model.batch_size, n);
  int streak = 0;
  double prev_acc = 0.0, prev_apl = 0.0;
  double last_penalty = 0.0;
  double last_surrogate_apl = std::numeric_limits<double>::quiet_NaN();

  for (int epoch = 0; epoch < cfg.model.epochs; ++epoch) {
    double true_apl = std::numeric_limits<double>::quiet_NaN();
    if (penalty_active && epoch % cfg.surrogate.retrain_period == 0) {
      std::vector<double> apls = oracle(model.params);
      true_apl = mean_of(apls);
      buffer.push(model.params, apls);

      // deterministic stride holdout over the real records
      reg::ParamBuffer fit_buf(buffer.capacity());
      reg::ParamBuffer holdout_buf(buffer.capacity());
      int stride = cfg.surrogate.holdout_fraction > 0.0
                       ? std::max(2, static_cast<int>(std::lround(
                                         1.0 / cfg.surrogate.holdout_fraction)))
                       : 0;
      {
        int i = 0;
        for (const auto& rec : buffer.records()) {
          if (stride > 0 && i % stride == stride - 1 && buffer.size() >= stride)
            holdout_buf.push(rec.theta, rec.apls);
          else
            fit_buf.push(rec.theta, rec.apls);
          ++i;
        }
      }
      reg::ParamBuffer augmented = reg::augment_buffer(
          fit_buf, cfg.surrogate.n_augment,
          derive_seed(cfg.surrogate.seed, "augment",
                      static_cast<std::uint64_t>(epoch)),
          oracle);
      reg::SurrogateFitStats stats = reg::train_surrogates(
          augmented, surrogates, holdout_buf.empty() ? nullptr : &holdout_buf);
      for (int r = 0; r < surrogates.count(); ++r)
        out.surrogate_diag.push_back(
            {epoch, r, augmented.size(),
             stats.train_mse[static_cast<std::size_t>(r)],
             stats.holdout_mse[static_cast<std::size_t>(r)]});
    }

    batch_rng.shuffle(order);
    for (int from = 0; from < n; from += batch) {
      int count = std::min(batch, n - from);
      std::span<const int> idx(order.data() + from,
                               static_cast<std::size_t>(count));
      Matrix Xb = split.fit.X.take_rows(idx);
      Matrix Yb = split.fit.Y.take_rows(idx);

      nn::ParamVector extra;
      const nn::ParamVector* extra_ptr = nullptr;
      if (cfg.lambda > 0.0 &&
          (cfg.kind == reg::Kind::L2 || penalty_active)) {
        reg::PenaltyGradResult pg = reg::penalty_grad(
            cfg.kind, surrogates, model.params, cfg.temperature);
        last_penalty = pg.value;
        extra = std::move(pg.grad);
        for (double& g : extra) g *= cfg.lambda;
        extra_ptr = &extra;
      }
      nn::ParamVector grad = nn::backward(model, Xb, Yb, extra_ptr);
      nn::adam_step(model, grad, opt);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = nn::batch_loss(model, split.fit.X, split.fit.Y);
    if (!std::isfinite(rec.train_loss))
      fail(ErrorCode::Numeric,
           "train_target: non-finite loss at epoch " + std::to_string(epoch) +
               " (kind " + reg::kind_to_string(cfg.kind) + ", lambda " +
               std::to_string(cfg.lambda) + ")");
    rec.penalty = last_penalty;
    Matrix val_pred;
    nn::forward_batch(model, split.val.X, val_pred);
    rec.val_accuracy = predictions_accuracy(val_pred, split.val.Y);
    rec.val_apl = regional_apl_sum(model_predictor(model), q, split.val.X,
                                   val_parts, cfg.tree, false);
    rec.true_apl = true_apl;
    if (penalty_active && surrogates.all_trained()) {
      last_surrogate_apl = mean_of(surrogates.estimates(model.params));
    }
    rec.surrogate_apl = last_surrogate_apl;
    rec.seconds = seconds_since(t0);
    out.history.push_back(rec);
    out.epochs_run = epoch + 1;

    // converged when both validation metrics sit still for a full window
    if (epoch > 0 && std::abs(rec.val_accuracy - prev_acc) < cfg.model.convergence_tol &&
        std::abs(rec.val_apl - prev_apl) < cfg.model.convergence_tol) {
      ++streak;
    } else {
      streak = 0;
    }
    prev_acc = rec.val_accuracy;
    prev_apl = rec.val_apl;
    if (!out.converged && streak >= cfg.model.convergence_window) {
      out.converged = true;
      out.epochs_to_converge = epoch + 1;
      if (cfg.model.early_stop) break;
    }
  }
  if (!out.converged) out.epochs_to_converge = out.epochs_run;
  out.model = std::move(model);
  out.train_seconds = seconds_since(t0);
  return out;
}

namespace {

struct BinaryCounts {
  int tp = 0, fp = 0, fn = 0, tn = 0;
};

double f1_score(const BinaryCounts& c) {
  double precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
  double recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall)
                                  : 0.0;
}

// Mann-Whitney AUC with average ranks for ties; 0.5 when one class is absent.
double auc_score(std::span<const double> scores, std::span<const double> labels) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> order = iota_indices(n);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] < scores[static_cast<std::size_t>(b)];
  });
  std::vector<double> rank(static_cast<std::size_t>(n));
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && scores[static_cast<std::size_t>(order[j + 1])] ==
                            scores[static_cast<std::size_t>(order[i])])
      ++j;
    double avg = (i + j) / 2.0 + 1.0;
    for (int k = i; k <= j; ++k) rank[static_cast<std::size_t>(order[k])] = avg;
    i = j + 1;
  }
  double pos_rank_sum = 0.0;
  int n_pos = 0;
  for (int k = 0; k < n; ++k) {
    if (labels[static_cast<std::size_t>(k)] > 0.5) {
      pos_rank_sum += rank[static_cast<std::size_t>(k)];
      ++n_pos;
    }
  }
  int n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return 0.5;
  return (pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0) /
         (static_cast<double>(n_pos) * n_neg);
}

}  // namespace

Metrics evaluate_predictor(const PredictProbaFn& predict, int outputs,
                           const data::Dataset& train,
                           const data::Dataset& test,
                           const regions::RegionSpec& spec,
                           const TrainConfig& cfg) {
  if (test.rows() == 0) fail_invalid("evaluate: empty test set");
  Metrics m;
  Matrix pred(test.rows(), outputs);
  for (int i = 0; i < test.rows(); ++i) {
    std::vector<double> row = predict(test.X.row_span(i));
    if (static_cast<int>(row.size()) != outputs)
      fail_shape("evaluate: predictor output width mismatch");
    std::copy(row.begin(), row.end(), pred.row(i));
  }

  m.accuracy = predictions_accuracy(pred, test.Y);
  std::vector<double> scores(static_cast<std::size_t>(test.rows()));
  std::vector<double> labels(static_cast<std::size_t>(test.rows()));
  for (int o = 0; o < outputs; ++o) {
    BinaryCounts c;
    for (int i = 0; i < test.rows(); ++i) {
      bool ph = pred.at(i, o) > 0.5;
      bool y = test.Y.at(i, o) > 0.5;
      c.tp += ph && y;
      c.fp += ph && !y;
      c.fn += !ph && y;
      c.tn += !ph && !y;
      scores[static_cast<std::size_t>(i)] = pred.at(i, o);
      labels[static_cast<std::size_t>(i)] = test.Y.at(i, o);
    }
    m.per_output_f1.push_back(f1_score(c));
    m.per_output_auc.push_back(auc_score(scores, labels));
  }
  m.f1 = mean_of(m.per_output_f1);
  m.auc = mean_of(m.per_output_auc);

  std::vector<std::vector<int>> parts = regions::partition(test.X, spec);
  m.region_apls.assign(parts.size(), 0.0);
  for (std::size_t r = 0; r < parts.size(); ++r) {
    if (parts[r].size() < 2) {
      log_warning("evaluate: test region " + std::to_string(r) +
                  " has fewer than 2 rows; APL 0");
      continue;
    }
    Matrix Xr = test.X.take_rows(parts[r]);
    double sum = 0.0;
    for (int o = 0; o < outputs; ++o) {
      auto label_fn = [&](std::span<const double> x) {
        return predict(x)[static_cast<std::size_t>(o)] > 0.5 ? 1 : 0;
      };
      sum += tree::apl(Xr, label_fn, cfg.tree);
    }
    m.region_apls[r] = sum / outputs;
  }
  m.eval_apl = std::accumulate(m.region_apls.begin(), m.region_apls.end(), 0.0);

  RegionTrees trees = distill_predictor(predict, outputs, train, spec, cfg);
  m.fidelity = fidelity_predictor(predict, outputs, trees, test.X, spec);
  return m;
}

Metrics evaluate(const nn::MlpModel& model, const data::Dataset& train,
                 const data::Dataset& test, const regions::RegionSpec& spec,
                 const TrainConfig& cfg) {
  return evaluate_predictor(model_predictor(model), model.output_size(), train,
                            test, spec, cfg);
}

RegionTrees distill_predictor(const PredictProbaFn& predict, int outputs,
                              const data::Dataset& train,
                              const regions::RegionSpec& spec,
                              const TrainConfig& cfg) {
  if (train.rows() == 0) fail_invalid("distill: empty training set");
  std::vector<std::vector<int>> parts = regions::partition(train.X, spec);
  RegionTrees trees(parts.size());
  for (std::size_t r = 0; r < parts.size(); ++r) {
    if (parts[r].size() < 2) {
      log_warning("distill: region " + std::to_string(r) +
                  " has fewer than 2 training rows; no tree");
      continue;
    }
    Matrix Xr = train.X.take_rows(parts[r]);
    for (int o = 0; o < outputs; ++o) {
      std::vector<int> labels(static_cast<std::size_t>(Xr.rows));
      for (int i = 0; i < Xr.rows; ++i)
        labels[static_cast<std::size_t>(i)] =
            predict(Xr.row_span(i))[static_cast<std::size_t>(o)] > 0.5 ? 1 : 0;
      trees[r].push_back(
          tree::fit_pruned_tree(Xr, labels, cfg.tree, cfg.tree.seed));
    }
  }
  return trees;
}

RegionTrees distill(const nn::MlpModel& model, const data::Dataset& train,
                    const regions::RegionSpec& spec, const TrainConfig& cfg) {
  return distill_predictor(model_predictor(model), model.output_size(), train,
                           spec, cfg);
}

double fidelity_predictor(const PredictProbaFn& predict, int outputs,
                          const RegionTrees& trees, const Matrix& X,
                          const regions::RegionSpec& spec) {
  if (X.rows == 0) fail_invalid("fidelity: empty input set");
  double agree = 0.0;
  for (int i = 0; i < X.rows; ++i) {
    int r = regions::assign(spec, X.row_span(i));
    if (r >= static_cast<int>(trees.size()) ||
        trees[static_cast<std::size_t>(r)].empty())
      fail_contract("fidelity: region " + std::to_string(r) + " has no tree");
    std::vector<double> proba = predict(X.row_span(i));
    for (int o = 0; o < outputs; ++o) {
      int model_label = proba[static_cast<std::size_t>(o)] > 0.5 ? 1 : 0;
      int tree_label =
          trees[static_cast<std::size_t>(r)][static_cast<std::size_t>(o)]
              .predict(X.row_span(i));
      agree += model_label == tree_label;
    }
  }
  return agree / (static_cast<double>(X.rows) * outputs);
}

double fidelity(const nn::MlpModel& model, const RegionTrees& trees,
                const Matrix& X, const regions::RegionSpec& spec) {
  return fidelity_predictor(model_predictor(model), model.output_size(), trees,
                            X, spec);
}

std::string region_trees_to_json(const RegionTrees& trees, int region) {
  if (region < 0 || region >= static_cast<int>(trees.size()))
    fail_invalid("region_trees_to_json: region out of range");
  nlohmann::json j;
  j["format"] = "treereg-region-trees";
  j["region"] = region;
  nlohmann::json arr = nlohmann::json::array();
  for (const tree::DecisionTree& t : trees[static_cast<std::size_t>(region)])
    arr.push_back(nlohmann::json::parse(tree::tree_to_json(t)));
  j["trees"] = std::move(arr);
  return j.dump();
}

namespace {

struct Cell {
  std::string kind_name;
  reg::Kind kind = reg::Kind::None;
  bool baseline_regional = false;
  bool is_baseline = false;
  double lambda = 0.0;
  std::uint64_t seed = 0;
};

tree::DecisionTree majority_leaf(const data::Dataset& train, int output) {
  tree::TreeNode leaf;
  leaf.n_samples = train.rows();
  for (int i = 0; i < train.rows(); ++i)
    leaf.n_pos += train.Y.at(i, output) > 0.5;
  leaf.label = 2 * leaf.n_pos > leaf.n_samples ? 1 : 0;
  tree::DecisionTree t;
  t.nodes.push_back(leaf);
  return t;
}

// tree baselines fit directly on the training labels
RegionTrees baseline_trees(const data::Dataset& train,
                           const regions::RegionSpec& spec,
                           const TrainConfig& cfg, bool regional,
                           std::uint64_t seed) {
  tree::TreeConfig tc = cfg.tree;
  tc.seed = seed;
  const int q = train.outputs();
  RegionTrees trees;
  auto fit_on = [&](const Matrix& X, const Matrix& Y) {
    std::vector<tree::DecisionTree> per_output;
    for (int o = 0; o < q; ++o) {
      std::vector<int> y(static_cast<std::size_t>(X.rows));
      for (int i = 0; i < X.rows; ++i)
        y[static_cast<std::size_t>(i)] = Y.at(i, o) > 0.5 ? 1 : 0;
      per_output.push_back(tree::fit_pruned_tree(X, y, tc, seed));
    }
    return per_output;
  };
  if (!regional) {
    trees.push_back(fit_on(train.X, train.Y));
    return trees;
  }
  std::vector<std::vector<int>> parts = regions::partition(train.X, spec);
  trees.resize(parts.size());
  for (std::size_t r = 0; r < parts.size(); ++r) {
    if (parts[r].size() < 2) {
      // degenerate region: fall back to the global majority
      for (int o = 0; o < q; ++o)
        trees[r].push_back(majority_leaf(train, o));
      continue;
    }
    trees[r] = fit_on(train.X.take_rows(parts[r]),
                      train.Y.take_rows(parts[r]));
  }
  return trees;
}

SweepRow run_cell(const Cell& cell, const TrainConfig& base,
                  const data::Dataset& train, const data::Dataset* val,
                  const data::Dataset& test, const regions::RegionSpec& spec) {
  SweepRow row;
  row.kind = cell.kind_name;
  row.lambda = cell.lambda;
  row.seed = cell.seed;
  const auto t0 = Clock::now();
  try {
    TrainConfig cfg = base;
    cfg.model.seed = cell.seed;
    cfg.tree.seed = cell.seed;
    cfg.surrogate.seed = cell.seed;
    Metrics m;
    if (cell.is_baseline) {
      RegionTrees trees =
          baseline_trees(train, spec, cfg, cell.baseline_regional, cell.seed);
      const int q = train.outputs();
      auto predict = [&](std::span<const double> x) {
        int r = cell.baseline_regional ? regions::assign(spec, x) : 0;
        std::vector<double> out(static_cast<std::size_t>(q));
        for (int o = 0; o < q; ++o)
          out[static_cast<std::size_t>(o)] =
              trees[static_cast<std::size_t>(r)][static_cast<std::size_t>(o)]
                  .predict_proba(x);
        return out;
      };
      m = evaluate_predictor(predict, q, train, test, spec, cfg);
      row.epochs_to_converge = 0;
    } else {
      cfg.kind = cell.kind;
      cfg.lambda = cell.lambda;
      TrainResult res = train_target(cfg, train, val, spec);
      m = evaluate(res.model, train, test, spec, cfg);
      row.epochs_to_converge = res.epochs_to_converge;
    }
    row.accuracy = m.accuracy;
    row.f1 = m.f1;
    row.auc = m.auc;
    row.eval_apl = m.eval_apl;
    row.fidelity = m.fidelity;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  row.train_seconds = seconds_since(t0);
  return row;
}

}  // namespace

std::vector<SweepRow> sweep(const SweepConfig& grid, const TrainConfig& base,
                            const data::Dataset& train,
                            const data::Dataset* val,
                            const data::Dataset& test,
                            const regions::RegionSpec& spec) {
  if (grid.kinds.empty() || grid.lambdas.empty() || grid.seeds.empty())
    fail_invalid("sweep: kinds, lambdas and seeds must be nonempty");
  for (double l : grid.lambdas)
    if (l < 0.0) fail_invalid("sweep: lambda must be >= 0");

  std::vector<Cell> cells;
  for (reg::Kind kind : grid.kinds)
    for (double lambda : grid.lambdas)
      for (std::uint64_t seed : grid.seeds)
        cells.push_back({reg::kind_to_string(kind), kind, false, false, lambda,
                         seed});
  if (grid.include_baselines) {
    for (std::uint64_t seed : grid.seeds)
      cells.push_back({"decision_tree", reg::Kind::None, false, true, 0.0, seed});
    for (std::uint64_t seed : grid.seeds)
      cells.push_back(
          {"regional_decision_tree", reg::Kind::None, true, true, 0.0, seed});
  }

  std::vector<SweepRow> rows(cells.size());
  int n_threads = grid.threads > 0
                      ? grid.threads
                      : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<int>(n_threads, static_cast<int>(cells.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) break;
      rows[i] = run_cell(cells[i], base, train, val, test, spec);
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "kind,lambda,seed,accuracy,f1,auc,eval_apl,fidelity,train_seconds,"
         "epochs_to_converge,error\n";
  for (const SweepRow& r : rows) {
    out << r.kind << "," << r.lambda << "," << r.seed << ",";
    if (r.error.empty()) {
      out << r.accuracy << "," << r.f1 << "," << r.auc << "," << r.eval_apl
          << "," << r.fidelity << "," << r.train_seconds << ","
          << r.epochs_to_converge << ",";
    } else {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << ",,,,," << r.train_seconds << ",," << msg;
    }
    out << "\n";
  }
  return out.str();
}

std::string history_csv(const std::vector<EpochRecord>& rows) {
  std::ostringstream out;
  out << "epoch,train_loss,penalty,val_accuracy,val_apl,true_apl,"
         "surrogate_apl,seconds\n";
  for (const EpochRecord& r : rows) {
    out << r.epoch << "," << r.train_loss << "," << r.penalty << ","
        << r.val_accuracy << "," << r.val_apl << ",";
    if (std::isfinite(r.true_apl)) out << r.true_apl;
    out << ",";
    if (std::isfinite(r.surrogate_apl)) out << r.surrogate_apl;
    out << "," << r.seconds << "\n";
  }
  return out.str();
}

}  // namespace treereg::exp
