#include "treereg/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace treereg::reg {

Kind kind_from_string(const std::string& name) {
  if (name == "none") return Kind::None;
  if (name == "l2") return Kind::L2;
  if (name == "global_tree") return Kind::GlobalTree;
  if (name == "regional_l1") return Kind::RegionalL1;
  if (name == "regional_l0") return Kind::RegionalL0;
  if (name == "regional_lsp") return Kind::RegionalLsp;
  fail_invalid("unknown regularizer kind '" + name + "'");
}

std::string kind_to_string(Kind kind) {
  switch (kind) {
    case Kind::None: return "none";
    case Kind::L2: return "l2";
    case Kind::GlobalTree: return "global_tree";
    case Kind::RegionalL1: return "regional_l1";
    case Kind::RegionalL0: return "regional_l0";
    case Kind::RegionalLsp: return "regional_lsp";
  }
  fail(ErrorCode::Internal, "unreachable regularizer kind");
}

bool uses_surrogates(Kind kind) {
  return kind == Kind::GlobalTree || kind == Kind::RegionalL1 ||
         kind == Kind::RegionalL0 || kind == Kind::RegionalLsp;
}

ParamBuffer::ParamBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) fail_invalid("ParamBuffer: capacity must be >= 1");
}

void ParamBuffer::push(nn::ParamVector theta, std::vector<double> apls) {
  if (!records_.empty()) {
    if (theta.size() != records_.front().theta.size())
      fail_shape("ParamBuffer::push: parameter length mismatch");
    if (apls.size() != records_.front().apls.size())
      fail_shape("ParamBuffer::push: region count mismatch");
  }
  for (double a : apls)
    if (a < 0.0 || !std::isfinite(a))
      fail_invalid("ParamBuffer::push: path lengths must be finite and >= 0");
  records_.push_back({std::move(theta), std::move(apls)});
  while (static_cast<int>(records_.size()) > capacity_) records_.pop_front();
}

int ParamBuffer::param_dim() const {
  return records_.empty() ? 0 : static_cast<int>(records_.front().theta.size());
}

int ParamBuffer::region_count() const {
  return records_.empty() ? 0 : static_cast<int>(records_.front().apls.size());
}

std::vector<double> dirichlet_weights(int j, Rng& rng) {
  if (j < 1) fail_invalid("dirichlet_weights: need at least one component");
  std::vector<double> w(static_cast<std::size_t>(j));
  double total = 0.0;
  for (double& v : w) {
    v = rng.exponential();  // Gamma(1, 1)
    total += v;
  }
  for (double& v : w) v /= total;
  return w;
}

ParamBuffer augment_buffer(const ParamBuffer& buffer, int n_synthetic,
                           std::uint64_t seed, const AplOracle& apl_oracle) {
  if (buffer.empty()) fail_invalid("augment_buffer: buffer is empty");
  if (n_synthetic < 0) fail_invalid("augment_buffer: n_synthetic must be >= 0");

  const int j = buffer.size();
  const int d = buffer.param_dim();
  ParamBuffer out(buffer.size() + n_synthetic);
  for (const auto& rec : buffer.records()) out.push(rec.theta, rec.apls);

  Rng rng(derive_seed(seed, "dirichlet-augment"));
  for (int s = 0; s < n_synthetic; ++s) {
    std::vector<double> w = dirichlet_weights(j, rng);
    nn::ParamVector theta(static_cast<std::size_t>(d), 0.0);
    int rec_i = 0;
    for (const auto& rec : buffer.records()) {
      const double wi = w[static_cast<std::size_t>(rec_i++)];
      for (int i = 0; i < d; ++i)
        theta[static_cast<std::size_t>(i)] += wi * rec.theta[static_cast<std::size_t>(i)];
    }
    std::vector<double> apls = apl_oracle(theta);
    out.push(std::move(theta), std::move(apls));
  }
  return out;
}

std::vector<double> sparsemax(std::span<const double> z) {
  if (z.empty()) fail_invalid("sparsemax: empty vector");
  for (double v : z)
    if (!std::isfinite(v)) fail_invalid("sparsemax: entries must be finite");

  const int r = static_cast<int>(z.size());
  // subtracting the max makes the projection exactly shift-invariant
  double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> shifted(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) shifted[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] - zmax;

  std::vector<double> sorted = shifted;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumsum = 0.0, tau = 0.0;
  int k = 0;
  for (int i = 0; i < r; ++i) {
    double zi = sorted[static_cast<std::size_t>(i)];
    cumsum += zi;
    if (1.0 + (i + 1) * zi > cumsum) {
      k = i + 1;
      tau = (cumsum - 1.0) / k;
    } else {
      cumsum -= zi;  // tau uses the support prefix only
      break;
    }
  }
  std::vector<double> p(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i)
    p[static_cast<std::size_t>(i)] = std::max(shifted[static_cast<std::size_t>(i)] - tau, 0.0);
  return p;
}

PenaltyResult penalty(Kind kind, std::span<const double> apl_estimates,
                      double temperature) {
  if (apl_estimates.empty()) fail_invalid("penalty: empty estimates");
  if (temperature <= 0.0) fail_invalid("penalty: temperature must be positive");
  const int r = static_cast<int>(apl_estimates.size());
  std::vector<double> est(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i)
    est[static_cast<std::size_t>(i)] = std::max(apl_estimates[static_cast<std::size_t>(i)], 0.0);

  PenaltyResult out;
  out.weights.assign(static_cast<std::size_t>(r), 0.0);
  switch (kind) {
    case Kind::None:
      return out;
    case Kind::L2:
      fail_contract("penalty: l2 is a parameter-norm penalty, not an APL combination");
    case Kind::GlobalTree:
    case Kind::RegionalL1: {
      for (int i = 0; i < r; ++i) {
        out.value += est[static_cast<std::size_t>(i)];
        out.weights[static_cast<std::size_t>(i)] = 1.0;
      }
      return out;
    }
    case Kind::RegionalL0: {
      int arg = 0;
      for (int i = 1; i < r; ++i)
        if (est[static_cast<std::size_t>(i)] > est[static_cast<std::size_t>(arg)]) arg = i;
      out.value = est[static_cast<std::size_t>(arg)];
      out.weights[static_cast<std::size_t>(arg)] = 1.0;
      return out;
    }
    case Kind::RegionalLsp: {
      std::vector<double> scaled(static_cast<std::size_t>(r));
      for (int i = 0; i < r; ++i)
        scaled[static_cast<std::size_t>(i)] = est[static_cast<std::size_t>(i)] / temperature;
      out.weights = sparsemax(scaled);
      for (int i = 0; i < r; ++i)
        out.value += out.weights[static_cast<std::size_t>(i)] * est[static_cast<std::size_t>(i)];
      return out;
    }
  }
  fail(ErrorCode::Internal, "unreachable penalty kind");
}

void SurrogateSet::init(int n_regions, int dim, const SurrogateConfig& config) {
  if (n_regions < 1) fail_invalid("SurrogateSet: need at least one region");
  if (dim < 1) fail_invalid("SurrogateSet: input dimension must be >= 1");
  cfg = config;
  input_dim = dim;
  models.clear();
  trained.assign(static_cast<std::size_t>(n_regions), false);
  std::vector<int> sizes;
  sizes.push_back(dim);
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(1);
  for (int r = 0; r < n_regions; ++r)
    models.push_back(nn::init_mlp(
        sizes, derive_seed(cfg.seed, "surrogate-init", static_cast<std::uint64_t>(r)),
        nn::Head::Identity));
}

bool SurrogateSet::all_trained() const {
  return !trained.empty() &&
         std::all_of(trained.begin(), trained.end(), [](bool b) { return b; });
}

std::vector<double> SurrogateSet::estimates(const nn::ParamVector& theta) const {
  std::vector<double> est(models.size());
  for (std::size_t r = 0; r < models.size(); ++r)
    est[r] = std::max(nn::forward(models[r], theta)[0], 0.0);
  return est;
}

namespace {

double surrogate_mse(const nn::MlpModel& model, const ParamBuffer& buf, int region) {
  double s = 0.0;
  for (const auto& rec : buf.records()) {
    double d = nn::forward(model, rec.theta)[0] -
               rec.apls[static_cast<std::size_t>(region)];
    s += d * d;
  }
  return s / buf.size();
}

}  // namespace

SurrogateFitStats train_surrogates(const ParamBuffer& buffer, SurrogateSet& set,
                                   const ParamBuffer* holdout) {
  if (buffer.empty()) fail_invalid("train_surrogates: buffer is empty");
  if (set.count() == 0) fail_contract("train_surrogates: surrogate set not initialized");
  if (buffer.param_dim() != set.input_dim)
    fail_shape("train_surrogates: buffer theta length does not match surrogates");
  if (buffer.region_count() != set.count())
    fail_shape("train_surrogates: buffer region count does not match surrogates");

  const int n = buffer.size();
  const int d = buffer.param_dim();
  Matrix X(n, d);
  {
    int i = 0;
    for (const auto& rec : buffer.records()) {
      std::copy(rec.theta.begin(), rec.theta.end(), X.row(i));
      ++i;
    }
  }

  SurrogateFitStats stats;
  stats.train_mse.assign(static_cast<std::size_t>(set.count()), 0.0);
  stats.holdout_mse.assign(static_cast<std::size_t>(set.count()),
                           std::numeric_limits<double>::quiet_NaN());

  const int batch = set.cfg.batch_size > 0 ? std::min(set.cfg.batch_size, n) : n;
  for (int r = 0; r < set.count(); ++r) {
    Matrix Y(n, 1);
    {
      int i = 0;
      for (const auto& rec : buffer.records())
        Y.at(i++, 0) = rec.apls[static_cast<std::size_t>(r)];
    }
    nn::MlpModel& model = set.models[static_cast<std::size_t>(r)];
    nn::AdamState opt;
    opt.learning_rate = set.cfg.learning_rate;
    Rng shuffle_rng(derive_seed(set.cfg.seed, "surrogate-batches",
                                static_cast<std::uint64_t>(r)));
    std::vector<int> order = iota_indices(n);
    for (int epoch = 0; epoch < set.cfg.epochs; ++epoch) {
      shuffle_rng.shuffle(order);
      for (int from = 0; from < n; from += batch) {
        int count = std::min(batch, n - from);
        std::span<const int> idx(order.data() + from, static_cast<std::size_t>(count));
        Matrix Xb = X.take_rows(idx);
        Matrix Yb = Y.take_rows(idx);
        nn::ParamVector g = nn::backward(model, Xb, Yb);
        nn::adam_step(model, g, opt);
      }
    }
    set.trained[static_cast<std::size_t>(r)] = true;
    stats.train_mse[static_cast<std::size_t>(r)] = surrogate_mse(model, buffer, r);
    if (holdout && !holdout->empty())
      stats.holdout_mse[static_cast<std::size_t>(r)] =
          surrogate_mse(model, *holdout, r);
  }
  return stats;
}

PenaltyGradResult penalty_grad(Kind kind, const SurrogateSet& surrogates,
                               const nn::ParamVector& theta,
                               double temperature) {
  PenaltyGradResult out;
  out.grad.assign(theta.size(), 0.0);
  if (kind == Kind::None) return out;
  if (kind == Kind::L2) {
    double v = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      v += theta[i] * theta[i];
      out.grad[i] = 2.0 * theta[i];
    }
    out.value = v;
    return out;
  }
  if (!surrogates.all_trained())
    fail_contract("penalty_grad: surrogates are not trained");
  if (static_cast<int>(theta.size()) != surrogates.input_dim)
    fail_shape("penalty_grad: theta length does not match surrogates");

  const int r = surrogates.count();
  std::vector<double> raw(static_cast<std::size_t>(r));
  std::vector<double> est(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    raw[static_cast<std::size_t>(i)] =
        nn::forward(surrogates.models[static_cast<std::size_t>(i)], theta)[0];
    est[static_cast<std::size_t>(i)] = std::max(raw[static_cast<std::size_t>(i)], 0.0);
  }
  PenaltyResult p = penalty(kind, est, temperature);
  out.value = p.value;
  for (int i = 0; i < r; ++i) {
    double w = p.weights[static_cast<std::size_t>(i)];
    // the clamp at zero gates the gradient of inactive surrogates
    if (w == 0.0 || raw[static_cast<std::size_t>(i)] <= 0.0) continue;
    std::vector<double> g = nn::grad_wrt_input(
        surrogates.models[static_cast<std::size_t>(i)], theta);
    for (std::size_t j = 0; j < out.grad.size(); ++j) out.grad[j] += w * g[j];
  }
  return out;
}

std::vector<double> true_apls_for_partition(
    const nn::MlpModel& model, const data::Dataset& dataset,
    const std::vector<std::vector<int>>& parts, const tree::TreeConfig& cfg) {
  std::vector<double> out(parts.size(), 0.0);
  const int q = model.output_size();
  for (std::size_t r = 0; r < parts.size(); ++r) {
    if (parts[r].size() < 2) continue;  // too small for a fit/prune split
    Matrix Xr = dataset.X.take_rows(parts[r]);
    double sum = 0.0;
    for (int o = 0; o < q; ++o) {
      auto predict = [&](std::span<const double> x) {
        return nn::forward(model, x)[static_cast<std::size_t>(o)] > 0.5 ? 1 : 0;
      };
      sum += tree::apl(Xr, predict, cfg);
    }
    out[r] = sum / q;
  }
  return out;
}

std::vector<double> true_regional_apls(const nn::MlpModel& model,
                                       const data::Dataset& dataset,
                                       const regions::RegionSpec& spec,
                                       const tree::TreeConfig& cfg) {
  return true_apls_for_partition(model, dataset,
                                 regions::partition(dataset.X, spec), cfg);
}

std::string surrogate_diag_csv(const std::vector<SurrogateDiagRecord>& rows) {
  std::ostringstream out;
  out << "epoch,region,buffer_size,train_mse,holdout_mse\n";
  for (const auto& r : rows) {
    out << r.epoch << "," << r.region << "," << r.buffer_size << ","
        << r.train_mse << ",";
    if (std::isfinite(r.holdout_mse)) out << r.holdout_mse;
    out << "\n";
  }
  return out.str();
}

}  // namespace treereg::reg
