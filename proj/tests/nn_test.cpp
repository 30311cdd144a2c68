#include "treereg/nn.hpp"

#include <cmath>

#include "doctest.h"
#include "test_util.hpp"

using namespace treereg;
using namespace treereg::nn;
using treereg::test::close_rel;
using treereg::test::finite_diff;

namespace {

// independent straight-line recomputation used as the forward oracle
std::vector<double> forward_oracle(const MlpModel& m, std::vector<double> a) {
  for (int l = 0; l < m.layer_count(); ++l) {
    const int in = m.layer_sizes[l], out = m.layer_sizes[l + 1];
    std::vector<double> z(out);
    for (int o = 0; o < out; ++o) {
      double s = m.biases(l)[o];
      for (int i = 0; i < in; ++i) s += m.weights(l)[o * in + i] * a[i];
      z[o] = s;
    }
    if (l + 1 < m.layer_count()) {
      for (double& v : z) v = std::max(v, 0.0);
    } else if (m.head == Head::Sigmoid) {
      for (double& v : z) v = 1.0 / (1.0 + std::exp(-v));
    }
    a = std::move(z);
  }
  return a;
}

}  // namespace

TEST_CASE("parameter counts follow the layer shapes") {
  CHECK(mlp_param_count({2, 1}) == 3);
  CHECK(mlp_param_count({3, 5, 2}) == (3 + 1) * 5 + (5 + 1) * 2);
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    int p = 1 + static_cast<int>(rng.below(6));
    int h = 1 + static_cast<int>(rng.below(8));
    int q = 1 + static_cast<int>(rng.below(3));
    CHECK(mlp_param_count({p, h, q}) ==
          static_cast<std::size_t>((p + 1) * h + (h + 1) * q));
  }
}

TEST_CASE("init_mlp validates the architecture") {
  CHECK_THROWS_AS(init_mlp({}, 0), TrgError);
  CHECK_THROWS_AS(init_mlp({3}, 0), TrgError);
  CHECK_THROWS_AS(init_mlp({3, 0, 1}, 0), TrgError);
}

TEST_CASE("init_mlp is deterministic and zero-biased") {
  MlpModel a = init_mlp({4, 8, 2}, 42);
  MlpModel b = init_mlp({4, 8, 2}, 42);
  CHECK(a.params == b.params);  // bit-identical
  MlpModel c = init_mlp({4, 8, 2}, 43);
  CHECK(a.params != c.params);
  for (int o = 0; o < 8; ++o) CHECK(a.biases(0)[o] == 0.0);
}

TEST_CASE("flatten then unflatten is the identity") {
  MlpModel m = init_mlp({3, 7, 2}, 5);
  ParamVector theta = flatten(m);
  MlpModel other = init_mlp({3, 7, 2}, 99);
  unflatten(other, theta);
  CHECK(other.params == m.params);
  ParamVector bad(theta.size() + 1, 0.0);
  CHECK_THROWS_AS(unflatten(other, bad), TrgError);
}

TEST_CASE("forward: zero model with sigmoid head outputs 0.5") {
  MlpModel m = init_mlp({3, 4, 2}, 0);
  std::fill(m.params.begin(), m.params.end(), 0.0);
  std::vector<double> out = forward(m, std::vector<double>{1.0, -2.0, 0.5});
  for (double v : out) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("forward: identity single layer with identity weights") {
  MlpModel m = init_mlp({2, 2}, 0, Head::Identity);
  std::fill(m.params.begin(), m.params.end(), 0.0);
  m.params[0] = 1.0;  // W[0][0]
  m.params[3] = 1.0;  // W[1][1]
  std::vector<double> out = forward(m, std::vector<double>{1.0, 2.0});
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(out[1] == doctest::Approx(2.0));
}

TEST_CASE("forward matches a layer-by-layer recomputation") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    MlpModel m = init_mlp({3, 6, 4, 2}, 100 + trial,
                          trial % 2 ? Head::Sigmoid : Head::Identity);
    std::vector<double> x{rng.uniform(-2, 2), rng.uniform(-2, 2),
                          rng.uniform(-2, 2)};
    std::vector<double> got = forward(m, x);
    std::vector<double> want = forward_oracle(m, x);
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("forward rejects dimension mismatch") {
  MlpModel m = init_mlp({3, 2}, 0);
  CHECK_THROWS_AS(forward(m, std::vector<double>{1.0, 2.0}), TrgError);
}

TEST_CASE("loss_bce closed forms") {
  CHECK(loss_bce(std::vector<double>{0.5}, std::vector<double>{1.0}) ==
        doctest::Approx(std::log(2.0)));
  CHECK(loss_bce(std::vector<double>{1.0 - 1e-9}, std::vector<double>{1.0}) ==
        doctest::Approx(0.0).epsilon(1e-5));
  CHECK_THROWS_AS(
      loss_bce(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0}),
      TrgError);
}

TEST_CASE("loss_bce matches the direct formula") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    int q = 1 + static_cast<int>(rng.below(4));
    std::vector<double> p(q), y(q);
    for (int i = 0; i < q; ++i) {
      p[i] = rng.uniform(0.01, 0.99);
      y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
    }
    double want = 0.0;
    for (int i = 0; i < q; ++i)
      want += -(y[i] * std::log(p[i]) + (1 - y[i]) * std::log(1 - p[i]));
    want /= q;
    CHECK(loss_bce(p, y) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("backward: finite-difference oracle, both heads") {
  Rng rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    Head head = trial % 2 ? Head::Identity : Head::Sigmoid;
    MlpModel m = init_mlp({3, 5, 2}, 500 + trial, head);  // 37 params
    Matrix X = treereg::test::random_matrix(4, 3, rng);
    Matrix Y = head == Head::Sigmoid
                   ? treereg::test::random_binary_matrix(4, 2, rng)
                   : treereg::test::random_matrix(4, 2, rng);
    ParamVector grad = backward(m, X, Y);
    auto loss_at = [&](const std::vector<double>& theta) {
      MlpModel probe = m;
      unflatten(probe, theta);
      return batch_loss(probe, X, Y);
    };
    std::vector<double> fd = finite_diff(loss_at, m.params);
    for (std::size_t i = 0; i < grad.size(); ++i)
      CHECK_MESSAGE(close_rel(grad[i], fd[i], 1e-4),
                    "coord " << i << ": " << grad[i] << " vs " << fd[i]);
  }
}

TEST_CASE("backward adds the extra gradient elementwise") {
  Rng rng(23);
  MlpModel m = init_mlp({2, 3, 1}, 9);
  Matrix X = treereg::test::random_matrix(5, 2, rng);
  Matrix Y = treereg::test::random_binary_matrix(5, 1, rng);
  ParamVector g = backward(m, X, Y);
  ParamVector v(m.param_count());
  for (double& x : v) x = rng.uniform(-1, 1);
  ParamVector combined = backward(m, X, Y, &v);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(combined[i] == doctest::Approx(g[i] + v[i]).epsilon(1e-12));
  ParamVector bad(m.param_count() + 1, 0.0);
  CHECK_THROWS_AS(backward(m, X, Y, &bad), TrgError);
}

TEST_CASE("grad_wrt_input: linear layer returns its weights") {
  MlpModel m = init_mlp({3, 1}, 0, Head::Identity);
  m.params = {0.5, -1.25, 2.0, 0.75};  // w0 w1 w2 b
  std::vector<double> g = grad_wrt_input(m, std::vector<double>{1.0, 1.0, 1.0});
  CHECK(g[0] == doctest::Approx(0.5));
  CHECK(g[1] == doctest::Approx(-1.25));
  CHECK(g[2] == doctest::Approx(2.0));
}

TEST_CASE("grad_wrt_input: zero model gives a zero vector") {
  MlpModel m = init_mlp({4, 3, 1}, 0, Head::Identity);
  std::fill(m.params.begin(), m.params.end(), 0.0);
  for (double v : grad_wrt_input(m, std::vector<double>{1, 2, 3, 4}))
    CHECK(v == 0.0);
}

TEST_CASE("grad_wrt_input matches finite differences") {
  Rng rng(29);
  for (int trial = 0; trial < 8; ++trial) {
    MlpModel m = init_mlp({4, 6, 1}, 700 + trial, Head::Identity);
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform(-2, 2);
    std::vector<double> g = grad_wrt_input(m, x);
    auto out_at = [&](const std::vector<double>& xs) {
      return forward(m, xs)[0];
    };
    std::vector<double> fd = finite_diff(out_at, x);
    for (std::size_t i = 0; i < g.size(); ++i)
      CHECK_MESSAGE(close_rel(g[i], fd[i], 1e-4),
                    "coord " << i << ": " << g[i] << " vs " << fd[i]);
  }
}

TEST_CASE("grad_wrt_input requires a scalar identity head") {
  MlpModel sig = init_mlp({2, 1}, 0, Head::Sigmoid);
  CHECK_THROWS_AS(grad_wrt_input(sig, std::vector<double>{1, 2}), TrgError);
  MlpModel wide = init_mlp({2, 2}, 0, Head::Identity);
  CHECK_THROWS_AS(grad_wrt_input(wide, std::vector<double>{1, 2}), TrgError);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  MlpModel m = init_mlp({2, 3, 1}, 4);
  ParamVector before = m.params;
  AdamState opt;
  ParamVector zero(m.param_count(), 0.0);
  adam_step(m, zero, opt);
  CHECK(m.params == before);
  CHECK(opt.step == 1);
}

TEST_CASE("adam: identical states give identical results") {
  MlpModel a = init_mlp({2, 3, 1}, 4);
  MlpModel b = a;
  AdamState sa, sb;
  ParamVector g(a.param_count());
  Rng rng(31);
  for (double& v : g) v = rng.uniform(-1, 1);
  adam_step(a, g, sa);
  adam_step(b, g, sb);
  CHECK(a.params == b.params);
}

TEST_CASE("adam descends a quadratic bowl") {
  // scalar identity model y = w*x + b fit to y = 0 at x = 1: loss (w + b)^2
  MlpModel m = init_mlp({1, 1}, 8, Head::Identity);
  m.params = {2.0, 1.5};
  Matrix X(1, 1);
  X.at(0, 0) = 1.0;
  Matrix Y(1, 1);
  AdamState opt;
  opt.learning_rate = 0.05;
  double prev = batch_loss(m, X, Y);
  double last = prev;
  for (int i = 0; i < 100; ++i) {
    ParamVector g = backward(m, X, Y);
    adam_step(m, g, opt);
    last = batch_loss(m, X, Y);
  }
  CHECK(last < prev);
  CHECK(last < 0.05);
}

TEST_CASE("checkpoint json round-trips predictions") {
  MlpModel m = init_mlp({3, 5, 2}, 77);
  MlpModel back = model_from_json(model_to_json(m));
  CHECK(back.layer_sizes == m.layer_sizes);
  CHECK(back.params == m.params);
  CHECK(back.head == m.head);
  CHECK_THROWS_AS(model_from_json("{"), TrgError);
  CHECK_THROWS_AS(model_from_json("{\"layer_sizes\":[2,1]}"), TrgError);
}
