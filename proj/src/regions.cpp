#include "treereg/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace treereg::regions {

namespace {

double sq_dist(std::span<const double> a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double d = a[static_cast<std::size_t>(i)] - b[i];
    s += d * d;
  }
  return s;
}

void check_spec(const RegionSpec& spec) {
  if (spec.region_count() < 1) fail_invalid("region spec has no regions");
}

}  // namespace

bool Box::contains(std::span<const double> x) const {
  if (x.size() != lo.size()) fail_shape("box containment: dimension mismatch");
  for (std::size_t d = 0; d < lo.size(); ++d)
    if (!(x[d] >= lo[d] && x[d] < hi[d])) return false;
  return true;
}

int assign(const RegionSpec& spec, std::span<const double> x) {
  check_spec(spec);
  if (static_cast<int>(x.size()) != spec.input_dim())
    fail_shape("assign: input dimension does not match region spec");
  if (spec.kind == RegionSpec::Kind::Rectangles) {
    for (std::size_t r = 0; r < spec.boxes.size(); ++r)
      if (spec.boxes[r].contains(x)) return static_cast<int>(r);
    fail(ErrorCode::UncoveredInput, "assign: input not covered by any box");
  }
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int r = 0; r < spec.centroids.rows; ++r) {
    double d = sq_dist(x, spec.centroids.row(r), spec.centroids.cols);
    if (d < best_d) {  // strict: ties keep the lowest index
      best_d = d;
      best = r;
    }
  }
  return best;
}

RegionSpec kmeans_regions(const Matrix& X, int k, std::uint64_t seed) {
  if (k < 1) fail_invalid("kmeans_regions: k must be >= 1");
  if (X.rows < k) fail_invalid("kmeans_regions: k exceeds the number of points");
  const int n = X.rows, p = X.cols;
  Rng rng(derive_seed(seed, "kmeans"));

  Matrix centroids(k, p);
  // k-means++ seeding
  {
    int first = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    std::copy(X.row(first), X.row(first) + p, centroids.row(0));
    std::vector<double> d2(static_cast<std::size_t>(n));
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < c; ++j)
          best = std::min(best, sq_dist(X.row_span(i), centroids.row(j), p));
        d2[static_cast<std::size_t>(i)] = best;
        total += best;
      }
      if (total <= 0.0)
        fail_invalid("kmeans_regions: fewer distinct points than clusters");
      double target = rng.uniform() * total;
      int pick = n - 1;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
      std::copy(X.row(pick), X.row(pick) + p, centroids.row(c));
    }
  }

  std::vector<int> owner(static_cast<std::size_t>(n), 0);
  Matrix sums(k, p);
  std::vector<int> counts(static_cast<std::size_t>(k));
  for (int iter = 0; iter < 300; ++iter) {
    std::fill(sums.data.begin(), sums.data.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d = sq_dist(X.row_span(i), centroids.row(c), p);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      owner[static_cast<std::size_t>(i)] = best;
      counts[static_cast<std::size_t>(best)] += 1;
      for (int d = 0; d < p; ++d) sums.at(best, d) += X.at(i, d);
    }
    double moved = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) continue;  // keep old centroid
      for (int d = 0; d < p; ++d) {
        double nv = sums.at(c, d) / counts[static_cast<std::size_t>(c)];
        moved = std::max(moved, std::abs(nv - centroids.at(c, d)));
        centroids.at(c, d) = nv;
      }
    }
    if (moved < 1e-6) break;
  }

  RegionSpec spec;
  spec.kind = RegionSpec::Kind::KMeans;
  spec.centroids = std::move(centroids);
  return spec;
}

std::vector<std::vector<int>> partition(const Matrix& X, const RegionSpec& spec) {
  if (X.rows == 0) fail_invalid("partition: empty dataset");
  check_spec(spec);
  std::vector<std::vector<int>> lists(static_cast<std::size_t>(spec.region_count()));
  for (int i = 0; i < X.rows; ++i)
    lists[static_cast<std::size_t>(assign(spec, X.row_span(i)))].push_back(i);
  for (std::size_t r = 0; r < lists.size(); ++r)
    if (lists[r].empty())
      log_warning("partition: region " + std::to_string(r) + " is empty");
  return lists;
}

namespace {

// JSON has no infinity; unbounded box edges serialize as null
nlohmann::json bound_to_json(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

double bound_from_json(const nlohmann::json& j, double unbounded) {
  return j.is_null() ? unbounded : j.get<double>();
}

}  // namespace

std::string regions_to_json(const RegionSpec& spec) {
  nlohmann::json j;
  if (spec.kind == RegionSpec::Kind::Rectangles) {
    j["kind"] = "rectangles";
    nlohmann::json boxes = nlohmann::json::array();
    for (const Box& b : spec.boxes) {
      nlohmann::json lo = nlohmann::json::array(), hi = nlohmann::json::array();
      for (double v : b.lo) lo.push_back(bound_to_json(v));
      for (double v : b.hi) hi.push_back(bound_to_json(v));
      boxes.push_back({{"lo", lo}, {"hi", hi}});
    }
    j["boxes"] = std::move(boxes);
  } else {
    j["kind"] = "kmeans";
    nlohmann::json cents = nlohmann::json::array();
    for (int r = 0; r < spec.centroids.rows; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < spec.centroids.cols; ++c)
        row.push_back(spec.centroids.at(r, c));
      cents.push_back(std::move(row));
    }
    j["centroids"] = std::move(cents);
  }
  return j.dump();
}

RegionSpec regions_from_json(const std::string& text) {
  RegionSpec spec;
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    std::string kind = j.at("kind").get<std::string>();
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (kind == "rectangles") {
      spec.kind = RegionSpec::Kind::Rectangles;
      for (const auto& bj : j.at("boxes")) {
        Box b;
        for (const auto& v : bj.at("lo")) b.lo.push_back(bound_from_json(v, -inf));
        for (const auto& v : bj.at("hi")) b.hi.push_back(bound_from_json(v, inf));
        if (b.lo.size() != b.hi.size())
          fail_io("regions_from_json: box lo/hi dimension mismatch");
        spec.boxes.push_back(std::move(b));
      }
    } else if (kind == "kmeans") {
      spec.kind = RegionSpec::Kind::KMeans;
      const auto& cents = j.at("centroids");
      int k = static_cast<int>(cents.size());
      if (k == 0) fail_io("regions_from_json: no centroids");
      int p = static_cast<int>(cents[0].size());
      spec.centroids = Matrix(k, p);
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < p; ++c)
          spec.centroids.at(r, c) = cents[r][c].get<double>();
    } else {
      fail_io("regions_from_json: unknown kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail_io(std::string("regions_from_json: ") + e.what());
  }
  check_spec(spec);
  return spec;
}

}  // namespace treereg::regions
