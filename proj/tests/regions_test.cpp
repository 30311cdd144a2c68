#include "treereg/regions.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "doctest.h"
#include "test_util.hpp"

using namespace treereg;
using namespace treereg::regions;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RegionSpec two_centroids() {
  RegionSpec spec;
  spec.kind = RegionSpec::Kind::KMeans;
  spec.centroids = Matrix(2, 2);
  spec.centroids.at(1, 0) = 10.0;
  spec.centroids.at(1, 1) = 10.0;
  return spec;
}

}  // namespace

TEST_CASE("assign: nearest centroid, ties to the lowest index") {
  RegionSpec spec = two_centroids();
  CHECK(assign(spec, std::vector<double>{1.0, 1.0}) == 0);
  CHECK(assign(spec, std::vector<double>{9.0, 9.0}) == 1);
  CHECK(assign(spec, std::vector<double>{5.0, 5.0}) == 0);  // equidistant
}

TEST_CASE("assign: ordered boxes, first match, uncovered error") {
  RegionSpec spec;
  spec.kind = RegionSpec::Kind::Rectangles;
  Box a;
  a.lo = {0.0, 0.0};
  a.hi = {1.0, 1.0};
  Box b;
  b.lo = {1.0, 0.0};
  b.hi = {2.0, 1.0};
  spec.boxes = {a, b};
  CHECK(assign(spec, std::vector<double>{0.5, 0.5}) == 0);
  CHECK(assign(spec, std::vector<double>{1.0, 0.5}) == 1);  // boundary: lo side
  CHECK_THROWS_AS(assign(spec, std::vector<double>{5.0, 0.5}), TrgError);
  try {
    assign(spec, std::vector<double>{5.0, 0.5});
  } catch (const TrgError& e) {
    CHECK(e.code() == ErrorCode::UncoveredInput);
  }
}

TEST_CASE("assign: five-band spec places points in their bands") {
  RegionSpec spec;
  spec.kind = RegionSpec::Kind::Rectangles;
  for (int b = 0; b < 5; ++b) {
    Box box;
    box.lo = {b == 0 ? -kInf : 0.2 * b, -kInf};
    box.hi = {b == 4 ? kInf : 0.2 * (b + 1), kInf};
    spec.boxes.push_back(box);
  }
  // point-in-box oracle
  auto expected_band = [](double x0) {
    if (x0 < 0.2) return 0;
    if (x0 < 0.4) return 1;
    if (x0 < 0.6) return 2;
    if (x0 < 0.8) return 3;
    return 4;
  };
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    double x0 = rng.uniform(-0.5, 1.5);
    CHECK(assign(spec, std::vector<double>{x0, rng.uniform()}) ==
          expected_band(x0));
  }
  CHECK(assign(spec, std::vector<double>{0.65, 0.2}) == 3);
}

TEST_CASE("kmeans: two separated clouds recover the cloud means") {
  Rng rng(42);
  Matrix X(60, 2);
  double mean0[2] = {0, 0}, mean1[2] = {0, 0};
  for (int i = 0; i < 30; ++i) {
    X.at(i, 0) = rng.uniform(-0.5, 0.5);
    X.at(i, 1) = rng.uniform(-0.5, 0.5);
    mean0[0] += X.at(i, 0);
    mean0[1] += X.at(i, 1);
  }
  for (int i = 30; i < 60; ++i) {
    X.at(i, 0) = 10.0 + rng.uniform(-0.5, 0.5);
    X.at(i, 1) = 10.0 + rng.uniform(-0.5, 0.5);
    mean1[0] += X.at(i, 0);
    mean1[1] += X.at(i, 1);
  }
  for (double* m : {mean0, mean1}) {
    m[0] /= 30.0;
    m[1] /= 30.0;
  }
  RegionSpec spec = kmeans_regions(X, 2, 7);
  // identify which centroid sits on which cloud
  std::vector<std::pair<double, double>> cents;
  for (int r = 0; r < 2; ++r)
    cents.emplace_back(spec.centroids.at(r, 0), spec.centroids.at(r, 1));
  std::sort(cents.begin(), cents.end());
  CHECK(cents[0].first == doctest::Approx(mean0[0]).epsilon(1e-6));
  CHECK(cents[0].second == doctest::Approx(mean0[1]).epsilon(1e-6));
  CHECK(cents[1].first == doctest::Approx(mean1[0]).epsilon(1e-6));
  CHECK(cents[1].second == doctest::Approx(mean1[1]).epsilon(1e-6));
}

TEST_CASE("kmeans: k=1 returns the global mean") {
  Rng rng(9);
  Matrix X = treereg::test::random_matrix(25, 3, rng);
  RegionSpec spec = kmeans_regions(X, 1, 0);
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (int i = 0; i < 25; ++i) mean += X.at(i, c);
    mean /= 25.0;
    CHECK(spec.centroids.at(0, c) == doctest::Approx(mean).epsilon(1e-9));
  }
}

TEST_CASE("kmeans: deterministic given the seed") {
  Rng rng(11);
  Matrix X = treereg::test::random_matrix(50, 2, rng);
  RegionSpec a = kmeans_regions(X, 4, 3);
  RegionSpec b = kmeans_regions(X, 4, 3);
  CHECK(a.centroids.data == b.centroids.data);  // bit-identical
}

TEST_CASE("kmeans: k larger than N is rejected") {
  Matrix X(3, 2);
  CHECK_THROWS_AS(kmeans_regions(X, 4, 0), TrgError);
}

TEST_CASE("partition: single region holds every index") {
  Rng rng(21);
  Matrix X = treereg::test::random_matrix(17, 2, rng);
  RegionSpec spec;
  spec.kind = RegionSpec::Kind::KMeans;
  spec.centroids = Matrix(1, 2);
  auto parts = partition(X, spec);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0].size() == 17);
}

TEST_CASE("partition: lists are disjoint and exhaustive") {
  Rng rng(23);
  Matrix X = treereg::test::random_matrix(120, 2, rng, 0.0, 1.0);
  RegionSpec spec = kmeans_regions(X, 5, 1);
  auto parts = partition(X, spec);
  std::vector<int> seen(120, 0);
  for (const auto& part : parts)
    for (int i : part) seen[static_cast<std::size_t>(i)] += 1;
  for (int c : seen) CHECK(c == 1);
}

TEST_CASE("partition: row shuffling permutes the same multiset") {
  Rng rng(29);
  Matrix X = treereg::test::random_matrix(60, 2, rng);
  RegionSpec spec = kmeans_regions(X, 3, 2);
  auto parts = partition(X, spec);
  std::vector<int> perm = iota_indices(60);
  Rng prng(5);
  prng.shuffle(perm);
  Matrix Xs = X.take_rows(perm);
  auto parts_s = partition(Xs, spec);
  // counts per region must agree, and shuffled indices must map back
  REQUIRE(parts.size() == parts_s.size());
  for (std::size_t r = 0; r < parts.size(); ++r) {
    CHECK(parts[r].size() == parts_s[r].size());
    std::multiset<int> want(parts[r].begin(), parts[r].end());
    std::multiset<int> got;
    for (int i : parts_s[r]) got.insert(perm[static_cast<std::size_t>(i)]);
    CHECK(want == got);
  }
}

TEST_CASE("region spec json round-trip") {
  RegionSpec km = two_centroids();
  RegionSpec km2 = regions_from_json(regions_to_json(km));
  CHECK(km2.kind == RegionSpec::Kind::KMeans);
  CHECK(km2.centroids.data == km.centroids.data);

  RegionSpec rect;
  rect.kind = RegionSpec::Kind::Rectangles;
  Box b;
  b.lo = {-kInf, 0.0};
  b.hi = {0.5, kInf};
  rect.boxes = {b};
  RegionSpec rect2 = regions_from_json(regions_to_json(rect));
  CHECK(rect2.boxes.size() == 1);
  CHECK(rect2.boxes[0].lo[0] == -kInf);
  CHECK(rect2.boxes[0].hi[1] == kInf);
  CHECK(rect2.boxes[0].hi[0] == doctest::Approx(0.5));

  CHECK_THROWS_AS(regions_from_json("{\"kind\":\"mystery\"}"), TrgError);
}
