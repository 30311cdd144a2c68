#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treereg/common.hpp"

namespace treereg::regions {

/// Axis-aligned box, lo[d] <= x[d] < hi[d]. Infinite bounds are allowed so an
/// ordered box list can end with a catch-all.
struct Box {
  std::vector<double> lo, hi;
  bool contains(std::span<const double> x) const;
};

struct RegionSpec {
  enum class Kind { Rectangles, KMeans };
  Kind kind = Kind::Rectangles;
  std::vector<Box> boxes;  // rectangles: ordered, first match wins
  Matrix centroids;        // kmeans: k x P

  int region_count() const {
    return kind == Kind::Rectangles ? static_cast<int>(boxes.size())
                                    : centroids.rows;
  }
  int input_dim() const {
    return kind == Kind::Rectangles
               ? (boxes.empty() ? 0 : static_cast<int>(boxes[0].lo.size()))
               : centroids.cols;
  }
};

/// Region id for x: first containing box, or nearest centroid (ties to the
/// lowest index). Rectangles with no containing box raise an
/// uncovered-input error.
int assign(const RegionSpec& spec, std::span<const double> x);

/// Lloyd's algorithm with seeded k-means++ initialization; at most 300
/// iterations, converged when no centroid moves more than 1e-6.
RegionSpec kmeans_regions(const Matrix& X, int k, std::uint64_t seed);

/// Disjoint, exhaustive index lists per region; empty regions stay empty and
/// are reported with a warning.
std::vector<std::vector<int>> partition(const Matrix& X, const RegionSpec& spec);

std::string regions_to_json(const RegionSpec& spec);
RegionSpec regions_from_json(const std::string& text);

}  // namespace treereg::regions
