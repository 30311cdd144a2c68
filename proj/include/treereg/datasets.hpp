#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treereg/common.hpp"
#include "treereg/regions.hpp"

namespace treereg::data {

struct Dataset {
  Matrix X;  // N x P features
  Matrix Y;  // N x Q binary labels stored as 0.0/1.0
  std::vector<int> region_ids;  // optional, empty when unassigned

  int rows() const { return X.rows; }
  int features() const { return X.cols; }
  int outputs() const { return Y.cols; }
};

struct ToyData {
  Dataset train;
  Dataset test;
  regions::RegionSpec regions;
};

/// Five vertical bands over the unit square, each with its own horizontal
/// decision boundary (alternating low/high). Training labels are flipped
/// with probability label_noise; test labels are clean.
ToyData gen_five_rectangles(int n_train, int n_test, double label_noise,
                            std::uint64_t seed);

/// Two half-plane regions with boundaries of very different complexity:
/// a single threshold on the left, a three-step staircase on the right.
ToyData gen_two_region_toy(std::uint64_t seed);

/// rows x cols grid of rectangular regions, each cell with its own
/// horizontal boundary (alternating by cell parity).
ToyData gen_grid_toy(int rows, int cols, std::uint64_t seed);

struct CsvOptions {
  std::vector<std::string> label_columns;
  std::vector<std::string> categorical_columns;
  bool standardize = true;
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  double val_fraction = 0.1;
};

struct LoadedData {
  Dataset train, val, test;
  std::vector<std::string> feature_names;
};

/// Comma-separated file with a header row; declared categorical columns are
/// one-hot encoded, everything else must parse as a number. Splits 70/10/20
/// by seeded shuffle; standardization statistics come from the training
/// split only.
LoadedData load_delimited(const std::string& path, const CsvOptions& opts);

/// Writes x0..x{P-1}, y0..y{Q-1} and, when a spec is given, a region_id
/// column.
void save_csv(const Dataset& ds, const regions::RegionSpec* spec,
              const std::string& path);

/// Reads a file produced by save_csv (columns named y* are labels, region_id
/// is dropped).
Dataset load_saved_csv(const std::string& path);

}  // namespace treereg::data
