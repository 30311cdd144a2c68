#include "treereg/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace treereg::data {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

regions::Box band_box(double lo0, double hi0) {
  regions::Box b;
  b.lo = {lo0, -kInf};
  b.hi = {hi0, kInf};
  return b;
}

Dataset sample_square(int n, Rng& rng) {
  Dataset ds;
  ds.X = Matrix(n, 2);
  ds.Y = Matrix(n, 1);
  for (int i = 0; i < n; ++i) {
    ds.X.at(i, 0) = rng.uniform();
    ds.X.at(i, 1) = rng.uniform();
  }
  return ds;
}

void apply_noise(Dataset& ds, double rate, Rng& rng) {
  for (int i = 0; i < ds.rows(); ++i)
    if (rng.uniform() < rate) ds.Y.at(i, 0) = 1.0 - ds.Y.at(i, 0);
}

}  // namespace

ToyData gen_five_rectangles(int n_train, int n_test, double label_noise,
                            std::uint64_t seed) {
  if (n_train < 10 || n_test < 10)
    fail_invalid("gen_five_rectangles: need at least 10 train and test points");
  if (label_noise < 0.0 || label_noise >= 0.5)
    fail_invalid("gen_five_rectangles: label_noise must be in [0, 0.5)");

  auto band_threshold = [](double x0) {
    int band = std::clamp(static_cast<int>(x0 * 5.0), 0, 4);
    return band % 2 == 0 ? 0.35 : 0.65;
  };
  auto label_points = [&](Dataset& ds) {
    for (int i = 0; i < ds.rows(); ++i)
      ds.Y.at(i, 0) = ds.X.at(i, 1) > band_threshold(ds.X.at(i, 0)) ? 1.0 : 0.0;
  };

  ToyData out;
  Rng train_rng(derive_seed(seed, "five-rect-train"));
  Rng test_rng(derive_seed(seed, "five-rect-test"));
  out.train = sample_square(n_train, train_rng);
  out.test = sample_square(n_test, test_rng);
  label_points(out.train);
  label_points(out.test);
  apply_noise(out.train, label_noise, train_rng);

  out.regions.kind = regions::RegionSpec::Kind::Rectangles;
  for (int b = 0; b < 5; ++b)
    out.regions.boxes.push_back(band_box(b == 0 ? -kInf : 0.2 * b,
                                         b == 4 ? kInf : 0.2 * (b + 1)));
  for (Dataset* ds : {&out.train, &out.test}) {
    ds->region_ids.resize(static_cast<std::size_t>(ds->rows()));
    for (int i = 0; i < ds->rows(); ++i)
      ds->region_ids[static_cast<std::size_t>(i)] =
          regions::assign(out.regions, ds->X.row_span(i));
  }
  return out;
}

ToyData gen_two_region_toy(std::uint64_t seed) {
  const int n_train = 400, n_test = 2000;
  const double noise = 0.05;

  // left region: one flat boundary; right region: three-step staircase
  auto threshold = [](double x0) {
    if (x0 < 0.5) return 0.25;
    if (x0 < 2.0 / 3.0) return 0.2;
    if (x0 < 5.0 / 6.0) return 0.8;
    return 0.35;
  };
  auto label_points = [&](Dataset& ds) {
    for (int i = 0; i < ds.rows(); ++i)
      ds.Y.at(i, 0) = ds.X.at(i, 1) > threshold(ds.X.at(i, 0)) ? 1.0 : 0.0;
  };

  ToyData out;
  Rng train_rng(derive_seed(seed, "two-region-train"));
  Rng test_rng(derive_seed(seed, "two-region-test"));
  out.train = sample_square(n_train, train_rng);
  out.test = sample_square(n_test, test_rng);
  label_points(out.train);
  label_points(out.test);
  apply_noise(out.train, noise, train_rng);

  out.regions.kind = regions::RegionSpec::Kind::Rectangles;
  out.regions.boxes.push_back(band_box(-kInf, 0.5));
  out.regions.boxes.push_back(band_box(0.5, kInf));
  for (Dataset* ds : {&out.train, &out.test}) {
    ds->region_ids.resize(static_cast<std::size_t>(ds->rows()));
    for (int i = 0; i < ds->rows(); ++i)
      ds->region_ids[static_cast<std::size_t>(i)] =
          regions::assign(out.regions, ds->X.row_span(i));
  }
  return out;
}

ToyData gen_grid_toy(int rows, int cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1) fail_invalid("gen_grid_toy: grid must be nonempty");
  const int n_train = std::max(500, 40 * rows * cols);
  const int n_test = std::max(2000, 160 * rows * cols);
  const double noise = 0.1;

  auto cell_of = [&](double v, int n) {
    return std::clamp(static_cast<int>(v * n), 0, n - 1);
  };
  auto label_points = [&](Dataset& ds) {
    for (int i = 0; i < ds.rows(); ++i) {
      int ci = cell_of(ds.X.at(i, 1), rows);
      int cj = cell_of(ds.X.at(i, 0), cols);
      double frac = (ci + cj) % 2 == 0 ? 0.35 : 0.65;
      double t = (ci + frac) / rows;
      ds.Y.at(i, 0) = ds.X.at(i, 1) > t ? 1.0 : 0.0;
    }
  };

  ToyData out;
  Rng train_rng(derive_seed(seed, "grid-train"));
  Rng test_rng(derive_seed(seed, "grid-test"));
  out.train = sample_square(n_train, train_rng);
  out.test = sample_square(n_test, test_rng);
  label_points(out.train);
  label_points(out.test);
  apply_noise(out.train, noise, train_rng);

  out.regions.kind = regions::RegionSpec::Kind::Rectangles;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      regions::Box b;
      b.lo = {j == 0 ? -kInf : static_cast<double>(j) / cols,
              i == 0 ? -kInf : static_cast<double>(i) / rows};
      b.hi = {j == cols - 1 ? kInf : static_cast<double>(j + 1) / cols,
              i == rows - 1 ? kInf : static_cast<double>(i + 1) / rows};
      out.regions.boxes.push_back(std::move(b));
    }
  }
  for (Dataset* ds : {&out.train, &out.test}) {
    ds->region_ids.resize(static_cast<std::size_t>(ds->rows()));
    for (int i = 0; i < ds->rows(); ++i)
      ds->region_ids[static_cast<std::size_t>(i)] =
          regions::assign(out.regions, ds->X.row_span(i));
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size();
}

}  // namespace

LoadedData load_delimited(const std::string& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) fail_io("load_delimited: cannot open '" + path + "'");
  if (opts.label_columns.empty())
    fail_invalid("load_delimited: at least one label column is required");
  if (opts.train_fraction <= 0.0 || opts.val_fraction < 0.0 ||
      opts.train_fraction + opts.val_fraction >= 1.0)
    fail_invalid("load_delimited: split fractions must leave room for a test set");

  std::string line;
  if (!std::getline(in, line)) fail_io("load_delimited: empty file");
  std::vector<std::string> header = split_line(line);
  std::vector<std::vector<std::string>> cells;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> row = split_line(line);
    if (row.size() != header.size())
      fail_io("load_delimited: line " + std::to_string(lineno) + " has " +
              std::to_string(row.size()) + " cells, expected " +
              std::to_string(header.size()));
    cells.push_back(std::move(row));
  }
  if (cells.empty()) fail_io("load_delimited: no data rows");

  auto column_index = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      fail_invalid("load_delimited: unknown column '" + name + "'");
    return static_cast<int>(it - header.begin());
  };

  std::vector<int> label_idx;
  for (const std::string& name : opts.label_columns)
    label_idx.push_back(column_index(name));
  std::set<int> label_set(label_idx.begin(), label_idx.end());
  std::set<int> categorical_set;
  for (const std::string& name : opts.categorical_columns) {
    int c = column_index(name);
    if (label_set.count(c))
      fail_invalid("load_delimited: label column '" + name +
                   "' cannot be categorical");
    categorical_set.insert(c);
  }

  const int n = static_cast<int>(cells.size());
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> feature_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (label_set.count(c)) continue;
    if (header[static_cast<std::size_t>(c)] == "region_id") {
      log_warning("load_delimited: dropping region_id column");
      continue;
    }
    if (categorical_set.count(c)) {
      // one-hot over lexicographically sorted distinct values
      std::set<std::string> values;
      for (const auto& row : cells) values.insert(row[static_cast<std::size_t>(c)]);
      for (const std::string& v : values) {
        std::vector<double> col(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
          col[static_cast<std::size_t>(i)] =
              cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] == v
                  ? 1.0
                  : 0.0;
        feature_names.push_back(header[static_cast<std::size_t>(c)] + "=" + v);
        feature_cols.push_back(std::move(col));
      }
    } else {
      std::vector<double> col(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const std::string& s =
            cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
        if (!parse_number(s, col[static_cast<std::size_t>(i)]))
          fail_invalid("load_delimited: non-numeric value '" + s +
                       "' in column '" + header[static_cast<std::size_t>(c)] +
                       "' (declare it categorical?)");
      }
      feature_names.push_back(header[static_cast<std::size_t>(c)]);
      feature_cols.push_back(std::move(col));
    }
  }
  if (feature_cols.empty()) fail_invalid("load_delimited: no feature columns left");

  Matrix X(n, static_cast<int>(feature_cols.size()));
  for (int i = 0; i < n; ++i)
    for (std::size_t c = 0; c < feature_cols.size(); ++c)
      X.at(i, static_cast<int>(c)) = feature_cols[c][static_cast<std::size_t>(i)];
  Matrix Y(n, static_cast<int>(label_idx.size()));
  for (int i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < label_idx.size(); ++c) {
      const std::string& s = cells[static_cast<std::size_t>(i)]
                                  [static_cast<std::size_t>(label_idx[c])];
      double v;
      if (!parse_number(s, v) || (v != 0.0 && v != 1.0))
        fail_invalid("load_delimited: label column '" +
                     opts.label_columns[c] + "' must contain 0/1, got '" + s +
                     "'");
      Y.at(i, static_cast<int>(c)) = v;
    }
  }

  // seeded 70/10/20 split
  std::vector<int> order = iota_indices(n);
  Rng rng(derive_seed(opts.seed, "csv-split"));
  rng.shuffle(order);
  int n_train = static_cast<int>(std::floor(opts.train_fraction * n));
  int n_val = static_cast<int>(std::floor(opts.val_fraction * n));
  if (n_train < 1 || n - n_train - n_val < 1)
    fail_invalid("load_delimited: dataset too small for the requested split");
  auto slice = [&](int from, int count) {
    std::vector<int> idx(order.begin() + from, order.begin() + from + count);
    Dataset ds;
    ds.X = X.take_rows(idx);
    ds.Y = Y.take_rows(idx);
    return ds;
  };
  LoadedData out;
  out.feature_names = std::move(feature_names);
  out.train = slice(0, n_train);
  out.val = slice(n_train, n_val);
  out.test = slice(n_train + n_val, n - n_train - n_val);

  if (opts.standardize) {
    const int p = X.cols;
    std::vector<double> mean(static_cast<std::size_t>(p), 0.0);
    std::vector<double> sd(static_cast<std::size_t>(p), 0.0);
    for (int i = 0; i < out.train.rows(); ++i)
      for (int c = 0; c < p; ++c) mean[static_cast<std::size_t>(c)] += out.train.X.at(i, c);
    for (int c = 0; c < p; ++c) mean[static_cast<std::size_t>(c)] /= out.train.rows();
    for (int i = 0; i < out.train.rows(); ++i)
      for (int c = 0; c < p; ++c) {
        double d = out.train.X.at(i, c) - mean[static_cast<std::size_t>(c)];
        sd[static_cast<std::size_t>(c)] += d * d;
      }
    for (int c = 0; c < p; ++c) {
      sd[static_cast<std::size_t>(c)] =
          std::sqrt(sd[static_cast<std::size_t>(c)] / out.train.rows());
      if (sd[static_cast<std::size_t>(c)] == 0.0) sd[static_cast<std::size_t>(c)] = 1.0;
    }
    for (Dataset* ds : {&out.train, &out.val, &out.test})
      for (int i = 0; i < ds->rows(); ++i)
        for (int c = 0; c < p; ++c)
          ds->X.at(i, c) = (ds->X.at(i, c) - mean[static_cast<std::size_t>(c)]) /
                           sd[static_cast<std::size_t>(c)];
  }
  return out;
}

void save_csv(const Dataset& ds, const regions::RegionSpec* spec,
              const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_io("save_csv: cannot open '" + path + "' for writing");
  for (int c = 0; c < ds.features(); ++c) out << "x" << c << ",";
  for (int c = 0; c < ds.outputs(); ++c)
    out << "y" << c << (c + 1 < ds.outputs() || spec ? "," : "");
  if (spec) out << "region_id";
  out << "\n";
  char buf[64];
  for (int i = 0; i < ds.rows(); ++i) {
    for (int c = 0; c < ds.features(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.X.at(i, c));
      out << buf << ",";
    }
    for (int c = 0; c < ds.outputs(); ++c) {
      out << static_cast<int>(ds.Y.at(i, c));
      if (c + 1 < ds.outputs() || spec) out << ",";
    }
    if (spec) out << regions::assign(*spec, ds.X.row_span(i));
    out << "\n";
  }
  if (!out) fail_io("save_csv: write to '" + path + "' failed");
}

Dataset load_saved_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_io("load_saved_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail_io("load_saved_csv: empty file");
  std::vector<std::string> header = split_line(line);
  std::vector<int> x_cols, y_cols;
  int region_col = -1;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& h = header[static_cast<std::size_t>(c)];
    if (h == "region_id")
      region_col = c;
    else if (!h.empty() && h[0] == 'x')
      x_cols.push_back(c);
    else if (!h.empty() && h[0] == 'y')
      y_cols.push_back(c);
    else
      fail_io("load_saved_csv: unexpected column '" + h + "'");
  }
  if (x_cols.empty() || y_cols.empty())
    fail_io("load_saved_csv: need x* and y* columns");

  std::vector<std::vector<double>> rows;
  std::vector<int> region_ids;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      fail_io("load_saved_csv: bad cell count at line " + std::to_string(lineno));
    std::vector<double> row(header.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (!parse_number(cells[c], row[c]))
        fail_io("load_saved_csv: non-numeric value at line " +
                std::to_string(lineno));
    if (region_col >= 0)
      region_ids.push_back(static_cast<int>(row[static_cast<std::size_t>(region_col)]));
    rows.push_back(std::move(row));
  }
  Dataset ds;
  ds.X = Matrix(static_cast<int>(rows.size()), static_cast<int>(x_cols.size()));
  ds.Y = Matrix(static_cast<int>(rows.size()), static_cast<int>(y_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < x_cols.size(); ++c)
      ds.X.at(static_cast<int>(i), static_cast<int>(c)) =
          rows[i][static_cast<std::size_t>(x_cols[c])];
    for (std::size_t c = 0; c < y_cols.size(); ++c)
      ds.Y.at(static_cast<int>(i), static_cast<int>(c)) =
          rows[i][static_cast<std::size_t>(y_cols[c])];
  }
  ds.region_ids = std::move(region_ids);
  return ds;
}

}  // namespace treereg::data
