#pragma once

#include <string>

#include "treereg/datasets.hpp"
#include "treereg/experiment.hpp"

namespace treereg::config {

/// Reads the {model, regularizer, tree, surrogate} keys of a config object.
/// Missing keys fall back to defaults.
exp::TrainConfig train_config_from_json(const std::string& config_json);

/// Reads the sweep key; "lambdas": "paper" expands to the standard strength
/// grid.
exp::SweepConfig sweep_config_from_json(const std::string& config_json);

/// Runs the generator described by the dataset key (or by a bare dataset
/// object): five_rectangles, two_region or grid.
data::ToyData generate_dataset(const std::string& dataset_json);

/// CsvOptions from the dataset key (or a bare dataset object).
data::CsvOptions csv_options_from_json(const std::string& dataset_json);

}  // namespace treereg::config
