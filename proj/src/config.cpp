#include "treereg/config.hpp"

#include "json.hpp"

namespace treereg::config {

namespace {

using nlohmann::json;

json parse(const std::string& text, const char* what) {
  if (text.empty()) return json::object();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail_invalid(std::string(what) + ": bad JSON: " + e.what());
  }
}

json section(const json& j, const char* key) {
  if (j.contains(key)) {
    if (!j.at(key).is_object())
      fail_invalid(std::string("config key '") + key + "' must be an object");
    return j.at(key);
  }
  return json::object();
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail_invalid(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

exp::TrainConfig train_config_from_json(const std::string& config_json) {
  json root = parse(config_json, "train config");
  exp::TrainConfig cfg;

  json m = section(root, "model");
  cfg.model.hidden = get(m, "hidden", cfg.model.hidden);
  cfg.model.seed = get<std::uint64_t>(m, "seed", cfg.model.seed);
  cfg.model.epochs = get(m, "epochs", cfg.model.epochs);
  cfg.model.batch_size = get(m, "batch_size", cfg.model.batch_size);
  cfg.model.learning_rate = get(m, "learning_rate", cfg.model.learning_rate);
  cfg.model.val_fraction = get(m, "val_fraction", cfg.model.val_fraction);
  cfg.model.convergence_window =
      get(m, "convergence_window", cfg.model.convergence_window);
  cfg.model.convergence_tol = get(m, "convergence_tol", cfg.model.convergence_tol);
  cfg.model.early_stop = get(m, "early_stop", cfg.model.early_stop);

  json r = section(root, "regularizer");
  cfg.kind = reg::kind_from_string(get<std::string>(r, "kind", "none"));
  cfg.lambda = get(r, "lambda", cfg.lambda);
  cfg.temperature = get(r, "temperature", cfg.temperature);
  if (cfg.lambda < 0.0) fail_invalid("regularizer.lambda must be >= 0");
  if (cfg.temperature <= 0.0) fail_invalid("regularizer.temperature must be > 0");

  json t = section(root, "tree");
  cfg.tree.seed = get<std::uint64_t>(t, "seed", cfg.tree.seed);
  if (t.contains("max_features")) {
    const json& mf = t.at("max_features");
    if (mf.is_string()) {
      if (mf.get<std::string>() != "all")
        fail_invalid("tree.max_features must be \"all\" or a fraction");
      cfg.tree.max_features = 1.0;
    } else {
      cfg.tree.max_features = mf.get<double>();
    }
  }
  cfg.tree.min_samples_leaf = get(t, "min_samples_leaf", cfg.tree.min_samples_leaf);
  cfg.tree.max_depth = get(t, "max_depth", cfg.tree.max_depth);
  cfg.tree.seeds_for_averaging = get<std::vector<std::uint64_t>>(
      t, "seeds_for_averaging", cfg.tree.seeds_for_averaging);
  cfg.tree.val_fraction = get(t, "val_fraction", cfg.tree.val_fraction);

  json s = section(root, "surrogate");
  cfg.surrogate.hidden = get(s, "hidden", cfg.surrogate.hidden);
  cfg.surrogate.epochs = get(s, "epochs", cfg.surrogate.epochs);
  cfg.surrogate.learning_rate =
      get(s, "learning_rate", cfg.surrogate.learning_rate);
  cfg.surrogate.batch_size = get(s, "batch_size", cfg.surrogate.batch_size);
  cfg.surrogate.retrain_period =
      get(s, "retrain_period", cfg.surrogate.retrain_period);
  cfg.surrogate.n_augment = get(s, "n_augment", cfg.surrogate.n_augment);
  cfg.surrogate.buffer_capacity =
      get(s, "buffer_capacity", cfg.surrogate.buffer_capacity);
  cfg.surrogate.holdout_fraction =
      get(s, "holdout_fraction", cfg.surrogate.holdout_fraction);
  cfg.surrogate.seed = get<std::uint64_t>(s, "seed", cfg.surrogate.seed);
  return cfg;
}

exp::SweepConfig sweep_config_from_json(const std::string& config_json) {
  json root = parse(config_json, "sweep config");
  json s = section(root, "sweep");
  exp::SweepConfig cfg;
  std::vector<std::string> kind_names = get<std::vector<std::string>>(
      s, "kinds",
      {"l2", "global_tree", "regional_l1", "regional_l0", "regional_lsp"});
  cfg.kinds.clear();
  for (const std::string& name : kind_names)
    cfg.kinds.push_back(reg::kind_from_string(name));
  if (s.contains("lambdas") && s.at("lambdas").is_string()) {
    if (s.at("lambdas").get<std::string>() != "paper")
      fail_invalid("sweep.lambdas must be \"paper\" or a list of numbers");
    cfg.lambdas = exp::paper_lambda_grid();
  } else {
    cfg.lambdas = get<std::vector<double>>(s, "lambdas", exp::paper_lambda_grid());
  }
  cfg.seeds = get<std::vector<std::uint64_t>>(s, "seeds", cfg.seeds);
  cfg.threads = get(s, "threads", cfg.threads);
  cfg.include_baselines = get(s, "include_baselines", cfg.include_baselines);
  return cfg;
}

namespace {

json dataset_section(const std::string& dataset_json) {
  json j = parse(dataset_json, "dataset config");
  if (j.contains("dataset")) return section(j, "dataset");
  return j;
}

}  // namespace

data::ToyData generate_dataset(const std::string& dataset_json) {
  json d = dataset_section(dataset_json);
  std::string name = get<std::string>(d, "generator", "");
  if (name.empty())
    fail_invalid("dataset config: 'generator' is required to generate data");
  std::uint64_t seed = get<std::uint64_t>(d, "seed", 0);
  if (name == "five_rectangles") {
    return data::gen_five_rectangles(get(d, "n_train", 250),
                                     get(d, "n_test", 5000),
                                     get(d, "label_noise", 0.1), seed);
  }
  if (name == "two_region") return data::gen_two_region_toy(seed);
  if (name == "grid")
    return data::gen_grid_toy(get(d, "rows", 5), get(d, "cols", 5), seed);
  fail_invalid("dataset config: unknown generator '" + name + "'");
}

data::CsvOptions csv_options_from_json(const std::string& dataset_json) {
  json d = dataset_section(dataset_json);
  data::CsvOptions opts;
  opts.label_columns =
      get<std::vector<std::string>>(d, "label_columns", opts.label_columns);
  opts.categorical_columns = get<std::vector<std::string>>(
      d, "categorical_columns", opts.categorical_columns);
  opts.standardize = get(d, "standardize", opts.standardize);
  opts.seed = get<std::uint64_t>(d, "seed", opts.seed);
  opts.train_fraction = get(d, "train_fraction", opts.train_fraction);
  opts.val_fraction = get(d, "val_fraction", opts.val_fraction);
  return opts;
}

}  // namespace treereg::config
