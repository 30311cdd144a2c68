// treereg command-line interface. All domain work goes through the C API in
// treereg.h; this file only handles configuration plumbing and file layout.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "treereg.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError {
  trg_status status;
  std::string message;
};

[[noreturn]] void die(trg_status status, const std::string& message) {
  throw CliError{status, message};
}

void check(trg_status status, const std::string& what) {
  if (status != TRG_OK)
    die(status, what + ": " + trg_last_error());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) die(TRG_ERR_IO, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) die(TRG_ERR_IO, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) die(TRG_ERR_IO, "write to '" + path + "' failed");
}

// RAII wrappers around the C handles
struct StringOut {
  char* s = nullptr;
  ~StringOut() { trg_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* h = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : h(o.h) { o.h = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    if (this != &o) {
      Free(h);
      h = o.h;
      o.h = nullptr;
    }
    return *this;
  }
  ~Handle() { Free(h); }
  T** out() { return &h; }
  operator T*() const { return h; }
};

using DatasetHandle = Handle<trg_dataset, trg_dataset_free>;
using RegionsHandle = Handle<trg_regions, trg_regions_free>;
using ModelHandle = Handle<trg_model, trg_model_free>;
using TreesHandle = Handle<trg_trees, trg_trees_free>;

constexpr const char* kConfigKeys[] = {"dataset", "regions",   "model", "regularizer",
                                       "tree",    "surrogate", "sweep"};

struct Options {
  std::string config_path;
  std::map<std::string, std::string> overrides;  // config key -> JSON text
};

void add_common_options(CLI::App* cmd, Options& opts) {
  cmd->add_option("-c,--config", opts.config_path,
                  "JSON config file with {dataset, regions, model, "
                  "regularizer, tree, surrogate, sweep} keys");
  for (const char* key : kConfigKeys)
    cmd->add_option("--" + std::string(key), opts.overrides[key],
                    std::string("JSON object merged over the config's '") +
                        key + "' key");
}

json load_config(const Options& opts) {
  json cfg = json::object();
  if (!opts.config_path.empty()) {
    try {
      cfg = json::parse(read_text_file(opts.config_path));
    } catch (const json::exception& e) {
      die(TRG_ERR_INVALID_ARGUMENT,
          "config file '" + opts.config_path + "': " + e.what());
    }
    if (!cfg.is_object())
      die(TRG_ERR_INVALID_ARGUMENT, "config file must hold a JSON object");
  }
  for (const auto& [key, text] : opts.overrides) {
    if (text.empty()) continue;
    json patch;
    try {
      patch = json::parse(text);
    } catch (const json::exception& e) {
      die(TRG_ERR_INVALID_ARGUMENT,
          "--" + key + " is not valid JSON: " + e.what());
    }
    if (!cfg.contains(key)) cfg[key] = json::object();
    cfg[key].merge_patch(patch);
  }
  return cfg;
}

struct ResolvedData {
  DatasetHandle train, val, test;
  RegionsHandle regions;
  bool has_val = false;
  bool has_test = false;
};

void resolve_regions(const json& cfg, ResolvedData& data,
                     RegionsHandle&& generated) {
  json rcfg = cfg.value("regions", json::object());
  std::string source = rcfg.value("source", generated.h ? "dataset" : "kmeans");
  if (source == "dataset") {
    if (!generated.h)
      die(TRG_ERR_INVALID_ARGUMENT,
          "regions.source=dataset requires a generated dataset");
    data.regions.h = generated.h;
    generated.h = nullptr;
  } else if (source == "kmeans") {
    int k = rcfg.value("k", 5);
    uint64_t seed = rcfg.value("seed", 0);
    check(trg_regions_kmeans(data.train, k, seed, data.regions.out()),
          "kmeans regions");
  } else if (source == "file") {
    std::string path = rcfg.value("path", "");
    if (path.empty())
      die(TRG_ERR_INVALID_ARGUMENT, "regions.source=file requires 'path'");
    check(trg_regions_from_json(read_text_file(path).c_str(), data.regions.out()),
          "regions file");
  } else {
    die(TRG_ERR_INVALID_ARGUMENT, "unknown regions.source '" + source + "'");
  }
}

ResolvedData resolve_data(const json& cfg) {
  ResolvedData data;
  json dcfg = cfg.value("dataset", json::object());
  RegionsHandle generated;
  if (dcfg.contains("generator")) {
    check(trg_generate_dataset(cfg.dump().c_str(), data.train.out(),
                               data.test.out(), generated.out()),
          "generate dataset");
    data.has_test = true;
  } else if (dcfg.contains("csv")) {
    std::string path = dcfg.at("csv").get<std::string>();
    check(trg_load_csv(path.c_str(), dcfg.dump().c_str(), data.train.out(),
                       data.val.out(), data.test.out()),
          "load csv");
    data.has_val = true;
    data.has_test = true;
  } else if (dcfg.contains("train_csv")) {
    check(trg_load_saved_csv(dcfg.at("train_csv").get<std::string>().c_str(),
                             data.train.out()),
          "load train csv");
    if (dcfg.contains("test_csv")) {
      check(trg_load_saved_csv(dcfg.at("test_csv").get<std::string>().c_str(),
                               data.test.out()),
            "load test csv");
      data.has_test = true;
    }
  } else {
    die(TRG_ERR_INVALID_ARGUMENT,
        "dataset config needs 'generator', 'csv' or 'train_csv'");
  }
  resolve_regions(cfg, data, std::move(generated));
  return data;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) die(TRG_ERR_IO, "cannot create directory '" + dir + "'");
}

int cmd_gen_data(const Options& opts, const std::string& out_dir) {
  json cfg = load_config(opts);
  if (!cfg.contains("dataset") || !cfg["dataset"].contains("generator"))
    die(TRG_ERR_INVALID_ARGUMENT, "gen-data needs dataset.generator");
  ensure_dir(out_dir);
  DatasetHandle train, test;
  RegionsHandle regions;
  check(trg_generate_dataset(cfg.dump().c_str(), train.out(), test.out(),
                             regions.out()),
        "generate dataset");
  check(trg_dataset_save_csv(train, regions, (out_dir + "/train.csv").c_str()),
        "save train.csv");
  check(trg_dataset_save_csv(test, regions, (out_dir + "/test.csv").c_str()),
        "save test.csv");
  StringOut rjson;
  check(trg_regions_to_json(regions, &rjson.s), "regions to json");
  write_text_file(out_dir + "/regions.json", rjson.str());
  int rows = 0, feats = 0, outs = 0;
  check(trg_dataset_shape(train, &rows, &feats, &outs), "dataset shape");
  std::cout << "wrote " << out_dir << "/train.csv (" << rows << " rows), "
            << out_dir << "/test.csv, " << out_dir << "/regions.json\n";
  return 0;
}

int cmd_train(const Options& opts, const std::string& out_dir) {
  json cfg = load_config(opts);
  ResolvedData data = resolve_data(cfg);
  ensure_dir(out_dir);
  ModelHandle model;
  StringOut history, diag;
  check(trg_train(cfg.dump().c_str(), data.train,
                  data.has_val ? data.val.h : nullptr, data.regions,
                  model.out(), &history.s, &diag.s),
        "train");
  check(trg_model_save(model, (out_dir + "/checkpoint.json").c_str()),
        "save checkpoint");
  write_text_file(out_dir + "/history.csv", history.str());
  write_text_file(out_dir + "/surrogate_diag.csv", diag.str());
  StringOut rjson;
  check(trg_regions_to_json(data.regions, &rjson.s), "regions to json");
  write_text_file(out_dir + "/regions.json", rjson.str());
  std::cout << "wrote " << out_dir << "/checkpoint.json, history.csv, "
            << "surrogate_diag.csv, regions.json\n";
  return 0;
}

int cmd_eval(const Options& opts, const std::string& checkpoint,
             const std::string& out_file) {
  json cfg = load_config(opts);
  ResolvedData data = resolve_data(cfg);
  if (!data.has_test)
    die(TRG_ERR_INVALID_ARGUMENT, "eval needs a dataset with a test split");
  ModelHandle model;
  check(trg_model_load(checkpoint.c_str(), model.out()), "load checkpoint");
  StringOut metrics;
  check(trg_evaluate(model, data.train, data.test, data.regions,
                     cfg.dump().c_str(), &metrics.s),
        "evaluate");
  std::cout << metrics.str() << "\n";
  if (!out_file.empty()) write_text_file(out_file, metrics.str());
  return 0;
}

int cmd_distill(const Options& opts, const std::string& checkpoint,
                const std::string& out_dir) {
  json cfg = load_config(opts);
  ResolvedData data = resolve_data(cfg);
  ModelHandle model;
  check(trg_model_load(checkpoint.c_str(), model.out()), "load checkpoint");
  TreesHandle trees;
  check(trg_distill(model, data.train, data.regions, cfg.dump().c_str(),
                    trees.out()),
        "distill");
  ensure_dir(out_dir + "/trees");
  int n_regions = 0, n_outputs = 0;
  check(trg_trees_shape(trees, &n_regions, &n_outputs), "trees shape");
  for (int r = 0; r < n_regions; ++r) {
    StringOut tjson;
    check(trg_trees_region_json(trees, r, &tjson.s), "trees to json");
    write_text_file(out_dir + "/trees/region_" + std::to_string(r) + ".json",
                    tjson.str());
  }
  std::cout << "wrote " << n_regions << " tree files under " << out_dir
            << "/trees/\n";
  return 0;
}

int cmd_sweep(const Options& opts, const std::string& out_dir) {
  json cfg = load_config(opts);
  ResolvedData data = resolve_data(cfg);
  if (!data.has_test)
    die(TRG_ERR_INVALID_ARGUMENT, "sweep needs a dataset with a test split");
  ensure_dir(out_dir);
  StringOut results;
  check(trg_sweep(cfg.dump().c_str(), data.train,
                  data.has_val ? data.val.h : nullptr, data.test, data.regions,
                  &results.s),
        "sweep");
  write_text_file(out_dir + "/results.csv", results.str());
  std::cout << "wrote " << out_dir << "/results.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"treereg: tree-regularized network training and distillation"};
  app.require_subcommand(1);

  Options gen_opts, train_opts, eval_opts, distill_opts, sweep_opts;
  std::string gen_out = "data", train_out = "run", eval_ckpt, eval_out;
  std::string distill_ckpt, distill_out = "run", sweep_out = "sweep";

  CLI::App* gen = app.add_subcommand(
      "gen-data", "Generate a toy dataset as CSV plus a region JSON");
  add_common_options(gen, gen_opts);
  gen->add_option("-o,--out", gen_out, "output directory");

  CLI::App* train =
      app.add_subcommand("train", "Train a single configuration");
  add_common_options(train, train_opts);
  train->add_option("-o,--out", train_out, "output directory");

  CLI::App* eval =
      app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_common_options(eval, eval_opts);
  eval->add_option("--checkpoint", eval_ckpt, "model checkpoint JSON")
      ->required();
  eval->add_option("-o,--out", eval_out, "metrics JSON file (also printed)");

  CLI::App* distill = app.add_subcommand(
      "distill", "Export per-region decision trees for a checkpoint");
  add_common_options(distill, distill_opts);
  distill->add_option("--checkpoint", distill_ckpt, "model checkpoint JSON")
      ->required();
  distill->add_option("-o,--out", distill_out, "output directory");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run a (kind, lambda, seed) grid plus tree baselines");
  add_common_options(sweep, sweep_opts);
  sweep->add_option("-o,--out", sweep_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(gen_opts, gen_out);
    if (train->parsed()) return cmd_train(train_opts, train_out);
    if (eval->parsed()) return cmd_eval(eval_opts, eval_ckpt, eval_out);
    if (distill->parsed())
      return cmd_distill(distill_opts, distill_ckpt, distill_out);
    if (sweep->parsed()) return cmd_sweep(sweep_opts, sweep_out);
  } catch (const CliError& e) {
    json err = {{"code", static_cast<int>(e.status)},
                {"name", trg_status_name(e.status)},
                {"message", e.message}};
    std::cerr << "error: " << err.dump() << "\n";
    return static_cast<int>(e.status);
  }
  return 0;
}
