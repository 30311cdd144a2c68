#include "treereg.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "treereg/config.hpp"
#include "treereg/datasets.hpp"
#include "treereg/experiment.hpp"
#include "treereg/nn.hpp"
#include "treereg/regions.hpp"
#include "treereg/regularizer.hpp"

using namespace treereg;

struct trg_dataset {
  data::Dataset ds;
};
struct trg_regions {
  regions::RegionSpec spec;
};
struct trg_model {
  nn::MlpModel model;
};
struct trg_trees {
  exp::RegionTrees trees;
  int outputs = 0;
};

namespace {

thread_local std::string g_last_error;

trg_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return TRG_ERR_INVALID_ARGUMENT;
    case ErrorCode::Shape: return TRG_ERR_SHAPE;
    case ErrorCode::Io: return TRG_ERR_IO;
    case ErrorCode::UncoveredInput: return TRG_ERR_UNCOVERED_INPUT;
    case ErrorCode::Contract: return TRG_ERR_CONTRACT;
    case ErrorCode::Numeric: return TRG_ERR_NUMERIC;
    case ErrorCode::Internal: return TRG_ERR_INTERNAL;
  }
  return TRG_ERR_INTERNAL;
}

template <typename Fn>
trg_status guarded(Fn&& fn) {
  try {
    fn();
    return TRG_OK;
  } catch (const TrgError& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TRG_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return TRG_ERR_INTERNAL;
  }
}

void require(bool ok, const char* msg) {
  if (!ok) fail_invalid(msg);
}

char* to_cstring(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) fail(ErrorCode::Internal, "out of memory");
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string read_file(const char* path) {
  std::ifstream in(path);
  if (!in) fail_io(std::string("cannot open '") + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const char* path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail_io(std::string("cannot open '") + path + "' for writing");
  out << text;
  if (!out) fail_io(std::string("write to '") + path + "' failed");
}

}  // namespace

extern "C" {

const char* trg_version(void) { return "0.1.0"; }

const char* trg_status_name(trg_status status) {
  switch (status) {
    case TRG_OK: return "ok";
    case TRG_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case TRG_ERR_SHAPE: return "shape";
    case TRG_ERR_IO: return "io";
    case TRG_ERR_UNCOVERED_INPUT: return "uncovered_input";
    case TRG_ERR_CONTRACT: return "contract";
    case TRG_ERR_NUMERIC: return "numeric";
    case TRG_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* trg_last_error(void) { return g_last_error.c_str(); }

void trg_string_free(char* s) { std::free(s); }

trg_status trg_generate_dataset(const char* generator_json,
                                trg_dataset** train_out, trg_dataset** test_out,
                                trg_regions** regions_out) {
  return guarded([&] {
    require(generator_json && train_out && test_out && regions_out,
            "trg_generate_dataset: null argument");
    data::ToyData toy = config::generate_dataset(generator_json);
    *train_out = new trg_dataset{std::move(toy.train)};
    *test_out = new trg_dataset{std::move(toy.test)};
    *regions_out = new trg_regions{std::move(toy.regions)};
  });
}

trg_status trg_load_csv(const char* path, const char* options_json,
                        trg_dataset** train_out, trg_dataset** val_out,
                        trg_dataset** test_out) {
  return guarded([&] {
    require(path && train_out && val_out && test_out,
            "trg_load_csv: null argument");
    data::CsvOptions opts =
        config::csv_options_from_json(options_json ? options_json : "");
    data::LoadedData loaded = data::load_delimited(path, opts);
    *train_out = new trg_dataset{std::move(loaded.train)};
    *val_out = new trg_dataset{std::move(loaded.val)};
    *test_out = new trg_dataset{std::move(loaded.test)};
  });
}

trg_status trg_load_saved_csv(const char* path, trg_dataset** out) {
  return guarded([&] {
    require(path && out, "trg_load_saved_csv: null argument");
    *out = new trg_dataset{data::load_saved_csv(path)};
  });
}

trg_status trg_dataset_save_csv(const trg_dataset* dataset,
                                const trg_regions* regions, const char* path) {
  return guarded([&] {
    require(dataset && path, "trg_dataset_save_csv: null argument");
    data::save_csv(dataset->ds, regions ? &regions->spec : nullptr, path);
  });
}

trg_status trg_dataset_shape(const trg_dataset* dataset, int* rows,
                             int* features, int* outputs) {
  return guarded([&] {
    require(dataset != nullptr, "trg_dataset_shape: null dataset");
    if (rows) *rows = dataset->ds.rows();
    if (features) *features = dataset->ds.features();
    if (outputs) *outputs = dataset->ds.outputs();
  });
}

void trg_dataset_free(trg_dataset* dataset) { delete dataset; }

trg_status trg_regions_kmeans(const trg_dataset* dataset, int k, uint64_t seed,
                              trg_regions** out) {
  return guarded([&] {
    require(dataset && out, "trg_regions_kmeans: null argument");
    *out = new trg_regions{regions::kmeans_regions(dataset->ds.X, k, seed)};
  });
}

trg_status trg_regions_from_json(const char* json_text, trg_regions** out) {
  return guarded([&] {
    require(json_text && out, "trg_regions_from_json: null argument");
    *out = new trg_regions{regions::regions_from_json(json_text)};
  });
}

trg_status trg_regions_to_json(const trg_regions* regions, char** json_out) {
  return guarded([&] {
    require(regions && json_out, "trg_regions_to_json: null argument");
    *json_out = to_cstring(regions::regions_to_json(regions->spec));
  });
}

trg_status trg_regions_count(const trg_regions* regions, int* count) {
  return guarded([&] {
    require(regions && count, "trg_regions_count: null argument");
    *count = regions->spec.region_count();
  });
}

trg_status trg_regions_assign(const trg_regions* regions, const double* x,
                              int dim, int* region_out) {
  return guarded([&] {
    require(regions && x && region_out, "trg_regions_assign: null argument");
    *region_out = regions::assign(regions->spec,
                                  {x, static_cast<std::size_t>(dim)});
  });
}

void trg_regions_free(trg_regions* regions) { delete regions; }

trg_status trg_train(const char* config_json, const trg_dataset* train,
                     const trg_dataset* val, const trg_regions* regions,
                     trg_model** model_out, char** history_csv_out,
                     char** surrogate_csv_out) {
  return guarded([&] {
    require(config_json && train && regions && model_out,
            "trg_train: null argument");
    exp::TrainConfig cfg = config::train_config_from_json(config_json);
    exp::TrainResult res =
        exp::train_target(cfg, train->ds, val ? &val->ds : nullptr,
                          regions->spec);
    *model_out = new trg_model{std::move(res.model)};
    if (history_csv_out)
      *history_csv_out = to_cstring(exp::history_csv(res.history));
    if (surrogate_csv_out)
      *surrogate_csv_out =
          to_cstring(reg::surrogate_diag_csv(res.surrogate_diag));
  });
}

trg_status trg_model_save(const trg_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "trg_model_save: null argument");
    write_file(path, nn::model_to_json(model->model));
  });
}

trg_status trg_model_load(const char* path, trg_model** out) {
  return guarded([&] {
    require(path && out, "trg_model_load: null argument");
    *out = new trg_model{nn::model_from_json(read_file(path))};
  });
}

trg_status trg_model_to_json(const trg_model* model, char** json_out) {
  return guarded([&] {
    require(model && json_out, "trg_model_to_json: null argument");
    *json_out = to_cstring(nn::model_to_json(model->model));
  });
}

trg_status trg_model_from_json(const char* json_text, trg_model** out) {
  return guarded([&] {
    require(json_text && out, "trg_model_from_json: null argument");
    *out = new trg_model{nn::model_from_json(json_text)};
  });
}

trg_status trg_model_predict(const trg_model* model, const double* x, int dim,
                             double* proba_out, int outputs) {
  return guarded([&] {
    require(model && x && proba_out, "trg_model_predict: null argument");
    if (outputs != model->model.output_size())
      fail_shape("trg_model_predict: outputs does not match the model");
    std::vector<double> proba =
        nn::forward(model->model, {x, static_cast<std::size_t>(dim)});
    std::copy(proba.begin(), proba.end(), proba_out);
  });
}

trg_status trg_model_param_count(const trg_model* model, size_t* count) {
  return guarded([&] {
    require(model && count, "trg_model_param_count: null argument");
    *count = model->model.param_count();
  });
}

void trg_model_free(trg_model* model) { delete model; }

trg_status trg_evaluate(const trg_model* model, const trg_dataset* train,
                        const trg_dataset* test, const trg_regions* regions,
                        const char* config_json, char** metrics_json_out) {
  return guarded([&] {
    require(model && train && test && regions && metrics_json_out,
            "trg_evaluate: null argument");
    exp::TrainConfig cfg =
        config::train_config_from_json(config_json ? config_json : "");
    exp::Metrics m =
        exp::evaluate(model->model, train->ds, test->ds, regions->spec, cfg);
    nlohmann::json j;
    j["accuracy"] = m.accuracy;
    j["f1"] = m.f1;
    j["auc"] = m.auc;
    j["eval_apl"] = m.eval_apl;
    j["fidelity"] = m.fidelity;
    j["region_apls"] = m.region_apls;
    j["per_output_f1"] = m.per_output_f1;
    j["per_output_auc"] = m.per_output_auc;
    *metrics_json_out = to_cstring(j.dump());
  });
}

trg_status trg_distill(const trg_model* model, const trg_dataset* train,
                       const trg_regions* regions, const char* config_json,
                       trg_trees** out) {
  return guarded([&] {
    require(model && train && regions && out, "trg_distill: null argument");
    exp::TrainConfig cfg =
        config::train_config_from_json(config_json ? config_json : "");
    auto trees = exp::distill(model->model, train->ds, regions->spec, cfg);
    *out = new trg_trees{std::move(trees), model->model.output_size()};
  });
}

trg_status trg_trees_shape(const trg_trees* trees, int* regions, int* outputs) {
  return guarded([&] {
    require(trees != nullptr, "trg_trees_shape: null trees");
    if (regions) *regions = static_cast<int>(trees->trees.size());
    if (outputs) *outputs = trees->outputs;
  });
}

trg_status trg_trees_region_json(const trg_trees* trees, int region,
                                 char** json_out) {
  return guarded([&] {
    require(trees && json_out, "trg_trees_region_json: null argument");
    *json_out = to_cstring(exp::region_trees_to_json(trees->trees, region));
  });
}

trg_status trg_trees_predict(const trg_trees* trees, const trg_regions* regions,
                             const double* x, int dim, int* labels_out,
                             int outputs) {
  return guarded([&] {
    require(trees && regions && x && labels_out,
            "trg_trees_predict: null argument");
    if (outputs != trees->outputs)
      fail_shape("trg_trees_predict: outputs does not match the trees");
    std::span<const double> xs(x, static_cast<std::size_t>(dim));
    int r = regions::assign(regions->spec, xs);
    if (r >= static_cast<int>(trees->trees.size()) ||
        trees->trees[static_cast<std::size_t>(r)].empty())
      fail_contract("trg_trees_predict: region " + std::to_string(r) +
                    " has no tree");
    for (int o = 0; o < outputs; ++o)
      labels_out[o] =
          trees->trees[static_cast<std::size_t>(r)][static_cast<std::size_t>(o)]
              .predict(xs);
  });
}

void trg_trees_free(trg_trees* trees) { delete trees; }

trg_status trg_sweep(const char* config_json, const trg_dataset* train,
                     const trg_dataset* val, const trg_dataset* test,
                     const trg_regions* regions, char** results_csv_out) {
  return guarded([&] {
    require(config_json && train && test && regions && results_csv_out,
            "trg_sweep: null argument");
    exp::TrainConfig base = config::train_config_from_json(config_json);
    exp::SweepConfig grid = config::sweep_config_from_json(config_json);
    std::vector<exp::SweepRow> rows =
        exp::sweep(grid, base, train->ds, val ? &val->ds : nullptr, test->ds,
                   regions->spec);
    *results_csv_out = to_cstring(exp::sweep_csv(rows));
  });
}

trg_status trg_sparsemax(const double* z, int n, double* out) {
  return guarded([&] {
    require(z && out, "trg_sparsemax: null argument");
    std::vector<double> p =
        reg::sparsemax({z, static_cast<std::size_t>(n > 0 ? n : 0)});
    std::copy(p.begin(), p.end(), out);
  });
}

}  // extern "C"
