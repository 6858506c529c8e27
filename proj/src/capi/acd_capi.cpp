#include "acd/acd.h"

#include "acd/checkpoint.hpp"
#include "acd/dataset_io.hpp"
#include "acd/experiment.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace acd;

struct acd_model {
  std::unique_ptr<Model> model;
  std::string description;
};

struct acd_dataset {
  std::vector<LabeledGraph> graphs;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_summary;

template <class F>
acd_status guarded(F&& f) {
  g_error.clear();
  try {
    f();
    return ACD_OK;
  } catch (const numerical_error& e) {
    g_error = e.what();
    return ACD_ERR_NUMERICAL;
  } catch (const checkpoint_error& e) {
    g_error = e.what();
    return ACD_ERR_IO;
  } catch (const std::invalid_argument& e) {
    // config_error, dimension_error and argument validation failures
    g_error = e.what();
    return ACD_ERR_CONFIG;
  } catch (const std::out_of_range& e) {
    g_error = e.what();
    return ACD_ERR_CONFIG;
  } catch (const std::exception& e) {
    g_error = e.what();
    return ACD_ERR_IO;
  } catch (...) {
    g_error = "unknown error";
    return ACD_ERR_INTERNAL;
  }
}

KeyValueConfig optional_config(const char* path) {
  if (!path || !*path) return {};
  return KeyValueConfig::load(path);
}

void require_path(const char* p, const char* what) {
  if (!p || !*p) throw config_error(std::string(what) + " path is required");
}

std::string pick(const char* flag, const KeyValueConfig& kv, const std::string& key) {
  std::string from_kv = kv.get_string(key, "");
  return flag && *flag ? std::string(flag) : from_kv;
}

std::uint64_t pick_seed(const acd_options* o, const KeyValueConfig& kv) {
  auto v = kv.get_u64("seed", 0);
  return o && o->has_seed ? o->seed : v;
}

std::size_t pick_samples(const acd_options* o, const KeyValueConfig& kv, std::size_t fallback) {
  auto v = kv.get_int("samples", static_cast<std::int64_t>(fallback));
  if (o && o->has_samples) v = static_cast<std::int64_t>(o->samples);
  if (v < 1) throw config_error("samples must be >= 1");
  return static_cast<std::size_t>(v);
}

std::vector<LabeledGraph> load_graphs(const std::string& path) {
  if (path.empty()) throw config_error("a dataset path is required (--data or test_data)");
  if (!fs::exists(path)) throw std::runtime_error("dataset not found: " + path);
  return load_dataset(path);
}

std::unique_ptr<Model> load_model(const std::string& path) {
  if (path.empty()) throw config_error("a checkpoint path is required (--checkpoint or checkpoint)");
  return Model::from_checkpoint(Checkpoint::load(path));
}

// Model keys given in an inference config must agree with the checkpoint.
void check_architecture(const KeyValueConfig& kv, const ModelConfig& have) {
  auto j = nlohmann::json::parse(have.to_json());
  for (auto const& [key, val] : j.items()) {
    if (!kv.has(key)) continue;
    std::string want = kv.get_string(key, "");
    std::string got = val.is_string() ? val.get<std::string>() : val.dump();
    if (want != got)
      throw config_error("architecture mismatch: config " + key + "=" + want + " but checkpoint has " + got);
  }
}

std::string pct(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << 100.0 * v;
  return s.str();
}

fs::path companion(const fs::path& out, const std::string& suffix) {
  return out.parent_path() / (out.stem().string() + suffix);
}

}  // namespace

extern "C" {

const char* acd_version(void) { return "1.0.0"; }

const char* acd_status_string(acd_status status) {
  switch (status) {
    case ACD_OK: return "ok";
    case ACD_ERR_IO: return "i/o error";
    case ACD_ERR_CONFIG: return "configuration error";
    case ACD_ERR_NUMERICAL: return "numerical abort";
    case ACD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* acd_last_error(void) { return g_error.c_str(); }
const char* acd_last_summary(void) { return g_summary.c_str(); }

void acd_options_init(acd_options* opts) {
  if (opts) *opts = acd_options{};
}

acd_status acd_run_gen_data(const char* config_path, const acd_options* opts, const char* out_path) {
  return guarded([&] {
    require_path(config_path, "config");
    require_path(out_path, "output");
    KeyValueConfig kv = KeyValueConfig::load(config_path);
    if (opts && opts->family && *opts->family) kv.set("family", opts->family);
    const auto seed = pick_seed(opts, kv);
    DatasetSpec spec = DatasetSpec::from_config(kv);
    auto paths = generate_dataset(spec, seed, out_path);
    std::size_t total = 0;
    for (auto const& p : paths) total += read_binary(p.string() + ".bin").size();
    g_summary = "wrote " + std::to_string(total) + " graphs to " + std::to_string(paths.size()) + " file(s)";
  });
}

acd_status acd_run_train(const char* config_path, const acd_options* opts, const char* out_dir) {
  return guarded([&] {
    require_path(config_path, "config");
    require_path(out_dir, "output");
    KeyValueConfig kv = KeyValueConfig::load(config_path);
    if (opts && opts->has_seed) kv.set("seed", std::to_string(opts->seed));
    if (opts && opts->has_samples) kv.set("samples", std::to_string(opts->samples));
    if (opts && opts->data && *opts->data) kv.set("train_data", opts->data);
    TrainConfig cfg = TrainConfig::from_config(kv);
    if (cfg.train_data.empty()) throw config_error("config key 'train_data' is required");
    for (auto const& p : {cfg.train_data, cfg.val_data})
      if (!p.empty() && !fs::exists(p)) throw std::runtime_error("dataset not found: " + p.string());
    TrainResult r = run_training(cfg, out_dir);
    std::ostringstream s;
    s << "trained " << cfg.iterations << " iterations in " << std::fixed << std::setprecision(1) << r.seconds
      << "s; final loss " << std::setprecision(4) << (r.losses.empty() ? 0.0 : r.losses.back());
    if (r.best_val_ami >= 0) s << "; best validation AMI " << pct(r.best_val_ami) << " at " << r.best_iteration;
    g_summary = s.str();
  });
}

acd_status acd_run_infer(const char* config_path, const acd_options* opts, const char* out_csv) {
  return guarded([&] {
    require_path(out_csv, "output");
    KeyValueConfig kv = optional_config(config_path);
    auto model = load_model(pick(opts ? opts->checkpoint : nullptr, kv, "checkpoint"));
    check_architecture(kv, model->config());
    auto graphs = load_graphs(pick(opts ? opts->data : nullptr, kv, "test_data"));
    const auto seed = pick_seed(opts, kv);
    const auto s = pick_samples(opts, kv, 15);
    kv.check_all_used();
    auto results = infer(*model, graphs, s, seed);
    write_text(out_csv, metrics_csv(results));
    write_text(companion(out_csv, "_samples.jsonl"), samples_jsonl(results));
    double ari_sum = 0;
    std::size_t n = 0;
    for (auto const& r : results)
      if (r.labeled) {
        ari_sum += r.ari;
        ++n;
      }
    g_summary = std::to_string(results.size()) + " graphs, S=" + std::to_string(s);
    if (n) g_summary += "; AMI " + pct(mean_ami(results)) + ", ARI " + pct(ari_sum / static_cast<double>(n));
  });
}

acd_status acd_run_sweep(const char* config_path, const acd_options* opts, const char* out_csv) {
  return guarded([&] {
    require_path(config_path, "config");
    require_path(out_csv, "output");
    KeyValueConfig kv = KeyValueConfig::load(config_path);
    auto model = load_model(pick(opts ? opts->checkpoint : nullptr, kv, "checkpoint"));
    check_architecture(kv, model->config());
    const auto seed = pick_seed(opts, kv);
    if (opts && opts->has_samples) kv.set("samples", std::to_string(opts->samples));
    SweepSpec spec = SweepSpec::from_config(kv);
    kv.check_all_used();
    auto cells = threshold_sweep(*model, spec, seed);
    const fs::path out(out_csv);
    double a_max = 0;
    for (double a : spec.a_values) a_max = std::max(a_max, a);
    write_text(out, sweep_csv(cells));
    write_text(companion(out, "_threshold.csv"), threshold_curve_csv(spec.b_values, spec.k, a_max));
    write_text(companion(out, ".svg"), heatmap_svg(cells, spec));
    std::size_t skipped = 0;
    for (auto const& c : cells) skipped += c.skipped;
    g_summary = std::to_string(cells.size()) + " cells (" + std::to_string(skipped) + " skipped)";
  });
}

acd_status acd_run_calibrate(const char* config_path, const acd_options* opts, const char* out_csv) {
  return guarded([&] {
    require_path(out_csv, "output");
    KeyValueConfig kv = optional_config(config_path);
    auto model = load_model(pick(opts ? opts->checkpoint : nullptr, kv, "checkpoint"));
    check_architecture(kv, model->config());
    auto graphs = load_graphs(pick(opts ? opts->data : nullptr, kv, "test_data"));
    const auto seed = pick_seed(opts, kv);
    const auto s = pick_samples(opts, kv, 15);
    auto bins = kv.get_int("bins", 10);
    if (bins < 1) throw config_error("bins must be >= 1");
    kv.check_all_used();
    auto rep = calibrate(*model, graphs, s, static_cast<std::size_t>(bins), seed);
    write_text(out_csv, calibration_csv(rep));
    std::ostringstream o;
    o << "ECE " << std::fixed << std::setprecision(3) << rep.ece << " over " << rep.n << " graphs";
    g_summary = o.str();
  });
}

acd_status acd_run_bench(const char* config_path, const acd_options* opts, const char* out_csv) {
  return guarded([&] {
    require_path(out_csv, "output");
    KeyValueConfig kv = optional_config(config_path);
    auto model = load_model(pick(opts ? opts->checkpoint : nullptr, kv, "checkpoint"));
    check_architecture(kv, model->config());
    auto graphs = load_graphs(pick(opts ? opts->data : nullptr, kv, "test_data"));
    const auto seed = pick_seed(opts, kv);
    std::vector<int> s_list = kv.get_ints("s_values", {1, 2, 4, 8, 16});
    if (opts && opts->has_samples) s_list = {static_cast<int>(opts->samples)};
    auto max_graphs = kv.get_int("max_graphs", 0);
    kv.check_all_used();
    std::vector<std::size_t> s_values;
    for (int v : s_list) {
      if (v < 1) throw config_error("s_values entries must be >= 1");
      s_values.push_back(static_cast<std::size_t>(v));
    }
    if (max_graphs > 0 && graphs.size() > static_cast<std::size_t>(max_graphs))
      graphs.resize(static_cast<std::size_t>(max_graphs));
    auto rows = bench(*model, graphs, s_values, seed);
    write_text(out_csv, bench_csv(rows));
    g_summary = std::to_string(rows.size()) + " timing rows";
  });
}

acd_status acd_run_uncertainty(const char* config_path, const acd_options* opts, const char* out_csv) {
  return guarded([&] {
    require_path(out_csv, "output");
    KeyValueConfig kv = optional_config(config_path);
    auto model = load_model(pick(opts ? opts->checkpoint : nullptr, kv, "checkpoint"));
    check_architecture(kv, model->config());
    auto graphs = load_graphs(pick(opts ? opts->data : nullptr, kv, "test_data"));
    const auto seed = pick_seed(opts, kv);
    const auto s = pick_samples(opts, kv, 15);
    kv.check_all_used();
    auto results = infer(*model, graphs, s, seed);
    write_text(out_csv, uncertainty_csv(graphs, results));
    g_summary = std::to_string(results.size()) + " graphs, S=" + std::to_string(s);
  });
}

acd_status acd_dataset_load(const char* path, acd_dataset** out) {
  return guarded([&] {
    if (!out) throw config_error("null output handle");
    require_path(path, "dataset");
    auto ds = std::make_unique<acd_dataset>();
    ds->graphs = load_graphs(path);
    *out = ds.release();
  });
}

void acd_dataset_free(acd_dataset* ds) { delete ds; }

size_t acd_dataset_size(const acd_dataset* ds) { return ds ? ds->graphs.size() : 0; }

acd_status acd_dataset_graph_info(const acd_dataset* ds, size_t index, size_t* n_nodes, size_t* n_clusters) {
  return guarded([&] {
    if (!ds) throw config_error("null dataset");
    auto const& g = ds->graphs.at(index);
    if (n_nodes) *n_nodes = g.n_nodes();
    if (n_clusters) *n_clusters = g.has_labels() ? g.n_clusters() : 0;
  });
}

acd_status acd_dataset_labels(const acd_dataset* ds, size_t index, int32_t* labels) {
  return guarded([&] {
    if (!ds || !labels) throw config_error("null argument");
    auto const& g = ds->graphs.at(index);
    if (!g.has_labels()) throw config_error("graph " + std::to_string(index) + " has no labels");
    for (std::size_t i = 0; i < g.n_nodes(); ++i) labels[i] = g.labels()[i];
  });
}

acd_status acd_model_load(const char* checkpoint_path, acd_model** out) {
  return guarded([&] {
    if (!out) throw config_error("null output handle");
    require_path(checkpoint_path, "checkpoint");
    auto m = std::make_unique<acd_model>();
    m->model = load_model(checkpoint_path);
    m->description = m->model->config().to_json();
    *out = m.release();
  });
}

void acd_model_free(acd_model* model) { delete model; }

const char* acd_model_describe(const acd_model* model) { return model ? model->description.c_str() : ""; }

acd_status acd_model_map(const acd_model* model, const acd_dataset* ds, size_t index, size_t samples,
                         uint64_t seed, int32_t* labels, double* score) {
  return guarded([&] {
    if (!model || !ds || !labels) throw config_error("null argument");
    if (samples < 1) throw config_error("samples must be >= 1");
    auto const& g = ds->graphs.at(index);
    auto s = model->model->sample(model->model->prepare(g), samples, Rng(seed, index));
    auto const& best = map_select(s);
    for (std::size_t i = 0; i < best.labels.size(); ++i) labels[i] = best.labels[i];
    if (score) *score = best.score;
  });
}

acd_status acd_ami(const int32_t* a, const int32_t* b, size_t n, double* out) {
  return guarded([&] {
    if (!a || !b || !out) throw config_error("null argument");
    std::vector<int> x(a, a + n), y(b, b + n);
    *out = ami(x, y);
  });
}

acd_status acd_ari(const int32_t* a, const int32_t* b, size_t n, double* out) {
  return guarded([&] {
    if (!a || !b || !out) throw config_error("null argument");
    std::vector<int> x(a, a + n), y(b, b + n);
    *out = ari(x, y);
  });
}

}  // extern "C"
