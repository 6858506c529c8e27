#include "acd/experiment.hpp"

#include "acd/dataset_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace acd {

namespace fs = std::filesystem;

std::size_t worker_count() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ACD_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<std::size_t>(v);
  }
  return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!err) err = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

std::vector<double> grid(const KeyValueConfig& kv, const std::string& name) {
  if (kv.has(name + "_values")) return kv.get_doubles(name + "_values", {});
  double lo = kv.get_double(name + "_min", 1.0), hi = kv.get_double(name + "_max", 30.0);
  auto steps = kv.get_int(name + "_steps", 10);
  if (steps < 1 || hi < lo) throw config_error("sweep grid for '" + name + "' is empty");
  std::vector<double> out;
  for (std::int64_t i = 0; i < steps; ++i)
    out.push_back(steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1));
  return out;
}

}  // namespace

// ---------------------------------------------------------------- data generation

DatasetSpec DatasetSpec::from_config(const KeyValueConfig& kv) {
  DatasetSpec s;
  const std::string fam = kv.require_string("family");
  if (fam == "general-sbm") s.family = DataFamily::general_sbm;
  else if (fam == "sym-sbm") s.family = DataFamily::sym_sbm;
  else if (fam == "snap") s.family = DataFamily::snap;
  else throw config_error("unknown family '" + fam + "' (expected general-sbm, sym-sbm or snap)");
  auto count = kv.get_int("count", 1000);
  if (count < 0) throw config_error("count must be >= 0");
  s.count = static_cast<std::size_t>(count);
  auto rf = kv.get_int("random_features", 0);
  if (rf < 0) throw config_error("random_features must be >= 0");
  s.random_feature_dim = static_cast<std::size_t>(rf);

  try {
    switch (s.family) {
      case DataFamily::general_sbm: {
        auto& g = s.general;
        g.n_min = static_cast<int>(kv.get_int("n_min", g.n_min));
        g.n_max = static_cast<int>(kv.get_int("n_max", g.n_max));
        g.alpha = kv.get_double("alpha", g.alpha);
        g.within_a = kv.get_double("within_a", g.within_a);
        g.within_b = kv.get_double("within_b", g.within_b);
        g.between_a = kv.get_double("between_a", g.between_a);
        g.between_b = kv.get_double("between_b", g.between_b);
        g.min_community_size = static_cast<int>(kv.get_int("min_size", g.min_community_size));
        g.validate();
        break;
      }
      case DataFamily::sym_sbm: {
        if (kv.has("a") || kv.has("n")) {
          SymmetricSbmConfig c;
          c.n = static_cast<int>(kv.get_int("n", c.n));
          c.k = static_cast<int>(kv.get_int("k", c.k));
          c.a = kv.get_double("a", c.a);
          c.b = kv.get_double("b", c.b);
          c.validate();
          s.symmetric_fixed = c;
        } else {
          auto& f = s.symmetric;
          f.n_min = static_cast<int>(kv.get_int("n_min", f.n_min));
          f.n_max = static_cast<int>(kv.get_int("n_max", f.n_max));
          f.k_values = kv.get_ints("k_values", f.k_values);
          f.a_min = kv.get_double("a_min", f.a_min);
          f.a_max = kv.get_double("a_max", f.a_max);
          f.b_min = kv.get_double("b_min", f.b_min);
          f.b_max = kv.get_double("b_max", f.b_max);
          f.log_scaling = kv.get_bool("log_scaling", f.log_scaling);
          f.above_threshold = kv.get_bool("above_threshold", f.above_threshold);
          f.validate();
        }
        break;
      }
      case DataFamily::snap: {
        s.snap_edges = kv.require_string("edges");
        s.snap_communities = kv.require_string("communities");
        s.snap_split.train = kv.get_double("split_train", s.snap_split.train);
        s.snap_split.val = kv.get_double("split_val", s.snap_split.val);
        s.snap_split.test = kv.get_double("split_test", s.snap_split.test);
        auto& c = s.snap_constraints;
        c.k_min = static_cast<int>(kv.get_int("k_min", c.k_min));
        c.k_max = static_cast<int>(kv.get_int("k_max", c.k_max));
        c.min_union = static_cast<std::size_t>(kv.get_int("min_union", static_cast<std::int64_t>(c.min_union)));
        c.max_union = static_cast<std::size_t>(kv.get_int("max_union", static_cast<std::int64_t>(c.max_union)));
        c.max_ratio = kv.get_double("max_ratio", c.max_ratio);
        c.max_train = static_cast<std::size_t>(kv.get_int("max_train", 0));
        c.max_val = static_cast<std::size_t>(kv.get_int("max_val", 0));
        c.max_test = static_cast<std::size_t>(kv.get_int("max_test", 0));
        c.max_candidates =
            static_cast<std::size_t>(kv.get_int("max_candidates", static_cast<std::int64_t>(c.max_candidates)));
        if (c.k_min < 2 || c.k_max < c.k_min) throw config_error("snap: need 2 <= k_min <= k_max");
        const double tot = s.snap_split.train + s.snap_split.val + s.snap_split.test;
        if (s.snap_split.train < 0 || s.snap_split.val < 0 || s.snap_split.test < 0 || std::abs(tot - 1.0) > 1e-9)
          throw config_error("snap: split fractions must be nonnegative and sum to 1");
        break;
      }
    }
  } catch (const config_error&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  kv.check_all_used();
  return s;
}

namespace {

void attach_random_features(LabeledGraph& g, std::size_t dim, std::uint64_t seed, std::uint64_t id) {
  if (dim == 0) return;
  Rng rng(seed ^ 0x72616e64ULL, id);
  g.set_features(dim, random_features(g.n_nodes(), dim, rng));
}

}  // namespace

std::vector<LabeledGraph> generate_graphs(const DatasetSpec& spec, std::uint64_t seed) {
  if (spec.family == DataFamily::snap) throw config_error("generate_graphs: snap datasets are extracted, not sampled");
  std::vector<LabeledGraph> out(spec.count);
  parallel_for(spec.count, [&](std::size_t i) {
    Rng rng(seed, i);
    if (spec.family == DataFamily::general_sbm) out[i] = gen_general_sbm(spec.general, rng);
    else if (spec.symmetric_fixed) out[i] = gen_symmetric_log_sbm(*spec.symmetric_fixed, rng);
    else out[i] = gen_symmetric_family(spec.symmetric, rng);
    attach_random_features(out[i], spec.random_feature_dim, seed, i);
  });
  return out;
}

std::vector<fs::path> generate_dataset(const DatasetSpec& spec, std::uint64_t seed, const fs::path& out) {
  auto write = [](const fs::path& p, const std::vector<LabeledGraph>& gs) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_jsonl(p, gs);
    write_binary(fs::path(p.string() + ".bin"), gs);
  };
  if (spec.family != DataFamily::snap) {
    write(out, generate_graphs(spec, seed));
    return {out};
  }
  Rng rng(seed, 0);
  SnapSplits splits = extract_snap_subgraphs(spec.snap_edges, spec.snap_communities, spec.snap_split,
                                             spec.snap_constraints, rng);
  std::vector<fs::path> paths;
  const std::string stem = (out.parent_path() / out.stem()).string(), ext = out.extension().string();
  std::pair<const char*, std::vector<LabeledGraph>*> parts[] = {
      {"train", &splits.train}, {"val", &splits.val}, {"test", &splits.test}};
  std::uint64_t id = 0;
  for (auto& [name, gs] : parts) {
    for (auto& g : *gs) attach_random_features(g, spec.random_feature_dim, seed, id++);
    fs::path p = stem + "." + name + (ext.empty() ? ".jsonl" : ext);
    write(p, *gs);
    paths.push_back(p);
  }
  return paths;
}

// ---------------------------------------------------------------- training

ModelConfig model_config_from(const KeyValueConfig& kv) {
  ModelConfig m;
  try {
    m.head = parse_head_kind(kv.get_string("model", to_string(m.head)));
    m.encoder = parse_gcn_variant(kv.get_string("encoder", to_string(m.encoder)));
    m.features = parse_feature_kind(kv.get_string("features", to_string(m.features)));
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  auto pos = [&](const char* key, std::size_t fallback) {
    auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 1) throw config_error(std::string("config key '") + key + "' must be positive");
    return static_cast<std::size_t>(v);
  };
  m.input_dim = pos("input_dim", m.input_dim);
  m.gcn_layers = pos("gcn_layers", m.gcn_layers);
  m.hidden = pos("hidden", m.hidden);
  m.latent_dim = pos("latent_dim", m.latent_dim);
  m.heads = pos("heads", m.heads);
  m.inducing = pos("inducing", m.inducing);
  m.n_importance = pos("n_importance", m.n_importance);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  return m;
}

TrainConfig TrainConfig::from_config(const KeyValueConfig& kv) {
  TrainConfig c;
  c.model = model_config_from(kv);
  c.train_data = kv.get_string("train_data", "");
  c.val_data = kv.get_string("val_data", "");
  auto count = [&](const char* key, std::size_t fallback, std::int64_t min) {
    auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < min) throw config_error(std::string("config key '") + key + "' must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
  };
  c.batch_size = count("batch_size", c.batch_size, 1);
  c.iterations = count("iterations", c.iterations, 0);
  const bool ncp = c.model.head == HeadKind::ncp || c.model.head == HeadKind::ncp_attn;
  c.lr = kv.get_double("lr", ncp ? 5e-5 : 1e-4);
  c.seed = kv.get_u64("seed", c.seed);
  c.checkpoint_every = count("checkpoint_every", c.checkpoint_every, 0);
  c.validate_every = count("validate_every", c.validate_every, 0);
  c.val_graphs = count("val_graphs", c.val_graphs, 0);
  c.val_samples = count("val_samples", c.val_samples, 1);
  c.samples = count("samples", c.samples, 1);
  c.config_hash = fnv1a64(kv.canonical());
  kv.check_all_used();
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (!(lr > 0) || !std::isfinite(lr)) throw config_error("lr must be positive");
  if (batch_size < 1) throw config_error("batch_size must be >= 1");
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
}

TrainResult train_model(Model& model, const TrainConfig& cfg, const std::vector<LabeledGraph>& train,
                        const std::vector<LabeledGraph>& val, const TrainHooks& hooks) {
  if (train.empty() && cfg.iterations > 0) throw config_error("training set is empty");
  for (auto const& g : train)
    if (!g.has_labels() && g.n_nodes() > 0) throw config_error("training graphs must carry labels");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<PreparedGraph> prepared(train.size());
  parallel_for(train.size(), [&](std::size_t i) { prepared[i] = model.prepare(train[i]); });
  std::vector<LabeledGraph> val_subset(val.begin(), val.begin() + static_cast<std::ptrdiff_t>(
                                                                     std::min(val.size(), cfg.val_graphs)));
  AdamState adam;
  adam.lr = cfg.lr;
  TrainResult res;
  const Rng base(cfg.seed, 0x747261696eULL);
  auto& params = model.store().parameters();
  const double inv_b = 1.0 / static_cast<double>(cfg.batch_size);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    model.store().zero_grad();
    Rng pick = base.split(2 * it);
    double total = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      Rng r = base.split(2 * it + 1).split(b);
      const PreparedGraph& g = prepared[pick.index(prepared.size())];
      Tensor loss = model.loss(g, r);
      const double v = loss.item();
      if (!std::isfinite(v)) {
        if (hooks.on_checkpoint) hooks.on_checkpoint("last_good", model);
        throw numerical_error("non-finite loss at iteration " + std::to_string(it), it);
      }
      total += v;
      if (loss.requires_grad()) backward(scale(loss, inv_b));
    }
    const double mean_loss = total * inv_b;
    for (auto const& p : params)
      for (double gv : p.tensor.grad())
        if (!std::isfinite(gv)) {
          if (hooks.on_checkpoint) hooks.on_checkpoint("last_good", model);
          throw numerical_error("non-finite gradient in " + p.name + " at iteration " + std::to_string(it), it);
        }
    adam_step(params, adam);
    res.losses.push_back(mean_loss);
    if (hooks.on_step) hooks.on_step(it, mean_loss);
    if (cfg.validate_every > 0 && !val_subset.empty() && (it + 1) % cfg.validate_every == 0) {
      double a = mean_ami(infer(model, val_subset, cfg.val_samples, cfg.seed ^ 0x76616cULL));
      res.validation.emplace_back(it + 1, a);
      if (a > res.best_val_ami) {
        res.best_val_ami = a;
        res.best_iteration = it + 1;
        if (hooks.on_checkpoint) hooks.on_checkpoint("best", model);
      }
    }
    if (cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0 && hooks.on_checkpoint)
      hooks.on_checkpoint("last", model);
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint("final", model);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

TrainResult run_training(const TrainConfig& cfg, const fs::path& out_dir) {
  if (cfg.train_data.empty()) throw config_error("config key 'train_data' is required");
  auto train = load_dataset(cfg.train_data);
  std::vector<LabeledGraph> val;
  if (!cfg.val_data.empty()) val = load_dataset(cfg.val_data);
  fs::create_directories(out_dir);
  Model model(cfg.model, cfg.seed);
  std::ofstream log(out_dir / "loss_log.csv", std::ios::binary);
  if (!log) throw std::runtime_error("cannot write " + (out_dir / "loss_log.csv").string());
  log << "iteration,loss\n";
  TrainHooks hooks;
  hooks.on_step = [&](std::size_t it, double loss) { log << it << ',' << fmt(loss) << '\n'; };
  hooks.on_checkpoint = [&](const std::string& tag, const Model& m) {
    m.checkpoint().save(out_dir / (tag + ".acdt"));
  };
  TrainResult res;
  try {
    res = train_model(model, cfg, train, val, hooks);
  } catch (...) {
    log.flush();
    throw;
  }
  log.flush();
  nlohmann::json manifest = {
      {"config_hash", cfg.config_hash},
      {"model", nlohmann::json::parse(cfg.model.to_json())},
      {"seed", cfg.seed},
      {"iterations", cfg.iterations},
      {"batch_size", cfg.batch_size},
      {"lr", cfg.lr},
      {"checkpoint", (out_dir / "final.acdt").string()},
      {"loss_log", (out_dir / "loss_log.csv").string()},
      {"final_loss", res.losses.empty() ? 0.0 : res.losses.back()},
      {"best_val_ami", res.best_val_ami},
      {"best_iteration", res.best_iteration},
      {"seconds", res.seconds},
  };
  nlohmann::json vals = nlohmann::json::array();
  for (auto [it, a] : res.validation) vals.push_back({{"iteration", it}, {"ami", a}});
  manifest["validation"] = vals;
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return res;
}

// ---------------------------------------------------------------- inference and reports

std::vector<GraphResult> infer(const Model& model, const std::vector<LabeledGraph>& graphs, std::size_t s,
                               std::uint64_t seed) {
  if (s < 1) throw config_error("samples must be >= 1");
  std::vector<GraphResult> out(graphs.size());
  parallel_for(graphs.size(), [&](std::size_t i) {
    auto const& g = graphs[i];
    GraphResult& r = out[i];
    r.graph_id = i;
    r.samples = model.sample(model.prepare(g), s, Rng(seed, i));
    r.map = map_index(r.samples);
    auto const& best = r.samples[r.map];
    r.k_map = count_clusters(best.labels);
    if (g.has_labels()) {
      r.labeled = true;
      r.k_true = g.n_clusters();
      r.ami = ami(g.labels(), best.labels);
      r.ari = ari(g.labels(), best.labels);
    }
  });
  return out;
}

double mean_ami(const std::vector<GraphResult>& results) {
  double s = 0;
  std::size_t n = 0;
  for (auto const& r : results)
    if (r.labeled) {
      s += r.ami;
      ++n;
    }
  return n ? s / static_cast<double>(n) : 0.0;
}

std::string metrics_csv(const std::vector<GraphResult>& results) {
  std::string out = "graph_id,ami,ari,K_true,K_map,score\n";
  for (auto const& r : results) {
    out += std::to_string(r.graph_id) + ',' + (r.labeled ? fmt(r.ami) : "") + ',' + (r.labeled ? fmt(r.ari) : "") +
           ',' + (r.labeled ? std::to_string(r.k_true) : "") + ',' + std::to_string(r.k_map) + ',' +
           fmt(r.samples[r.map].score) + '\n';
  }
  return out;
}

std::string samples_jsonl(const std::vector<GraphResult>& results) {
  std::string out;
  for (auto const& r : results) {
    nlohmann::json samples = nlohmann::json::array();
    for (auto const& smp : r.samples)
      samples.push_back({{"labels", smp.labels}, {"score", smp.score}, {"calls", smp.calls}});
    nlohmann::json line = {{"graph_id", r.graph_id},
                           {"map", r.map},
                           {"map_labels", r.samples[r.map].labels},
                           {"samples", std::move(samples)}};
    out += line.dump() + '\n';
  }
  return out;
}

SweepSpec SweepSpec::from_config(const KeyValueConfig& kv) {
  SweepSpec s;
  s.a_values = grid(kv, "a");
  s.b_values = grid(kv, "b");
  s.k = static_cast<int>(kv.get_int("k", s.k));
  s.n = static_cast<int>(kv.get_int("n", s.n));
  auto reps = kv.get_int("reps", static_cast<std::int64_t>(s.reps));
  auto samples = kv.get_int("samples", static_cast<std::int64_t>(s.samples));
  if (reps < 1 || samples < 1) throw config_error("sweep: reps and samples must be >= 1");
  s.reps = static_cast<std::size_t>(reps);
  s.samples = static_cast<std::size_t>(samples);
  if (s.k < 1 || s.n < s.k || s.n % s.k != 0) throw config_error("sweep: K must divide N");
  if (s.a_values.empty() || s.b_values.empty()) throw config_error("sweep: empty grid");
  return s;
}

std::vector<SweepCell> threshold_sweep(const Model& model, const SweepSpec& spec, std::uint64_t seed) {
  if (spec.k < 1 || spec.n < spec.k || spec.n % spec.k != 0) throw config_error("sweep: K must divide N");
  if (spec.reps < 1) throw config_error("sweep: reps must be >= 1");
  std::vector<SweepCell> cells;
  for (double a : spec.a_values)
    for (double b : spec.b_values) cells.push_back({a, b, 0, 0, false});
  std::vector<std::vector<double>> amis(cells.size());
  // Graphs are generated up front so every (cell, rep) has its own stream.
  std::vector<std::pair<std::size_t, LabeledGraph>> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    SymmetricSbmConfig cfg{spec.n, spec.k, cells[c].a, cells[c].b};
    if (cfg.p() > 1.0 || cfg.q() > 1.0 || cfg.p() < 0 || cfg.q() < 0) {
      cells[c].skipped = true;
      continue;
    }
    for (std::size_t r = 0; r < spec.reps; ++r) {
      Rng rng(seed, c * 1000003ULL + r);
      jobs.emplace_back(c, gen_symmetric_log_sbm(cfg, rng));
    }
  }
  std::vector<double> job_ami(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t j) {
    auto const& g = jobs[j].second;
    auto samples = model.sample(model.prepare(g), spec.samples, Rng(seed ^ 0x7377656570ULL, j));
    job_ami[j] = ami(g.labels(), map_select(samples).labels);
  });
  for (std::size_t j = 0; j < jobs.size(); ++j) amis[jobs[j].first].push_back(job_ami[j]);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].skipped) continue;
    double m = 0, v = 0;
    for (double x : amis[c]) m += x;
    m /= static_cast<double>(amis[c].size());
    for (double x : amis[c]) v += (x - m) * (x - m);
    cells[c].mean_ami = m;
    cells[c].std_ami = std::sqrt(v / static_cast<double>(amis[c].size()));
  }
  return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::string out = "a,b,mean_ami,std_ami,skipped\n";
  for (auto const& c : cells)
    out += fmt(c.a) + ',' + fmt(c.b) + ',' + (c.skipped ? "" : fmt(c.mean_ami)) + ',' +
           (c.skipped ? "" : fmt(c.std_ami)) + ',' + (c.skipped ? "1" : "0") + '\n';
  return out;
}

std::string threshold_curve_csv(const std::vector<double>& b_values, int k, double a_max) {
  std::string out = "b,a_upper,a_lower\n";
  const double sk = std::sqrt(static_cast<double>(k));
  for (double b : b_values) {
    const double sb = std::sqrt(b);
    const double upper = (sb + sk) * (sb + sk);
    std::string lower = sb > sk ? fmt((sb - sk) * (sb - sk)) : "";
    out += fmt(b) + ',' + (upper <= a_max ? fmt(upper) : "") + ',' + lower + '\n';
  }
  return out;
}

std::string heatmap_svg(const std::vector<SweepCell>& cells, const SweepSpec& spec) {
  const std::size_t na = spec.a_values.size(), nb = spec.b_values.size();
  const int cw = 28, ch = 20, left = 60, top = 20;
  const int width = left + static_cast<int>(nb) * cw + 20, height = top + static_cast<int>(na) * ch + 50;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  s << "<text x=\"4\" y=\"14\" font-size=\"11\">mean AMI, K=" << spec.k << " N=" << spec.n << "</text>\n";
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      auto const& c = cells[i * nb + j];
      // a grows upward, as in the usual (b, a) threshold plots
      const int x = left + static_cast<int>(j) * cw, y = top + static_cast<int>(na - 1 - i) * ch;
      std::string color = "#cccccc";
      if (!c.skipped) {
        int v = static_cast<int>(std::lround(255 * std::clamp(c.mean_ami, 0.0, 1.0)));
        std::ostringstream col;
        col << "rgb(" << v << ',' << v / 2 << ',' << 255 - v << ')';
        color = col.str();
      }
      s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\""
        << color << "\"/>\n";
    }
  for (std::size_t i = 0; i < na; ++i)
    s << "<text x=\"4\" y=\"" << top + static_cast<int>(na - 1 - i) * ch + 14 << "\" font-size=\"9\">a="
      << fmt(spec.a_values[i]) << "</text>\n";
  for (std::size_t j = 0; j < nb; ++j)
    s << "<text x=\"" << left + static_cast<int>(j) * cw + 2 << "\" y=\"" << top + static_cast<int>(na) * ch + 14
      << "\" font-size=\"9\">" << fmt(spec.b_values[j]) << "</text>\n";
  s << "<text x=\"" << left << "\" y=\"" << height - 8 << "\" font-size=\"11\">b</text>\n</svg>\n";
  return s.str();
}

CalibrationReport calibrate(const Model& model, const std::vector<LabeledGraph>& graphs, std::size_t s,
                            std::size_t n_bins, std::uint64_t seed) {
  auto results = infer(model, graphs, s, seed);
  std::vector<std::vector<std::size_t>> ks;
  std::vector<std::size_t> truth;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (!graphs[i].has_labels()) throw config_error("calibrate: graph " + std::to_string(i) + " has no labels");
    std::vector<std::size_t> k;
    for (auto const& p : results[i].samples) k.push_back(count_clusters(p.labels));
    ks.push_back(std::move(k));
    truth.push_back(graphs[i].n_clusters());
  }
  return ece(ks, truth, n_bins);
}

std::string calibration_csv(const CalibrationReport& rep) {
  std::string out = "bin_lo,bin_hi,count,accuracy,confidence\n";
  for (auto const& b : rep.bins)
    out += fmt(b.lo) + ',' + fmt(b.hi) + ',' + std::to_string(b.count) + ',' + fmt(b.accuracy) + ',' +
           fmt(b.confidence) + '\n';
  out += "# ece," + fmt(rep.ece) + ",n," + std::to_string(rep.n) + '\n';
  return out;
}

std::vector<BenchRow> bench(const Model& model, const std::vector<LabeledGraph>& graphs,
                            const std::vector<std::size_t>& s_values, std::uint64_t seed) {
  std::vector<BenchRow> rows;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    PreparedGraph pg = model.prepare(graphs[i]);
    for (auto s : s_values) {
      if (s < 1) throw config_error("bench: sample counts must be >= 1");
      auto t0 = std::chrono::steady_clock::now();
      auto samples = model.sample(pg, s, Rng(seed, i));
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      double calls = 0;
      for (auto const& p : samples) calls += static_cast<double>(p.calls);
      rows.push_back({i, graphs[i].n_nodes(), graphs[i].has_labels() ? graphs[i].n_clusters() : 0, s, secs,
                      calls / static_cast<double>(s)});
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "graph_id,N,K_true,S,seconds,seconds_per_sample,calls_per_sample\n";
  for (auto const& r : rows)
    out += std::to_string(r.graph_id) + ',' + std::to_string(r.n) + ',' + std::to_string(r.k_true) + ',' +
           std::to_string(r.s) + ',' + fmt(r.seconds) + ',' + fmt(r.seconds / static_cast<double>(r.s)) + ',' +
           fmt(r.calls_per_sample) + '\n';
  return out;
}

std::string uncertainty_csv(const std::vector<LabeledGraph>& graphs, const std::vector<GraphResult>& results) {
  std::string out = "graph_id,a,b,K_true,mean_K,std_K\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto const& meta = graphs[i].meta();
    auto get = [&](const char* k) { return meta.count(k) ? fmt(meta.at(k)) : std::string(); };
    KStats st = uncertainty_stats(results[i].samples);
    out += std::to_string(i) + ',' + get("a") + ',' + get("b") + ',' +
           (graphs[i].has_labels() ? std::to_string(graphs[i].n_clusters()) : "") + ',' + fmt(st.mean) + ',' +
           fmt(st.std) + '\n';
  }
  return out;
}

}  // namespace acd
