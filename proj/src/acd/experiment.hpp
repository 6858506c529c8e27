#pragma once

#include "acd/adam.hpp"
#include "acd/config.hpp"
#include "acd/generators.hpp"
#include "acd/metrics.hpp"
#include "acd/model.hpp"
#include "acd/snap.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace acd {

/// Raised when training produces a non-finite loss.
class numerical_error : public std::runtime_error {
 public:
  numerical_error(const std::string& what, std::size_t iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Worker count: ACD_THREADS when set, else hardware concurrency.
std::size_t worker_count();
/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Exceptions are rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------- data generation

enum class DataFamily { general_sbm, sym_sbm, snap };

struct DatasetSpec {
  DataFamily family = DataFamily::general_sbm;
  std::size_t count = 1000;
  GeneralSbmConfig general;
  SymmetricSbmFamily symmetric;
  /// Fixed (n, k, a, b) instead of the family ranges when set.
  std::optional<SymmetricSbmConfig> symmetric_fixed;
  std::filesystem::path snap_edges, snap_communities;
  SnapSplitSpec snap_split;
  SnapConstraints snap_constraints;
  /// Stores N(0, 1) node features of this width on every graph (0 = none).
  std::size_t random_feature_dim = 0;

  static DatasetSpec from_config(const KeyValueConfig& kv);
};

/// Graph i is drawn from stream (seed, i), so the output does not depend on the worker count.
std::vector<LabeledGraph> generate_graphs(const DatasetSpec& spec, std::uint64_t seed);
/// Writes `out` (synthetic) or `out` with .train/.val/.test inserted before the extension (snap),
/// each with its binary cache. Returns the written paths.
std::vector<std::filesystem::path> generate_dataset(const DatasetSpec& spec, std::uint64_t seed,
                                                    const std::filesystem::path& out);

// ---------------------------------------------------------------- training

struct TrainConfig {
  ModelConfig model;
  std::filesystem::path train_data, val_data;
  std::size_t batch_size = 16;
  std::size_t iterations = 5000;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 1000;
  std::size_t validate_every = 500;
  std::size_t val_graphs = 100;
  std::size_t val_samples = 5;
  std::size_t samples = 15;
  std::uint64_t config_hash = 0;

  /// Learning rate defaults to 5e-5 for the NCP variants and 1e-4 otherwise.
  static TrainConfig from_config(const KeyValueConfig& kv);
  void validate() const;
};

ModelConfig model_config_from(const KeyValueConfig& kv);

struct TrainResult {
  std::vector<double> losses;
  std::vector<std::pair<std::size_t, double>> validation;  ///< (iteration, mean MAP AMI)
  double best_val_ami = -1;
  std::size_t best_iteration = 0;
  double seconds = 0;
};

struct TrainHooks {
  /// Called after each Adam step with (iteration, mean batch loss).
  std::function<void(std::size_t, double)> on_step;
  /// Called when a checkpoint should be written ("last", "best", "final", "last_good").
  std::function<void(const std::string&, const Model&)> on_checkpoint;
};

/// Gradient accumulation over the batch, one Adam step per iteration. Graphs are
/// drawn uniformly with replacement from `train`. Throws numerical_error on a non-finite
/// loss after emitting a "last_good" checkpoint of the pre-step parameters.
TrainResult train_model(Model& model, const TrainConfig& cfg, const std::vector<LabeledGraph>& train,
                        const std::vector<LabeledGraph>& val, const TrainHooks& hooks = {});

/// Runs train_model writing checkpoints, loss_log.csv and manifest.json into `out_dir`.
TrainResult run_training(const TrainConfig& cfg, const std::filesystem::path& out_dir);

// ---------------------------------------------------------------- inference and reports

struct GraphResult {
  std::size_t graph_id = 0;
  std::vector<PosteriorSample> samples;
  std::size_t map = 0;
  double ami = 0, ari = 0;
  std::size_t k_true = 0, k_map = 0;
  bool labeled = false;
};

/// S samples per graph on streams (seed, graph id); fans out over graphs.
std::vector<GraphResult> infer(const Model& model, const std::vector<LabeledGraph>& graphs, std::size_t s,
                               std::uint64_t seed);
/// Mean MAP AMI over the labeled graphs.
double mean_ami(const std::vector<GraphResult>& results);
/// graph_id,ami,ari,K_true,K_map,score with metrics in [0, 1].
std::string metrics_csv(const std::vector<GraphResult>& results);
/// One JSON line per graph: every sample (labels, score, calls) and the MAP labels.
std::string samples_jsonl(const std::vector<GraphResult>& results);

struct SweepSpec {
  std::vector<double> a_values, b_values;
  int k = 2;
  int n = 300;
  std::size_t reps = 10;
  std::size_t samples = 15;

  /// Keys: a_values / b_values lists, or a_min, a_max, a_steps (and b_*); k; n; reps; samples.
  static SweepSpec from_config(const KeyValueConfig& kv);
};

struct SweepCell {
  double a = 0, b = 0;
  double mean_ami = 0, std_ami = 0;
  bool skipped = false;
};

std::vector<SweepCell> threshold_sweep(const Model& model, const SweepSpec& spec, std::uint64_t seed);
std::string sweep_csv(const std::vector<SweepCell>& cells);
/// Exact-recovery boundary |sqrt(a) - sqrt(b)| = sqrt(K): both branches over the b grid.
std::string threshold_curve_csv(const std::vector<double>& b_values, int k, double a_max);
std::string heatmap_svg(const std::vector<SweepCell>& cells, const SweepSpec& spec);

CalibrationReport calibrate(const Model& model, const std::vector<LabeledGraph>& graphs, std::size_t s,
                            std::size_t n_bins, std::uint64_t seed);
std::string calibration_csv(const CalibrationReport& rep);

struct BenchRow {
  std::size_t graph_id = 0, n = 0, k_true = 0, s = 0;
  double seconds = 0;
  double calls_per_sample = 0;
};
/// Sequential timing of S samples per graph for each S.
std::vector<BenchRow> bench(const Model& model, const std::vector<LabeledGraph>& graphs,
                            const std::vector<std::size_t>& s_values, std::uint64_t seed);
std::string bench_csv(const std::vector<BenchRow>& rows);

/// graph_id,a,b,K_true,mean_K,std_K per graph.
std::string uncertainty_csv(const std::vector<LabeledGraph>& graphs, const std::vector<GraphResult>& results);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace acd
