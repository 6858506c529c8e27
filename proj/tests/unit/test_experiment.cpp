#include "acd/dataset_io.hpp"
#include "acd/experiment.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace acd;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny_model(HeadKind head, GcnVariant enc = GcnVariant::graphsage) {
  ModelConfig m;
  m.head = head;
  m.encoder = enc;
  m.input_dim = 6;
  m.gcn_layers = 2;
  m.hidden = 8;
  m.latent_dim = 4;
  m.heads = 2;
  m.inducing = 4;
  m.n_importance = 2;
  return m;
}

std::vector<LabeledGraph> small_graphs(std::size_t count, std::uint64_t seed) {
  DatasetSpec spec;
  spec.family = DataFamily::sym_sbm;
  spec.count = count;
  spec.symmetric.n_min = 12;
  spec.symmetric.n_max = 20;
  spec.symmetric.k_values = {2, 3};
  spec.symmetric.log_scaling = false;
  spec.symmetric.a_min = spec.symmetric.a_max = 0.8;
  spec.symmetric.b_min = spec.symmetric.b_max = 0.1;
  return generate_graphs(spec, seed);
}

TrainConfig tiny_train(HeadKind head) {
  TrainConfig c;
  c.model = tiny_model(head);
  c.batch_size = 2;
  c.iterations = 4;
  c.lr = 1e-3;
  c.seed = 5;
  c.validate_every = 2;
  c.val_graphs = 2;
  c.val_samples = 2;
  return c;
}

struct ThreadEnv {
  explicit ThreadEnv(const char* v) { setenv("ACD_THREADS", v, 1); }
  ~ThreadEnv() { unsetenv("ACD_THREADS"); }
};

}  // namespace

TEST_CASE("key value parsing") {
  auto kv = KeyValueConfig::parse("# header\nmodel = ncp  # trailing\n\nlr=1e-3\nks = 1, 2 ,3\nflag = yes\n");
  CHECK(kv.get_string("model", "") == "ncp");
  CHECK(kv.get_double("lr", 0) == 1e-3);
  CHECK(kv.get_ints("ks", {}) == std::vector<int>{1, 2, 3});
  CHECK(kv.get_bool("flag", false));
  CHECK(kv.get_int("missing", 7) == 7);
  kv.check_all_used();
  CHECK(kv.canonical() == "flag=yes\nks=1, 2 ,3\nlr=1e-3\nmodel=ncp\n");

  CHECK_THROWS_AS(KeyValueConfig::parse("a = 1\na = 2\n"), config_error);
  CHECK_THROWS_AS(KeyValueConfig::parse("just words\n"), config_error);
  auto bad = KeyValueConfig::parse("n = 12x\nflag = maybe\n");
  CHECK_THROWS_WITH(bad.get_int("n", 0), doctest::Contains("'n'"));
  CHECK_THROWS_AS(bad.get_bool("flag", false), config_error);
  auto extra = KeyValueConfig::parse("model = ncp\nlrr = 1\n");
  extra.get_string("model", "");
  CHECK_THROWS_WITH(extra.check_all_used(), doctest::Contains("lrr"));
  CHECK(fnv1a64("") == 14695981039346656037ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("train config") {
  auto ncp = TrainConfig::from_config(KeyValueConfig::parse("model = ncp\ntrain_data = x\n"));
  CHECK(ncp.lr == 5e-5);
  auto ccp = TrainConfig::from_config(KeyValueConfig::parse("model = ccp\ntrain_data = x\n"));
  CHECK(ccp.lr == 1e-4);
  CHECK(ncp.config_hash != ccp.config_hash);
  CHECK_THROWS_AS(TrainConfig::from_config(KeyValueConfig::parse("model = kmeans\n")), config_error);
  CHECK_THROWS_AS(TrainConfig::from_config(KeyValueConfig::parse("batch_size = 0\n")), config_error);
  CHECK_THROWS_AS(TrainConfig::from_config(KeyValueConfig::parse("hidden = 30\nheads = 4\n")), config_error);
  CHECK_THROWS_AS(TrainConfig::from_config(KeyValueConfig::parse("lr = -1\n")), config_error);
}

TEST_CASE("model config json round trip") {
  ModelConfig m = tiny_model(HeadKind::dac, GcnVariant::gatedgcn);
  m.features = FeatureKind::random;
  CHECK(ModelConfig::from_json(m.to_json()) == m);
}

TEST_CASE("dataset spec and generation") {
  auto spec = DatasetSpec::from_config(KeyValueConfig::parse("family = sym-sbm\nn = 30\nk = 3\na = 5\nb = 1\ncount = 4\n"));
  REQUIRE(spec.symmetric_fixed.has_value());
  CHECK(spec.symmetric_fixed->n == 30);
  CHECK_THROWS_AS(DatasetSpec::from_config(KeyValueConfig::parse("family = lfr\n")), config_error);

  auto a = generate_graphs(spec, 3);
  std::vector<LabeledGraph> b;
  {
    ThreadEnv one("1");
    b = generate_graphs(spec, 3);
  }
  CHECK(a == b);
  CHECK(generate_graphs(spec, 4) != a);
  spec.random_feature_dim = 5;
  for (auto const& g : generate_graphs(spec, 3)) CHECK(g.feature_dim() == 5);
}

TEST_CASE("parallel for covers every index and rethrows") {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) CHECK(h == 1);
  CHECK_THROWS_WITH(parallel_for(10, [](std::size_t i) {
                      if (i == 7) throw std::runtime_error("seven");
                    }),
                    "seven");
  ThreadEnv env("3");
  CHECK(worker_count() == 3);
}

TEST_CASE("training is deterministic and independent of the worker count") {
  for (auto head : {HeadKind::ncp, HeadKind::ccp, HeadKind::dac}) {
    CAPTURE(to_string(head));
    auto train = small_graphs(6, 1), val = small_graphs(2, 2);
    TrainConfig cfg = tiny_train(head);
    Model m1(cfg.model, cfg.seed), m2(cfg.model, cfg.seed);
    auto r1 = train_model(m1, cfg, train, val);
    TrainResult r2;
    {
      ThreadEnv one("1");
      r2 = train_model(m2, cfg, train, val);
    }
    CHECK(r1.losses == r2.losses);
    CHECK(r1.validation == r2.validation);
    auto c1 = m1.checkpoint(), c2 = m2.checkpoint();
    CHECK(c1.serialize() == c2.serialize());
    for (double l : r1.losses) CHECK(std::isfinite(l));
  }
}

TEST_CASE("checkpoint restores an identical model") {
  auto graphs = small_graphs(3, 7);
  for (auto head : {HeadKind::ncp_attn, HeadKind::ccp_attn}) {
    TrainConfig cfg = tiny_train(head);
    Model m(cfg.model, 11);
    train_model(m, cfg, graphs, {});
    auto path = fs::temp_directory_path() / "acd_model_rt.acdt";
    m.checkpoint().save(path);
    auto back = Model::from_checkpoint(Checkpoint::load(path));
    CHECK(back->config() == m.config());
    auto a = infer(m, graphs, 3, 9), b = infer(*back, graphs, 3, 9);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t s = 0; s < 3; ++s) {
        CHECK(a[i].samples[s].labels == b[i].samples[s].labels);
        CHECK(a[i].samples[s].score == b[i].samples[s].score);
      }
    fs::remove(path);
  }
}

TEST_CASE("non-finite loss aborts after a last good checkpoint") {
  auto graphs = small_graphs(2, 3);
  TrainConfig cfg = tiny_train(HeadKind::ncp);
  Model m(cfg.model, 1);
  m.store().parameters().front().tensor.mutable_data()[0] = std::nan("");
  std::vector<std::string> tags;
  TrainHooks hooks;
  hooks.on_checkpoint = [&](const std::string& t, const Model&) { tags.push_back(t); };
  CHECK_THROWS_AS(train_model(m, cfg, graphs, {}, hooks), numerical_error);
  CHECK(tags == std::vector<std::string>{"last_good"});
}

TEST_CASE("run training writes its artifacts") {
  auto dir = fs::temp_directory_path() / "acd_run_training";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_jsonl(dir / "train.jsonl", small_graphs(4, 1));
  TrainConfig cfg = tiny_train(HeadKind::ccp);
  cfg.train_data = dir / "train.jsonl";
  cfg.checkpoint_every = 2;
  run_training(cfg, dir / "out");
  for (auto f : {"final.acdt", "last.acdt", "loss_log.csv", "manifest.json"}) CHECK(fs::exists(dir / "out" / f));
  std::ifstream log(dir / "out" / "loss_log.csv");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) ++lines;
  CHECK(lines == 5);
  fs::remove_all(dir);
}

TEST_CASE("inference reports") {
  auto graphs = small_graphs(3, 4);
  TrainConfig cfg = tiny_train(HeadKind::dac);
  Model m(cfg.model, 2);
  auto res = infer(m, graphs, 4, 1);
  REQUIRE(res.size() == 3);
  for (auto const& r : res) {
    CHECK(r.samples.size() == 4);
    CHECK(r.labeled);
    CHECK(r.ami >= 0.0);
    CHECK(r.ami <= 1.0);
  }
  auto csv = metrics_csv(res);
  CHECK(csv.rfind("graph_id,ami,ari,K_true,K_map,score\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(uncertainty_csv(graphs, res).rfind("graph_id,a,b,K_true,mean_K,std_K\n", 0) == 0);
  auto rows = bench(m, graphs, {1, 2}, 3);
  CHECK(rows.size() == 6);
  CHECK(bench_csv(rows).rfind("graph_id,N,K_true,S,seconds,seconds_per_sample,calls_per_sample\n", 0) == 0);
}

TEST_CASE("threshold curve") {
  auto csv = threshold_curve_csv({1.0, 4.0, 9.0}, 4, 30.0);
  // K = 4: upper (sqrt b + 2)^2, lower (sqrt b - 2)^2 only when sqrt b > 2.
  CHECK(csv == "b,a_upper,a_lower\n1,9,\n4,16,\n9,25,1\n");
  auto capped = threshold_curve_csv({9.0}, 4, 20.0);
  CHECK(capped == "b,a_upper,a_lower\n9,,1\n");
  // Points on the curve satisfy |sqrt a - sqrt b| = sqrt K.
  for (double b : {0.5, 2.0, 7.3}) {
    const double a = std::pow(std::sqrt(b) + std::sqrt(3.0), 2);
    CHECK(std::abs(std::abs(std::sqrt(a) - std::sqrt(b)) - std::sqrt(3.0)) < 1e-12);
  }
}

TEST_CASE("sweep spec and skipped cells") {
  auto spec = SweepSpec::from_config(
      KeyValueConfig::parse("a_min = 1\na_max = 3\na_steps = 3\nb_values = 1\nk = 2\nn = 6\nreps = 1\nsamples = 1\n"));
  CHECK(spec.a_values == std::vector<double>{1, 2, 3});
  spec.a_values = {1.0, 50.0};
  Model m(tiny_model(HeadKind::dac), 1);
  auto cells = threshold_sweep(m, spec, 1);
  REQUIRE(cells.size() == 2);
  CHECK_FALSE(cells[0].skipped);
  CHECK(cells[1].skipped);
  CHECK(heatmap_svg(cells, spec).find("<svg") == 0);
}
