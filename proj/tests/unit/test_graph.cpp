#include "acd/dataset_io.hpp"
#include "acd/generators.hpp"
#include "acd/snap.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

using namespace acd;
namespace fs = std::filesystem;

TEST_CASE("labels and sets") {
  Labels l = {1, 1, 2, 1, 2, 1};
  ClusterSets s = labels_to_sets(l);
  CHECK(s == ClusterSets{{0, 1, 3, 5}, {2, 4}});
  CHECK(sets_to_labels(s) == l);

  CHECK(canonicalize(std::vector<int>{3, 3, 7, 3, 9}) == Labels{1, 1, 2, 1, 3});
  CHECK(is_canonical(l));
  CHECK_FALSE(is_canonical(std::vector<int>{2, 1}));
  CHECK(count_clusters(std::vector<int>{5, 5, 2}) == 2);

  CHECK_THROWS_AS(validate_sets({{0, 1}, {1, 2}}, 3), graph_error);
  CHECK_THROWS_AS(validate_sets({{0}, {}}, 1), graph_error);
  CHECK_THROWS_AS(validate_sets({{0}}, 2), graph_error);
}

TEST_CASE("labels round trip through sets") {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    std::size_t n = 1 + rng.index(30);
    std::vector<int> raw(n);
    for (auto& x : raw) x = static_cast<int>(rng.integer(-5, 5));
    Labels c = canonicalize(raw);
    ClusterSets s = labels_to_sets(c);
    validate_sets(s, n);
    CHECK(sets_to_labels(s) == c);
    // Same partition: i~j iff raw equal.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) CHECK((raw[i] == raw[j]) == (c[i] == c[j]));
  }
}

TEST_CASE("graph structure") {
  LabeledGraph g(4);
  g.add_edge(0, 1);
  g.add_edge(2, 1);
  CHECK_THROWS_AS(g.add_edge(1, 1), graph_error);
  CHECK_THROWS_AS(g.add_edge(1, 0), graph_error);
  CHECK(g.n_edges() == 2);
  CHECK(g.has_edge(1, 2));
  CHECK(g.edges() == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}});
  auto a = g.dense_adjacency();
  CHECK(a[0 * 4 + 1] == 1.0);
  CHECK(a[1 * 4 + 0] == 1.0);
  CHECK(a[3 * 4 + 3] == 0.0);
  g.set_labels({2, 2, 5, 5});
  CHECK(g.labels() == Labels{1, 1, 2, 2});
  std::size_t perm[] = {3, 2, 1, 0};
  LabeledGraph p = g.permuted(perm);
  CHECK(p.has_edge(2, 3));
  CHECK(p.has_edge(1, 2));
  CHECK(p.labels() == Labels{1, 1, 2, 2});
  g.validate();
}

TEST_CASE("sbm edge probabilities at the extremes") {
  Rng rng(1);
  Labels l = {1, 1, 2, 2, 2};
  SUBCASE("block diagonal ones") {
    std::vector<double> phi = {1, 0, 0, 1};
    LabeledGraph g = sample_sbm_edges(l, phi, 2, rng);
    CHECK(g.n_edges() == 1 + 3);
    for (auto [i, j] : g.edges()) CHECK(l[i] == l[j]);
  }
  SUBCASE("complete") {
    std::vector<double> phi = {1, 1, 1, 1};
    CHECK(sample_sbm_edges(l, phi, 2, rng).n_edges() == 10);
  }
  SUBCASE("empty") {
    std::vector<double> phi = {0, 0, 0, 0};
    CHECK(sample_sbm_edges(l, phi, 2, rng).n_edges() == 0);
  }
  SUBCASE("invalid phi") {
    std::vector<double> bad = {1.5, 0, 0, 1};
    CHECK_THROWS_WITH(sample_sbm_edges(l, bad, 2, rng), doctest::Contains("phi[0][0]"));
    std::vector<double> asym = {0.5, 0.1, 0.2, 0.5};
    CHECK_THROWS(sample_sbm_edges(l, asym, 2, rng));
  }
}

TEST_CASE("sbm edge frequency matches phi") {
  Rng rng(5);
  Labels l(60);
  for (std::size_t i = 0; i < 60; ++i) l[i] = i < 30 ? 1 : 2;
  std::vector<double> phi = {0.3, 0.05, 0.05, 0.3};
  double within = 0, between = 0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    auto g = sample_sbm_edges(l, phi, 2, rng);
    for (auto [i, j] : g.edges()) (l[i] == l[j] ? within : between) += 1;
  }
  const double nw = reps * 2 * 435.0, nb = reps * 900.0;
  CHECK(std::abs(within / nw - 0.3) < 4 * std::sqrt(0.3 * 0.7 / nw));
  CHECK(std::abs(between / nb - 0.05) < 4 * std::sqrt(0.05 * 0.95 / nb));
}

TEST_CASE("crp") {
  Rng rng(2);
  CHECK(sample_crp(1, 0.7, rng) == Labels{1});
  // Tiny alpha: everything joins the first table.
  for (int t = 0; t < 20; ++t) CHECK(count_clusters(sample_crp(50, 1e-12, rng)) == 1);
  for (int t = 0; t < 50; ++t) CHECK(is_canonical(sample_crp(20, 3.0, rng)));
  CHECK_THROWS(sample_crp(0, 1.0, rng));
  CHECK_THROWS(sample_crp(3, 0.0, rng));

  // EPPF sums to one over all partitions of 4 (Bell(4) = 15 labelings).
  double tot = 0;
  for (int a = 1; a <= 1; ++a)
    for (int b = 1; b <= 2; ++b)
      for (int c = 1; c <= std::max(a, b) + 1; ++c)
        for (int d = 1; d <= std::max({a, b, c}) + 1; ++d) {
          std::vector<int> lab = {a, b, c, d};
          if (!is_canonical(lab)) continue;
          auto sets = labels_to_sets(lab);
          std::vector<std::size_t> sizes;
          for (auto& s : sets) sizes.push_back(s.size());
          tot += std::exp(crp_log_eppf(sizes, 1.7));
        }
  CHECK(tot == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("general sbm properties") {
  Rng base(3);
  GeneralSbmConfig cfg;
  cfg.n_min = 60;
  cfg.n_max = 120;
  for (std::uint64_t i = 0; i < 40; ++i) {
    Rng rng(11, i);
    LabeledGraph g = gen_general_sbm(cfg, rng);
    g.validate();
    CHECK(g.n_nodes() <= 120);
    CHECK(g.n_clusters() >= 1);
    CHECK(g.n_clusters() <= 16);
    for (auto& s : labels_to_sets(g.labels())) CHECK(s.size() >= 5);
    CHECK(is_canonical(g.labels()));
  }
  cfg.alpha = -1;
  CHECK_THROWS(gen_general_sbm(cfg, base));
}

TEST_CASE("symmetric sbm") {
  Rng rng(4);
  SymmetricSbmConfig c{300, 3, 15.0, 5.0};
  CHECK(c.p() == doctest::Approx(15.0 * std::log(300.0) / 300.0));
  LabeledGraph g = gen_symmetric_log_sbm(c, rng);
  CHECK(g.n_nodes() == 300);
  for (auto& s : labels_to_sets(g.labels())) CHECK(s.size() == 100);
  CHECK(g.meta().at("a") == 15.0);
  CHECK_THROWS_WITH(gen_symmetric_log_sbm({301, 3, 15.0, 5.0}, rng), doctest::Contains("divide"));
  CHECK_THROWS_WITH(gen_symmetric_log_sbm({20, 2, 30.0, 1.0}, rng), doctest::Contains("exceeds 1"));

  SymmetricSbmFamily fam;
  fam.n_min = 40;
  fam.n_max = 80;
  fam.k_values = {2, 3};
  fam.log_scaling = false;
  fam.a_min = fam.a_max = 0.9;
  fam.b_min = fam.b_max = 0.05;
  for (int t = 0; t < 10; ++t) {
    LabeledGraph h = gen_symmetric_family(fam, rng);
    const auto k = h.n_clusters();
    CHECK((k == 2 || k == 3));
    CHECK(h.n_nodes() % k == 0);
    CHECK(h.n_nodes() >= 40);
    CHECK(h.n_nodes() <= 80);
  }
}

TEST_CASE("symmetric family above the recovery threshold") {
  Rng rng(41);
  SymmetricSbmFamily fam;
  fam.n_min = 40;
  fam.n_max = 60;
  fam.k_values = {2, 3};
  fam.above_threshold = true;
  for (int t = 0; t < 50; ++t) {
    LabeledGraph g = gen_symmetric_family(fam, rng);
    const double k = g.meta().at("k");
    CHECK(std::sqrt(g.meta().at("a")) - std::sqrt(g.meta().at("b")) > std::sqrt(k));
  }
  // Tiny graphs hit the probability cap; generation must still succeed.
  SymmetricSbmFamily tiny;
  tiny.n_min = 4;
  tiny.n_max = 12;
  tiny.k_values = {1, 2};
  for (int t = 0; t < 200; ++t) CHECK_NOTHROW(gen_symmetric_family(tiny, rng));
  fam.a_max = 4.0;
  CHECK_THROWS(fam.validate());
  fam.a_max = 30.0;
  fam.log_scaling = false;
  CHECK_THROWS(fam.validate());
}

TEST_CASE("modularity example") {
  // Two triangles joined by one edge.
  LabeledGraph g(6);
  for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {2, 3}})
    g.add_edge(i, j);
  Labels l = {1, 1, 1, 2, 2, 2};
  // Each side: 3 inner edges of 7, degree 7 of 14.
  CHECK(modularity(g, l) == doctest::Approx(2 * (3.0 / 7 - 0.25)));
}

namespace {

// Brute-force oracle: all subsets of size [lo, hi] that are pairwise adjacent.
std::set<std::vector<std::size_t>> brute_cliques(const std::vector<std::vector<std::size_t>>& adj, std::size_t lo,
                                                 std::size_t hi) {
  const std::size_t n = adj.size();
  std::set<std::vector<std::size_t>> out;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) s.push_back(i);
    if (s.size() < lo || s.size() > hi) continue;
    bool ok = true;
    for (std::size_t a = 0; a < s.size() && ok; ++a)
      for (std::size_t b = a + 1; b < s.size() && ok; ++b)
        ok = std::binary_search(adj[s[a]].begin(), adj[s[a]].end(), s[b]);
    if (ok) out.insert(s);
  }
  return out;
}

}  // namespace

TEST_CASE("clique enumeration matches brute force") {
  Rng rng(8);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 4 + rng.index(8);
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.bernoulli(0.5)) {
          adj[i].push_back(j);
          adj[j].push_back(i);
        }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    auto got = enumerate_cliques(adj, 2, 4);
    std::set<std::vector<std::size_t>> gs(got.begin(), got.end());
    CHECK(gs.size() == got.size());
    CHECK(gs == brute_cliques(adj, 2, 4));
  }
}

TEST_CASE("snap extraction respects constraints") {
  Rng rng(6);
  // Synthetic network: 24 communities of 6..15 nodes, dense inside, a few cross edges.
  SnapNetwork net;
  std::vector<Community> comms;
  std::int64_t next = 100;
  for (int c = 0; c < 24; ++c) {
    Community cm;
    const auto sz = 6 + rng.index(10);
    for (std::size_t i = 0; i < sz; ++i) cm.push_back(next += 3);
    comms.push_back(cm);
  }
  auto link = [&](std::int64_t a, std::int64_t b) {
    net.adj[a].push_back(b);
    net.adj[b].push_back(a);
  };
  for (auto& cm : comms)
    for (std::size_t i = 0; i < cm.size(); ++i)
      for (std::size_t j = i + 1; j < cm.size(); ++j)
        if (rng.bernoulli(0.6) || j == i + 1) link(cm[i], cm[j]);
  for (std::size_t c = 0; c + 1 < comms.size(); ++c) link(comms[c].front(), comms[c + 1].front());
  for (auto& [_, v] : net.adj) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  SnapConstraints cons;
  cons.k_min = cons.k_max = 2;
  cons.min_union = 13;
  cons.max_union = 28;
  cons.max_ratio = 2.0;
  SnapSplits s = extract_snap_subgraphs(net, comms, {0.6, 0.1, 0.3}, cons, rng);
  CHECK(!s.train.empty());
  for (auto const* split : {&s.train, &s.val, &s.test})
    for (auto const& g : *split) {
      g.validate();
      CHECK(g.n_clusters() == 2);
      CHECK(g.n_nodes() > 13);
      CHECK(g.n_nodes() < 28);
      auto sets = labels_to_sets(g.labels());
      CHECK(sets[0].size() < 2 * sets[1].size());
      CHECK(sets[1].size() < 2 * sets[0].size());
    }

  Community a = {1, 2, 3}, b = {3, 4, 5}, c = {6, 7, 8};
  SnapConstraints loose;
  loose.min_union = 1;
  CHECK_FALSE(compatible_pair(a, b, loose));
  CHECK(compatible_pair(a, c, loose));
  loose.max_union = 6;
  CHECK_FALSE(compatible_pair(a, c, loose));
}

TEST_CASE("snap file readers") {
  auto dir = fs::temp_directory_path() / "acd_snap_test";
  fs::create_directories(dir);
  {
    std::ofstream e(dir / "e.txt");
    e << "# comment\n1 2\n2 1\n2 3\n3 3\n";
    std::ofstream c(dir / "c.txt");
    c << "3 1 2\n\n5 4\n";
  }
  auto net = read_snap_edges(dir / "e.txt");
  CHECK(net.adj.at(2) == std::vector<std::int64_t>{1, 3});
  CHECK(net.adj.count(3) == 1);
  auto cs = read_snap_communities(dir / "c.txt");
  REQUIRE(cs.size() == 2);
  CHECK(cs[0] == Community{1, 2, 3});
  {
    std::ofstream e(dir / "bad.txt");
    e << "1 x\n";
  }
  CHECK_THROWS_WITH(read_snap_edges(dir / "bad.txt"), doctest::Contains("line 1"));
  fs::remove_all(dir);
}

TEST_CASE("dataset io is bit exact") {
  Rng rng(12);
  std::vector<LabeledGraph> gs;
  GeneralSbmConfig cfg;
  cfg.n_min = 20;
  cfg.n_max = 40;
  for (int i = 0; i < 5; ++i) gs.push_back(gen_general_sbm(cfg, rng));
  gs[1].set_features(3, std::vector<double>(gs[1].n_nodes() * 3, 0.1));
  gs[2].meta()["odd"] = 1.0 / 3.0;
  auto dir = fs::temp_directory_path() / "acd_io_test";
  fs::create_directories(dir);
  write_jsonl(dir / "d.jsonl", gs);
  write_binary(dir / "d.jsonl.bin", gs);
  CHECK(read_jsonl(dir / "d.jsonl") == gs);
  CHECK(read_binary(dir / "d.jsonl.bin") == gs);
  CHECK(load_dataset(dir / "d.jsonl") == gs);
  auto third = graph_from_json_line(graph_to_json_line(gs[2], 2));
  double v = third.meta().at("odd"), w = 1.0 / 3.0;
  CHECK(std::memcmp(&v, &w, sizeof v) == 0);
  CHECK_THROWS(graph_from_json_line("{\"n\":2,\"edges\":[[0,5]]}"));
  fs::remove_all(dir);
}
