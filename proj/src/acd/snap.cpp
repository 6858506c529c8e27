#include "acd/snap.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>

namespace acd {

namespace {

std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw std::runtime_error("snap: cannot open " + p.string());
  return f;
}

bool skip_line(const std::string& line) {
  auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

}  // namespace

SnapNetwork read_snap_edges(const std::filesystem::path& path) {
  auto f = open_or_throw(path);
  SnapNetwork net;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    std::istringstream is(line);
    std::int64_t a, b;
    if (!(is >> a >> b)) throw std::runtime_error("snap: malformed edge at line " + std::to_string(lineno));
    if (a == b) continue;
    net.adj[a].push_back(b);
    net.adj[b].push_back(a);
  }
  for (auto& [_, v] : net.adj) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return net;
}

std::vector<Community> read_snap_communities(const std::filesystem::path& path) {
  auto f = open_or_throw(path);
  std::vector<Community> out;
  std::string line;
  while (std::getline(f, line)) {
    if (skip_line(line)) continue;
    std::istringstream is(line);
    Community c;
    std::int64_t id;
    while (is >> id) c.push_back(id);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    if (!c.empty()) out.push_back(std::move(c));
  }
  return out;
}

bool compatible_pair(const Community& a, const Community& b, const SnapConstraints& c) {
  std::size_t common = 0;
  for (auto i = a.begin(), j = b.begin(); i != a.end() && j != b.end();) {
    if (*i < *j) ++i;
    else if (*j < *i) ++j;
    else { ++common; break; }
  }
  if (common) return false;
  const std::size_t uni = a.size() + b.size();
  if (!(uni > c.min_union && uni < c.max_union)) return false;
  const double sa = static_cast<double>(a.size()), sb = static_cast<double>(b.size());
  return sa < c.max_ratio * sb && sb < c.max_ratio * sa;
}

std::vector<std::vector<std::size_t>> enumerate_cliques(const std::vector<std::vector<std::size_t>>& adj,
                                                        std::size_t min_size, std::size_t max_size,
                                                        std::size_t limit) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> current;
  // Candidates are the common higher-numbered neighbors of the current clique.
  auto extend = [&](auto&& self, const std::vector<std::size_t>& candidates) -> bool {
    if (current.size() >= min_size) {
      out.push_back(current);
      if (limit && out.size() >= limit) return false;
    }
    if (current.size() == max_size) return true;
    for (std::size_t v : candidates) {
      std::vector<std::size_t> next;
      auto const& nv = adj[v];
      std::set_intersection(candidates.begin(), candidates.end(), nv.begin(), nv.end(), std::back_inserter(next));
      next.erase(next.begin(), std::upper_bound(next.begin(), next.end(), v));
      current.push_back(v);
      const bool go = self(self, next);
      current.pop_back();
      if (!go) return false;
    }
    return true;
  };
  for (std::size_t v = 0; v < adj.size(); ++v) {
    std::vector<std::size_t> cand(std::upper_bound(adj[v].begin(), adj[v].end(), v), adj[v].end());
    current.assign(1, v);
    if (!extend(extend, cand)) break;
  }
  return out;
}

bool build_community_subgraph(const SnapNetwork& net, const std::vector<const Community*>& tuple, LabeledGraph& out) {
  std::map<std::int64_t, int> member;
  for (std::size_t k = 0; k < tuple.size(); ++k)
    for (auto id : *tuple[k]) member[id] = static_cast<int>(k) + 1;
  std::vector<std::int64_t> ids;
  ids.reserve(member.size());
  for (auto const& [id, _] : member) ids.push_back(id);
  LabeledGraph g(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = net.adj.find(ids[i]);
    if (it == net.adj.end()) continue;
    for (auto nb : it->second) {
      if (nb <= ids[i]) continue;
      auto pos = std::lower_bound(ids.begin(), ids.end(), nb);
      if (pos != ids.end() && *pos == nb) g.add_edge(i, static_cast<std::size_t>(pos - ids.begin()));
    }
  }
  // Connectivity via BFS from node 0.
  std::vector<char> seen(ids.size(), 0);
  std::queue<std::size_t> q;
  if (!ids.empty()) {
    q.push(0);
    seen[0] = 1;
  }
  std::size_t reached = 0;
  while (!q.empty()) {
    auto v = q.front();
    q.pop();
    ++reached;
    for (auto w : g.neighbors(v))
      if (!seen[w]) {
        seen[w] = 1;
        q.push(w);
      }
  }
  if (reached != ids.size()) return false;
  Labels labels(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) labels[i] = member[ids[i]];
  g.set_labels(std::move(labels));
  g.meta()["k"] = static_cast<double>(tuple.size());
  out = std::move(g);
  return true;
}

SnapSplits extract_snap_subgraphs(const std::filesystem::path& edge_file, const std::filesystem::path& community_file,
                                  const SnapSplitSpec& split, const SnapConstraints& constraints, Rng& rng) {
  return extract_snap_subgraphs(read_snap_edges(edge_file), read_snap_communities(community_file), split,
                                constraints, rng);
}

SnapSplits extract_snap_subgraphs(const SnapNetwork& net, std::vector<Community> communities,
                                  const SnapSplitSpec& split, const SnapConstraints& constraints, Rng& rng) {
  if (constraints.k_min < 2 || constraints.k_max < constraints.k_min)
    throw std::invalid_argument("snap: invalid tuple size range");
  const double total = split.train + split.val + split.test;
  if (!(total > 0) || split.train < 0 || split.val < 0 || split.test < 0)
    throw std::invalid_argument("snap: invalid split proportions");

  rng.shuffle(communities);
  const std::size_t n = communities.size();
  const auto n_train = static_cast<std::size_t>(static_cast<double>(n) * split.train / total);
  const auto n_val = static_cast<std::size_t>(static_cast<double>(n) * split.val / total);
  const std::size_t bounds[4] = {0, n_train, n_train + n_val, n};
  const std::size_t caps[3] = {constraints.max_train, constraints.max_val, constraints.max_test};

  SnapSplits out;
  std::vector<LabeledGraph>* dest[3] = {&out.train, &out.val, &out.test};
  for (int s = 0; s < 3; ++s) {
    const std::size_t lo = bounds[s], hi = bounds[s + 1];
    std::vector<std::vector<std::size_t>> cadj(hi - lo);
    for (std::size_t i = lo; i < hi; ++i)
      for (std::size_t j = i + 1; j < hi; ++j)
        if (compatible_pair(communities[i], communities[j], constraints)) {
          cadj[i - lo].push_back(j - lo);
          cadj[j - lo].push_back(i - lo);
        }
    auto cliques = enumerate_cliques(cadj, static_cast<std::size_t>(constraints.k_min),
                                     static_cast<std::size_t>(constraints.k_max), constraints.max_candidates);
    rng.shuffle(cliques);
    for (auto const& clique : cliques) {
      if (caps[s] && dest[s]->size() >= caps[s]) break;
      std::vector<const Community*> tuple;
      for (auto v : clique) tuple.push_back(&communities[lo + v]);
      LabeledGraph g;
      if (build_community_subgraph(net, tuple, g)) dest[s]->push_back(std::move(g));
    }
  }
  return out;
}

}  // namespace acd
