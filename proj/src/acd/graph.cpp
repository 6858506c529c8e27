#include "acd/graph.hpp"

#include <algorithm>
#include <unordered_map>

namespace acd {

std::size_t LabeledGraph::n_edges() const {
  std::size_t d = 0;
  for (auto const& a : adj_) d += a.size();
  return d / 2;
}

void LabeledGraph::add_edge(std::size_t i, std::size_t j) {
  const std::size_t n = adj_.size();
  if (i >= n || j >= n) throw graph_error("add_edge: node index out of range");
  if (i == j) throw graph_error("add_edge: self loop on node " + std::to_string(i));
  auto insert = [](std::vector<std::uint32_t>& v, std::size_t x) {
    auto it = std::lower_bound(v.begin(), v.end(), static_cast<std::uint32_t>(x));
    if (it != v.end() && *it == x) return false;
    v.insert(it, static_cast<std::uint32_t>(x));
    return true;
  };
  if (!insert(adj_[i], j)) throw graph_error("add_edge: duplicate edge");
  insert(adj_[j], i);
}

bool LabeledGraph::has_edge(std::size_t i, std::size_t j) const {
  auto const& v = adj_.at(i);
  return std::binary_search(v.begin(), v.end(), static_cast<std::uint32_t>(j));
}

std::vector<std::pair<std::size_t, std::size_t>> LabeledGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < adj_.size(); ++i)
    for (auto j : adj_[i])
      if (j > i) out.emplace_back(i, j);
  return out;
}

std::vector<double> LabeledGraph::dense_adjacency() const {
  const std::size_t n = adj_.size();
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : adj_[i]) a[i * n + j] = 1.0;
  return a;
}

void LabeledGraph::set_labels(Labels labels) {
  if (!labels.empty() && labels.size() != adj_.size())
    throw graph_error("set_labels: " + std::to_string(labels.size()) + " labels for " +
                      std::to_string(adj_.size()) + " nodes");
  labels_ = canonicalize(labels);
}

std::size_t LabeledGraph::n_clusters() const { return count_clusters(labels_); }

void LabeledGraph::set_features(std::size_t dim, std::vector<double> values) {
  if (values.size() != dim * adj_.size()) throw graph_error("set_features: size mismatch");
  feature_dim_ = dim;
  features_ = std::move(values);
}

LabeledGraph LabeledGraph::induced(std::span<const std::size_t> keep) const {
  const std::size_t n = adj_.size();
  std::vector<std::int64_t> where(n, -1);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (keep[k] >= n || where[keep[k]] >= 0) throw graph_error("induced: invalid node selection");
    where[keep[k]] = static_cast<std::int64_t>(k);
  }
  LabeledGraph g(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    for (auto j : adj_[keep[k]])
      if (where[j] >= 0) g.adj_[k].push_back(static_cast<std::uint32_t>(where[j]));
    std::sort(g.adj_[k].begin(), g.adj_[k].end());
  }
  if (!labels_.empty()) {
    Labels l(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) l[k] = labels_[keep[k]];
    g.labels_ = canonicalize(l);
  }
  if (feature_dim_ > 0) {
    std::vector<double> f(keep.size() * feature_dim_);
    for (std::size_t k = 0; k < keep.size(); ++k)
      std::copy_n(features_.begin() + static_cast<std::ptrdiff_t>(keep[k] * feature_dim_), feature_dim_,
                  f.begin() + static_cast<std::ptrdiff_t>(k * feature_dim_));
    g.feature_dim_ = feature_dim_;
    g.features_ = std::move(f);
  }
  g.meta_ = meta_;
  return g;
}

void LabeledGraph::validate() const {
  const std::size_t n = adj_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::is_sorted(adj_[i].begin(), adj_[i].end())) throw graph_error("validate: unsorted adjacency");
    for (std::size_t k = 0; k < adj_[i].size(); ++k) {
      const std::size_t j = adj_[i][k];
      if (j >= n) throw graph_error("validate: neighbor out of range");
      if (j == i) throw graph_error("validate: nonzero diagonal at node " + std::to_string(i));
      if (k > 0 && adj_[i][k - 1] == j) throw graph_error("validate: repeated neighbor");
      if (!has_edge(j, i)) throw graph_error("validate: asymmetric adjacency");
    }
  }
  if (!labels_.empty()) {
    if (labels_.size() != n) throw graph_error("validate: label count mismatch");
    if (!is_canonical(labels_)) throw graph_error("validate: labels not canonical");
  }
  if (features_.size() != feature_dim_ * n) throw graph_error("validate: feature size mismatch");
}

Labels canonicalize(std::span<const int> labels) {
  std::unordered_map<int, int> map;
  Labels out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = map.try_emplace(labels[i], static_cast<int>(map.size()) + 1);
    out[i] = it->second;
  }
  return out;
}

bool is_canonical(std::span<const int> labels) {
  int next = 1;
  for (int l : labels) {
    if (l < 1 || l > next) return false;
    if (l == next) ++next;
  }
  return true;
}

std::size_t count_clusters(std::span<const int> labels) {
  std::vector<int> v(labels.begin(), labels.end());
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

ClusterSets labels_to_sets(std::span<const int> labels) {
  const Labels c = canonicalize(labels);
  ClusterSets sets(count_clusters(c));
  for (std::size_t i = 0; i < c.size(); ++i) sets[static_cast<std::size_t>(c[i] - 1)].push_back(i);
  return sets;
}

Labels sets_to_labels(const ClusterSets& sets) {
  std::size_t n = 0;
  for (auto const& s : sets) n += s.size();
  validate_sets(sets, n);
  Labels l(n, 0);
  for (std::size_t k = 0; k < sets.size(); ++k)
    for (auto i : sets[k]) l[i] = static_cast<int>(k) + 1;
  return canonicalize(l);
}

void validate_sets(const ClusterSets& sets, std::size_t n) {
  std::vector<char> seen(n, 0);
  std::size_t total = 0;
  for (auto const& s : sets) {
    if (s.empty()) throw graph_error("cluster sets: empty cluster");
    for (auto i : s) {
      if (i >= n) throw graph_error("cluster sets: index " + std::to_string(i) + " out of range");
      if (seen[i]) throw graph_error("cluster sets: node " + std::to_string(i) + " in two clusters");
      seen[i] = 1;
      ++total;
    }
  }
  if (total != n) throw graph_error("cluster sets: partition does not cover all nodes");
}

}  // namespace acd
