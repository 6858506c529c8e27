#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace acd {

/// Cluster labels: 1-based positive integers, one per node.
using Labels = std::vector<int>;

/// Partition as K disjoint sets of 0-based node indices. Canonical form keeps
/// each set sorted and orders sets by their minimum element.
using ClusterSets = std::vector<std::vector<std::size_t>>;

class graph_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Undirected simple graph with optional ground-truth labels and node features.
class LabeledGraph {
 public:
  LabeledGraph() = default;
  explicit LabeledGraph(std::size_t n) : adj_(n) {}

  std::size_t n_nodes() const { return adj_.size(); }
  std::size_t n_edges() const;

  /// Adds {i, j}; self loops and duplicate edges are rejected.
  void add_edge(std::size_t i, std::size_t j);
  bool has_edge(std::size_t i, std::size_t j) const;
  std::span<const std::uint32_t> neighbors(std::size_t i) const { return adj_.at(i); }
  std::size_t degree(std::size_t i) const { return adj_.at(i).size(); }
  /// Edges as (i, j) pairs with i < j, sorted lexicographically.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
  /// Dense symmetric 0/1 adjacency, row-major N x N.
  std::vector<double> dense_adjacency() const;

  bool has_labels() const { return !labels_.empty(); }
  const Labels& labels() const { return labels_; }
  /// Stores labels in canonical form.
  void set_labels(Labels labels);
  std::size_t n_clusters() const;

  bool has_features() const { return feature_dim_ > 0; }
  std::size_t feature_dim() const { return feature_dim_; }
  const std::vector<double>& features() const { return features_; }
  void set_features(std::size_t dim, std::vector<double> values);

  /// Free-form numeric metadata (generator parameters, source ids).
  std::map<std::string, double>& meta() { return meta_; }
  const std::map<std::string, double>& meta() const { return meta_; }

  /// Induced subgraph on `keep` (new node i is old node keep[i]); labels and
  /// features follow, labels re-canonicalized.
  LabeledGraph induced(std::span<const std::size_t> keep) const;
  /// Relabels nodes so new node i is old node perm[i].
  LabeledGraph permuted(std::span<const std::size_t> perm) const { return induced(perm); }

  /// Throws graph_error when a structural invariant is violated.
  void validate() const;

  bool operator==(const LabeledGraph& o) const = default;

 private:
  std::vector<std::vector<std::uint32_t>> adj_;
  Labels labels_;
  std::size_t feature_dim_ = 0;
  std::vector<double> features_;
  std::map<std::string, double> meta_;
};

/// Relabels so first occurrences read 1, 2, 3, ... in node order. Any
/// integers are accepted; equal inputs map to equal outputs.
Labels canonicalize(std::span<const int> labels);
bool is_canonical(std::span<const int> labels);
std::size_t count_clusters(std::span<const int> labels);

ClusterSets labels_to_sets(std::span<const int> labels);
Labels sets_to_labels(const ClusterSets& sets);
/// Throws graph_error unless sets are disjoint, non-empty, and cover 0..n-1.
void validate_sets(const ClusterSets& sets, std::size_t n);

}  // namespace acd
