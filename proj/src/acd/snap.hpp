#pragma once

#include "acd/graph.hpp"
#include "acd/rng.hpp"

#include <filesystem>
#include <unordered_map>
#include <vector>

namespace acd {

/// Fractions of communities assigned to train / validation / test.
struct SnapSplitSpec {
  double train = 0.6;
  double val = 0.1;
  double test = 0.3;
};

struct SnapConstraints {
  /// Tuple sizes to extract; a fixed-K dataset uses k_min == k_max.
  int k_min = 2;
  int k_max = 4;
  /// Pairwise: min_union < |Ci u Cj| < max_union and each size < max_ratio x the other.
  std::size_t min_union = 20;
  std::size_t max_union = 500;
  double max_ratio = 20.0;
  /// Maximum graphs kept per split (train, val, test); 0 means unlimited.
  std::size_t max_train = 0, max_val = 0, max_test = 0;
  /// Upper bound on enumerated candidate cliques per split.
  std::size_t max_candidates = 500000;
};

using Community = std::vector<std::int64_t>;  // sorted node ids

struct SnapNetwork {
  std::unordered_map<std::int64_t, std::vector<std::int64_t>> adj;
};

struct SnapSplits {
  std::vector<LabeledGraph> train, val, test;
};

SnapNetwork read_snap_edges(const std::filesystem::path& path);
std::vector<Community> read_snap_communities(const std::filesystem::path& path);

/// Non-overlap plus the size and imbalance constraints.
bool compatible_pair(const Community& a, const Community& b, const SnapConstraints& c);

/// All cliques with between min_size and max_size vertices of an undirected
/// graph given as sorted adjacency lists, each clique listed once in
/// increasing vertex order.
std::vector<std::vector<std::size_t>> enumerate_cliques(const std::vector<std::vector<std::size_t>>& adj,
                                                        std::size_t min_size, std::size_t max_size,
                                                        std::size_t limit = 0);

/// Induced subgraph over the union of the communities, labeled by membership.
/// Nodes are ordered by ascending id. Returns false if the subgraph is disconnected.
bool build_community_subgraph(const SnapNetwork& net, const std::vector<const Community*>& tuple,
                              LabeledGraph& out);

SnapSplits extract_snap_subgraphs(const std::filesystem::path& edge_file,
                                  const std::filesystem::path& community_file, const SnapSplitSpec& split,
                                  const SnapConstraints& constraints, Rng& rng);

/// Same as above on already-parsed inputs.
SnapSplits extract_snap_subgraphs(const SnapNetwork& net, std::vector<Community> communities,
                                  const SnapSplitSpec& split, const SnapConstraints& constraints, Rng& rng);

}  // namespace acd
