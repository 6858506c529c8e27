#pragma once

#include "acd/graph.hpp"
#include "acd/rng.hpp"

#include <vector>

namespace acd {

struct GeneralSbmConfig {
  int n_min = 50;
  int n_max = 350;
  double alpha = 3.0;
  double within_a = 6.0;
  double within_b = 4.0;
  double between_a = 1.0;
  double between_b = 7.0;
  int min_community_size = 5;

  void validate() const;
};

/// Equal-size communities with p = a log(N)/N within and q = b log(N)/N
/// between communities.
struct SymmetricSbmConfig {
  int n = 300;
  int k = 2;
  double a = 15.0;
  double b = 5.0;

  double p() const;
  double q() const;
  void validate() const;
};

/// Sampling distribution over symmetric SBMs used to build training sets.
/// With `log_scaling` off, a and b are used directly as p and q.
struct SymmetricSbmFamily {
  int n_min = 300;
  int n_max = 600;
  std::vector<int> k_values{2, 3, 4};
  double a_min = 1.0, a_max = 30.0;
  double b_min = 1.0, b_max = 10.0;
  bool log_scaling = true;
  /// Redraw (a, b) until sqrt(a) - sqrt(b) > sqrt(k).
  bool above_threshold = false;

  void validate() const;
};

/// Chinese restaurant process draw; point n joins cluster k with probability
/// n_k / (n - 1 + alpha) or opens a new one with alpha / (n - 1 + alpha).
Labels sample_crp(std::size_t n, double alpha, Rng& rng);

/// Order-free probability of a partition with the given cluster sizes under CRP(alpha).
double crp_log_eppf(std::span<const std::size_t> sizes, double alpha);

/// Each pair {i, j} is an edge with probability phi[c_i - 1][c_j - 1].
/// phi is row-major K x K, symmetric, with entries in [0, 1].
LabeledGraph sample_sbm_edges(std::span<const int> labels, std::span<const double> phi, std::size_t k, Rng& rng);

/// Removes communities with fewer than `min_size` members, reindexing nodes.
LabeledGraph remove_small_communities(const LabeledGraph& g, std::size_t min_size);

LabeledGraph gen_general_sbm(const GeneralSbmConfig& config, Rng& rng);
LabeledGraph gen_symmetric_log_sbm(const SymmetricSbmConfig& config, Rng& rng);
/// Equal-size planted partition with explicit p, q (node order shuffled).
LabeledGraph gen_planted_partition(int n, int k, double p, double q, Rng& rng);
LabeledGraph gen_symmetric_family(const SymmetricSbmFamily& family, Rng& rng);

/// Newman modularity of a labeling.
double modularity(const LabeledGraph& g, std::span<const int> labels);

}  // namespace acd
