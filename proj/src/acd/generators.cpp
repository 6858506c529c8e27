#include "acd/generators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace acd {

namespace {
std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}
}  // namespace

void GeneralSbmConfig::validate() const {
  if (n_min < 1 || n_max < n_min) throw std::invalid_argument("general-sbm: empty N range");
  if (!(alpha > 0)) throw std::invalid_argument("general-sbm: alpha must be positive");
  if (!(within_a > 0 && within_b > 0 && between_a > 0 && between_b > 0))
    throw std::invalid_argument("general-sbm: Beta parameters must be positive");
  if (min_community_size < 1) throw std::invalid_argument("general-sbm: min_community_size must be >= 1");
}

double SymmetricSbmConfig::p() const { return a * std::log(static_cast<double>(n)) / n; }
double SymmetricSbmConfig::q() const { return b * std::log(static_cast<double>(n)) / n; }

void SymmetricSbmConfig::validate() const {
  if (n < 1 || k < 1) throw std::invalid_argument("sym-sbm: n and k must be positive");
  if (n % k != 0)
    throw std::invalid_argument("sym-sbm: k=" + std::to_string(k) + " does not divide n=" + std::to_string(n));
  if (a < 0 || b < 0) throw std::invalid_argument("sym-sbm: a and b must be nonnegative");
  if (p() > 1.0) throw std::invalid_argument("sym-sbm: within probability p=" + fmt(p()) + " exceeds 1");
  if (q() > 1.0) throw std::invalid_argument("sym-sbm: between probability q=" + fmt(q()) + " exceeds 1");
}

void SymmetricSbmFamily::validate() const {
  if (n_min < 1 || n_max < n_min) throw std::invalid_argument("sym-sbm family: empty N range");
  if (k_values.empty()) throw std::invalid_argument("sym-sbm family: no k values");
  for (int k : k_values) {
    if (k < 1) throw std::invalid_argument("sym-sbm family: k must be positive");
    if (n_max / k < (n_min + k - 1) / k)
      throw std::invalid_argument("sym-sbm family: no multiple of k=" + std::to_string(k) + " in N range");
  }
  if (a_min < 0 || a_max < a_min || b_min < 0 || b_max < b_min)
    throw std::invalid_argument("sym-sbm family: invalid a/b ranges");
  if (!log_scaling && (a_max > 1.0 || b_max > 1.0))
    throw std::invalid_argument("sym-sbm family: direct probabilities must be <= 1");
  if (above_threshold) {
    if (!log_scaling) throw std::invalid_argument("sym-sbm family: above_threshold needs log_scaling");
    for (int k : k_values)
      if (std::sqrt(a_max) - std::sqrt(b_min) <= std::sqrt(static_cast<double>(k)))
        throw std::invalid_argument("sym-sbm family: no (a, b) in range lies above the threshold for k=" +
                                    std::to_string(k));
  }
}

Labels sample_crp(std::size_t n, double alpha, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_crp: n must be >= 1");
  if (!(alpha > 0)) throw std::invalid_argument("sample_crp: alpha must be positive");
  Labels labels;
  labels.reserve(n);
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < n; ++i) {
    const double total = static_cast<double>(i) + alpha;
    double u = rng.uniform() * total;
    std::size_t k = 0;
    for (; k < counts.size(); ++k) {
      u -= static_cast<double>(counts[k]);
      if (u < 0) break;
    }
    if (k == counts.size()) counts.push_back(0);
    ++counts[k];
    labels.push_back(static_cast<int>(k) + 1);
  }
  return labels;
}

double crp_log_eppf(std::span<const std::size_t> sizes, double alpha) {
  std::size_t n = 0;
  double lp = static_cast<double>(sizes.size()) * std::log(alpha);
  for (auto s : sizes) {
    lp += std::lgamma(static_cast<double>(s));
    n += s;
  }
  for (std::size_t i = 1; i <= n; ++i) lp -= std::log(static_cast<double>(i) - 1.0 + alpha);
  return lp;
}

LabeledGraph sample_sbm_edges(std::span<const int> labels, std::span<const double> phi, std::size_t k, Rng& rng) {
  if (phi.size() != k * k) throw std::invalid_argument("sample_sbm_edges: phi must be K x K");
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) {
      const double v = phi[r * k + c];
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("sample_sbm_edges: phi[" + std::to_string(r) + "][" + std::to_string(c) +
                                    "]=" + fmt(v) + " outside [0,1]");
      if (v != phi[c * k + r]) throw std::invalid_argument("sample_sbm_edges: phi is not symmetric");
    }
  const std::size_t n = labels.size();
  for (int l : labels)
    if (l < 1 || static_cast<std::size_t>(l) > k) throw std::invalid_argument("sample_sbm_edges: label out of range");
  LabeledGraph g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(phi[static_cast<std::size_t>(labels[i] - 1) * k + static_cast<std::size_t>(labels[j] - 1)]))
        g.add_edge(i, j);
  g.set_labels(Labels(labels.begin(), labels.end()));
  return g;
}

LabeledGraph remove_small_communities(const LabeledGraph& g, std::size_t min_size) {
  if (!g.has_labels()) throw graph_error("remove_small_communities: graph has no labels");
  const auto sets = labels_to_sets(g.labels());
  std::vector<char> keep_cluster(sets.size());
  for (std::size_t k = 0; k < sets.size(); ++k) keep_cluster[k] = sets[k].size() >= min_size;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < g.n_nodes(); ++i)
    if (keep_cluster[static_cast<std::size_t>(g.labels()[i] - 1)]) keep.push_back(i);
  return g.induced(keep);
}

LabeledGraph gen_general_sbm(const GeneralSbmConfig& config, Rng& rng) {
  config.validate();
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const auto n = static_cast<std::size_t>(rng.integer(config.n_min, config.n_max));
    const Labels labels = sample_crp(n, config.alpha, rng);
    const std::size_t k = count_clusters(labels);
    std::vector<double> phi(k * k);
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t c = r; c < k; ++c) {
        const double v = r == c ? rng.beta(config.within_a, config.within_b)
                                : rng.beta(config.between_a, config.between_b);
        phi[r * k + c] = phi[c * k + r] = v;
      }
    LabeledGraph g = remove_small_communities(sample_sbm_edges(labels, phi, k, rng),
                                              static_cast<std::size_t>(config.min_community_size));
    if (g.n_nodes() > 0) return g;
  }
  throw graph_error("gen_general_sbm: every community fell below the minimum size in " +
                    std::to_string(kMaxAttempts) + " attempts");
}

LabeledGraph gen_planted_partition(int n, int k, double p, double q, Rng& rng) {
  if (n < 1 || k < 1 || n % k != 0) throw std::invalid_argument("planted partition: k must divide n");
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("planted partition: p=" + fmt(p) + " outside [0,1]");
  if (!(q >= 0 && q <= 1)) throw std::invalid_argument("planted partition: q=" + fmt(q) + " outside [0,1]");
  Labels labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i / (n / k) + 1;
  rng.shuffle(labels);
  // Block ids are kept as drawn (not canonical) so phi indexing stays valid.
  std::vector<double> phi(static_cast<std::size_t>(k * k), q);
  for (int r = 0; r < k; ++r) phi[static_cast<std::size_t>(r * k + r)] = p;
  return sample_sbm_edges(labels, phi, static_cast<std::size_t>(k), rng);
}

LabeledGraph gen_symmetric_log_sbm(const SymmetricSbmConfig& config, Rng& rng) {
  config.validate();
  LabeledGraph g = gen_planted_partition(config.n, config.k, config.p(), config.q(), rng);
  g.meta()["a"] = config.a;
  g.meta()["b"] = config.b;
  g.meta()["k"] = config.k;
  return g;
}

LabeledGraph gen_symmetric_family(const SymmetricSbmFamily& family, Rng& rng) {
  family.validate();
  const int k = family.k_values[rng.index(family.k_values.size())];
  const int lo = (family.n_min + k - 1) / k, hi = family.n_max / k;
  const int n = k * static_cast<int>(rng.integer(lo, hi));
  // Large a at small N would push p past 1; cap at probability 1.
  const double cap = family.log_scaling ? static_cast<double>(n) / std::log(static_cast<double>(n)) : INFINITY;
  if (family.above_threshold &&
      std::sqrt(std::min(family.a_max, cap)) - std::sqrt(std::min(family.b_min, cap)) <= std::sqrt(static_cast<double>(k)))
    throw std::invalid_argument("sym-sbm family: no (a, b) above the threshold at N=" + std::to_string(n));
  double a = 0, b = 0;
  do {
    a = std::min(rng.uniform(family.a_min, family.a_max), cap);
    b = std::min(rng.uniform(family.b_min, family.b_max), cap);
  } while (family.above_threshold && std::sqrt(a) - std::sqrt(b) <= std::sqrt(static_cast<double>(k)));
  if (family.log_scaling) {
    SymmetricSbmConfig c{n, k, a, b};
    // a log(N)/N can round just past 1 at the cap.
    while (c.p() > 1.0) c.a = std::nextafter(c.a, 0.0);
    while (c.q() > 1.0) c.b = std::nextafter(c.b, 0.0);
    return gen_symmetric_log_sbm(c, rng);
  }
  LabeledGraph g = gen_planted_partition(n, k, a, b, rng);
  g.meta()["p"] = a;
  g.meta()["q"] = b;
  g.meta()["k"] = k;
  return g;
}

double modularity(const LabeledGraph& g, std::span<const int> labels) {
  const double m = static_cast<double>(g.n_edges());
  if (m == 0) return 0.0;
  const std::size_t k = count_clusters(labels);
  const Labels c = canonicalize(labels);
  std::vector<double> inside(k, 0.0), degree(k, 0.0);
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    const auto ci = static_cast<std::size_t>(c[i] - 1);
    degree[ci] += static_cast<double>(g.degree(i));
    for (auto j : g.neighbors(i))
      if (c[j] == c[i]) inside[ci] += 1.0;
  }
  double qv = 0.0;
  for (std::size_t r = 0; r < k; ++r) qv += inside[r] / (2 * m) - (degree[r] / (2 * m)) * (degree[r] / (2 * m));
  return qv;
}

}  // namespace acd
