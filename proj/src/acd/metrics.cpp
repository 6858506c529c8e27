#include "acd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace acd {

namespace {

void check_lengths(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size())
    throw metric_error("labelings differ in length: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  if (a.empty()) throw metric_error("empty labelings");
}

double entropy(std::span<const std::size_t> sums, double n) {
  double h = 0;
  for (auto s : sums)
    if (s > 0) {
      double p = static_cast<double>(s) / n;
      h -= p * std::log(p);
    }
  return h;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

ContingencyTable ContingencyTable::from(std::span<const int> a, std::span<const int> b) {
  check_lengths(a, b);
  std::map<int, std::size_t> ra, cb;
  for (int v : a) ra.emplace(v, ra.size());
  for (int v : b) cb.emplace(v, cb.size());
  ContingencyTable t;
  t.rows = ra.size();
  t.cols = cb.size();
  t.total = a.size();
  t.counts.assign(t.rows * t.cols, 0);
  t.row_sums.assign(t.rows, 0);
  t.col_sums.assign(t.cols, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t r = ra[a[i]], c = cb[b[i]];
    ++t.counts[r * t.cols + c];
    ++t.row_sums[r];
    ++t.col_sums[c];
  }
  return t;
}

double mutual_information(const ContingencyTable& t) {
  const double n = static_cast<double>(t.total);
  double mi = 0;
  for (std::size_t r = 0; r < t.rows; ++r)
    for (std::size_t c = 0; c < t.cols; ++c) {
      double nij = static_cast<double>(t.at(r, c));
      if (nij > 0)
        mi += nij / n * std::log(n * nij / (static_cast<double>(t.row_sums[r]) * static_cast<double>(t.col_sums[c])));
    }
  return std::max(mi, 0.0);
}

double expected_mutual_information(const ContingencyTable& t) {
  const std::size_t n = t.total;
  const double nd = static_cast<double>(n);
  std::vector<double> lf(n + 1, 0.0);  // log factorials
  for (std::size_t i = 1; i <= n; ++i) lf[i] = lf[i - 1] + std::log(static_cast<double>(i));
  double emi = 0;
  for (auto ai : t.row_sums)
    for (auto bj : t.col_sums) {
      const std::size_t lo = ai + bj > n ? ai + bj - n : 1;
      const std::size_t hi = std::min(ai, bj);
      for (std::size_t nij = std::max<std::size_t>(lo, 1); nij <= hi; ++nij) {
        const double x = static_cast<double>(nij);
        double term = x / nd * std::log(nd * x / (static_cast<double>(ai) * static_cast<double>(bj)));
        double logp = lf[ai] + lf[bj] + lf[n - ai] + lf[n - bj] - lf[n] - lf[nij] - lf[ai - nij] - lf[bj - nij] -
                      lf[n - ai - bj + nij];
        emi += term * std::exp(logp);
      }
    }
  return emi;
}

double ami_raw(std::span<const int> a, std::span<const int> b) {
  ContingencyTable t = ContingencyTable::from(a, b);
  // Both labelings trivial (one class each, or every point its own class): identical partitions.
  if ((t.rows == 1 && t.cols == 1) || (t.rows == t.total && t.cols == t.total)) return 1.0;
  const double n = static_cast<double>(t.total);
  const double mi = mutual_information(t);
  const double emi = expected_mutual_information(t);
  const double norm = 0.5 * (entropy(t.row_sums, n) + entropy(t.col_sums, n));
  double denom = norm - emi;
  if (std::abs(denom) < 1e-15) return mi - emi >= 0 ? 1.0 : 0.0;
  return (mi - emi) / denom;
}

double ami(std::span<const int> a, std::span<const int> b) { return std::clamp(ami_raw(a, b), 0.0, 1.0); }

double ari(std::span<const int> a, std::span<const int> b) {
  ContingencyTable t = ContingencyTable::from(a, b);
  double sum_ij = 0, sum_a = 0, sum_b = 0;
  for (auto c : t.counts) sum_ij += choose2(static_cast<double>(c));
  for (auto c : t.row_sums) sum_a += choose2(static_cast<double>(c));
  for (auto c : t.col_sums) sum_b += choose2(static_cast<double>(c));
  const double pairs = choose2(static_cast<double>(t.total));
  if (pairs == 0) return 1.0;
  const double expected = sum_a * sum_b / pairs;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both partitions trivial in the same way
  return (sum_ij - expected) / (max_index - expected);
}

CalibrationReport ece(const std::vector<std::vector<std::size_t>>& sampled_k, std::span<const std::size_t> true_k,
                      std::size_t n_bins) {
  if (n_bins < 1) throw metric_error("ece: need at least one bin");
  if (sampled_k.size() != true_k.size()) throw metric_error("ece: graph count mismatch");
  CalibrationReport rep;
  rep.n = sampled_k.size();
  rep.bins.resize(n_bins);
  std::vector<double> acc_sum(n_bins, 0.0), conf_sum(n_bins, 0.0);
  for (std::size_t b = 0; b < n_bins; ++b) {
    rep.bins[b].lo = static_cast<double>(b) / static_cast<double>(n_bins);
    rep.bins[b].hi = static_cast<double>(b + 1) / static_cast<double>(n_bins);
  }
  for (std::size_t g = 0; g < sampled_k.size(); ++g) {
    auto const& ks = sampled_k[g];
    if (ks.empty()) throw metric_error("ece: graph " + std::to_string(g) + " has no samples");
    std::map<std::size_t, std::size_t> freq;
    for (auto k : ks) ++freq[k];
    std::size_t mode = 0, best = 0;
    for (auto [k, c] : freq)
      if (c > best) {
        best = c;
        mode = k;
      }
    const double conf = static_cast<double>(best) / static_cast<double>(ks.size());
    // Bin m covers (m/M, (m+1)/M].
    auto b = static_cast<std::size_t>(std::ceil(conf * static_cast<double>(n_bins) - 1e-12));
    b = std::clamp<std::size_t>(b, 1, n_bins) - 1;
    ++rep.bins[b].count;
    conf_sum[b] += conf;
    acc_sum[b] += mode == true_k[g] ? 1.0 : 0.0;
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& bin = rep.bins[b];
    if (bin.count == 0) continue;
    bin.accuracy = acc_sum[b] / static_cast<double>(bin.count);
    bin.confidence = conf_sum[b] / static_cast<double>(bin.count);
    rep.ece += static_cast<double>(bin.count) / static_cast<double>(rep.n) * std::abs(bin.accuracy - bin.confidence);
  }
  return rep;
}

std::size_t map_index(std::span<const PosteriorSample> samples) {
  if (samples.empty()) throw metric_error("map_select: no samples");
  std::size_t best = 0;
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].score > samples[best].score) best = i;
  return best;
}

const PosteriorSample& map_select(std::span<const PosteriorSample> samples) { return samples[map_index(samples)]; }

KStats uncertainty_stats(std::span<const PosteriorSample> samples) {
  if (samples.empty()) throw metric_error("uncertainty_stats: no samples");
  double s = 0, s2 = 0;
  for (auto const& p : samples) {
    double k = static_cast<double>(count_clusters(p.labels));
    s += k;
    s2 += k * k;
  }
  const double n = static_cast<double>(samples.size());
  KStats out;
  out.mean = s / n;
  out.std = std::sqrt(std::max(0.0, s2 / n - out.mean * out.mean));
  return out;
}

}  // namespace acd
