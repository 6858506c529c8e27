#include "acd/posenc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace acd {

std::vector<double> normalized_laplacian(const LabeledGraph& g) {
  const std::size_t n = g.n_nodes();
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (g.degree(i) > 0) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i)));
  std::vector<double> l(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    l[i * n + i] = 1.0;
    for (auto j : g.neighbors(i)) l[i * n + j] = -inv_sqrt[i] * inv_sqrt[j];
  }
  return l;
}

SymmetricEigen jacobi_eigensolver(std::span<const double> input, std::size_t n, double tol, int max_sweeps) {
  if (input.size() != n * n) throw dimension_error("jacobi: matrix is not N x N");
  std::vector<double> a(input.begin(), input.end());
  // vt holds eigenvectors as rows so rotations touch contiguous memory.
  std::vector<double> vt(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vt[i * n + i] = 1.0;

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a[i * n + j] * a[i * n + j];
    return std::sqrt(s);
  };

  SymmetricEigen out;
  out.n = n;
  int sweep = 0;
  for (; sweep < max_sweeps && off_norm() >= tol; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p], aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        double* rp = a.data() + p * n;
        double* rq = a.data() + q * n;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = rp[k], akq = rq[k];
          const double np = c * akp - s * akq, nq = s * akp + c * akq;
          rp[k] = np;
          rq[k] = nq;
          a[k * n + p] = np;
          a[k * n + q] = nq;
        }
        rp[p] = app - t * apq;
        rq[q] = aqq + t * apq;
        rp[q] = rq[p] = 0.0;
        double* vp = vt.data() + p * n;
        double* vq = vt.data() + q * n;
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vp[k], y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
  }
  out.sweeps = sweep;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a[i * n + i] < a[j * n + j]; });
  out.values.resize(n);
  out.vectors.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a[order[j] * n + order[j]];
    for (std::size_t k = 0; k < n; ++k) out.vectors[k * n + j] = vt[order[j] * n + k];
  }
  return out;
}

std::vector<double> laplacian_pos_enc(const LabeledGraph& g, const PosEncConfig& config, Rng* rng, Mode mode) {
  if (config.m < 1) throw std::invalid_argument("posenc: m must be >= 1");
  const std::size_t n = g.n_nodes(), m = config.m;
  std::vector<double> enc(n * m, 0.0);
  if (n == 0) return enc;
  const auto eig = jacobi_eigensolver(normalized_laplacian(g), n);
  const std::size_t take = std::min(m, n - 1);
  for (std::size_t c = 0; c < take; ++c) {
    const std::size_t src = c + 1;
    double sign = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = eig.vectors[k * n + src];
      if (std::abs(v) > 1e-12) {
        sign = v > 0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t k = 0; k < n; ++k) enc[k * m + c] = sign * eig.vectors[k * n + src];
  }
  if (mode == Mode::train) {
    if (!rng) throw std::invalid_argument("posenc: train mode needs an rng");
    random_sign_flip(enc, n, m, *rng);
  }
  return enc;
}

void random_sign_flip(std::vector<double>& enc, std::size_t n, std::size_t m, Rng& rng) {
  for (std::size_t c = 0; c < m; ++c) {
    if (rng.uniform() < 0.5) continue;
    for (std::size_t k = 0; k < n; ++k) enc[k * m + c] = -enc[k * m + c];
  }
}

std::vector<double> random_features(std::size_t n, std::size_t dim, Rng& rng) {
  std::vector<double> f(n * dim);
  for (auto& v : f) v = rng.normal();
  return f;
}

}  // namespace acd
