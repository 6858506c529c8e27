#pragma once

#include "acd/graph.hpp"
#include "acd/nn.hpp"
#include "acd/rng.hpp"

#include <span>
#include <vector>

namespace acd {

struct PosEncConfig {
  std::size_t m = 20;
};

/// L = I - D^{-1/2} A D^{-1/2}, row-major N x N; isolated nodes get D^{-1/2} = 0.
std::vector<double> normalized_laplacian(const LabeledGraph& g);

struct SymmetricEigen {
  std::size_t n = 0;
  std::vector<double> values;   ///< ascending
  std::vector<double> vectors;  ///< row-major N x N, column j pairs with values[j]
  int sweeps = 0;
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below `tol`.
SymmetricEigen jacobi_eigensolver(std::span<const double> a, std::size_t n, double tol = 1e-10,
                                  int max_sweeps = 100);

/// N x m matrix of the Laplacian eigenvectors following the smallest one.
/// Missing columns (N - 1 < m) are zero. Eval mode makes each column's first
/// nonzero entry positive; train mode additionally flips each column's sign at random.
std::vector<double> laplacian_pos_enc(const LabeledGraph& g, const PosEncConfig& config, Rng* rng, Mode mode);

/// Flips each column of a row-major N x m matrix with probability 1/2.
void random_sign_flip(std::vector<double>& enc, std::size_t n, std::size_t m, Rng& rng);

/// N x dim matrix of independent standard normals.
std::vector<double> random_features(std::size_t n, std::size_t dim, Rng& rng);

}  // namespace acd
