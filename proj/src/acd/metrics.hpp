#pragma once

#include "acd/graph.hpp"
#include "acd/heads.hpp"

#include <span>
#include <vector>

namespace acd {

class metric_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ContingencyTable {
  std::size_t rows = 0, cols = 0, total = 0;
  std::vector<std::size_t> counts;  ///< row-major rows x cols
  std::vector<std::size_t> row_sums, col_sums;

  static ContingencyTable from(std::span<const int> a, std::span<const int> b);
  std::size_t at(std::size_t r, std::size_t c) const { return counts[r * cols + c]; }
};

double mutual_information(const ContingencyTable& t);
/// Expected mutual information under the hypergeometric model of fixed margins.
double expected_mutual_information(const ContingencyTable& t);

/// Adjusted mutual information, arithmetic-mean normalization, clipped to [0, 1].
double ami(std::span<const int> a, std::span<const int> b);
/// The same without clipping.
double ami_raw(std::span<const int> a, std::span<const int> b);
/// Hubert-Arabie adjusted Rand index.
double ari(std::span<const int> a, std::span<const int> b);

struct CalibrationBin {
  double lo = 0, hi = 0;
  std::size_t count = 0;
  double accuracy = 0, confidence = 0;
};

struct CalibrationReport {
  std::vector<CalibrationBin> bins;
  double ece = 0;
  std::size_t n = 0;
};

/// Per graph the prediction is the modal sampled K (smallest on ties) and the
/// confidence its sample fraction; confidences are binned into M equal intervals of (0, 1].
CalibrationReport ece(const std::vector<std::vector<std::size_t>>& sampled_k, std::span<const std::size_t> true_k,
                      std::size_t n_bins = 10);

/// Index of the highest-scoring sample; first occurrence wins ties.
std::size_t map_index(std::span<const PosteriorSample> samples);
const PosteriorSample& map_select(std::span<const PosteriorSample> samples);

struct KStats {
  double mean = 0, std = 0;
};
/// Mean and population standard deviation of the number of clusters across samples.
KStats uncertainty_stats(std::span<const PosteriorSample> samples);

}  // namespace acd
