#pragma once

#include "inrc/siren.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace inrc {

/// Ordered, shape-congruent trainable weight sets theta_1..theta_N.
class ThetaBank {
 public:
  ThetaBank() = default;
  explicit ThetaBank(std::vector<WeightSet> sets);

  std::size_t size() const { return sets_.size(); }
  const NetworkArch& arch() const;
  const WeightSet& operator[](std::size_t j) const { return sets_.at(j); }
  WeightSet& operator[](std::size_t j) { return sets_.at(j); }
  const std::vector<WeightSet>& sets() const { return sets_; }

  bool operator==(const ThetaBank&) const = default;

 private:
  std::vector<WeightSet> sets_;
};

/// Fixed combiner: row i of `alpha` (M x N) mixes the bank into the weights
/// of image i; `gamma` (length M) weights each image's loss.
struct CombinerSpec {
  Eigen::MatrixXd alpha;
  Eigen::VectorXd gamma;

  Eigen::Index images() const { return alpha.rows(); }
  Eigen::Index weight_sets() const { return alpha.cols(); }
};

/// Checks M >= N >= 1, finite alpha, gamma in (0, 1] summing to 1 within
/// `gamma_tol` (a single gamma of 1 is only legal when M == 1).
void validate(const CombinerSpec& spec, double gamma_tol = 1e-9);

/// Uniform gamma = 1/M.
Eigen::VectorXd uniform_gamma(Eigen::Index m);

/// Endpoint interpolation: row i (1-based) is ((M-i)/(M-1), (i-1)/(M-1)).
/// N == 1 yields a column of ones (every image shares theta_1). Any other N
/// throws Errc::unsupported_combiner.
CombinerSpec default_combiner(int n_weights, int m_images);

/// sum_j alpha_j theta_j, elementwise.
WeightSet combine(const ThetaBank& bank, std::span<const double> alpha_row);
WeightSet combine(const ThetaBank& bank, const Eigen::VectorXd& alpha_row);

/// Chain rule back to theta space: out_j = sum_i alpha_ij gamma_i g_i,
/// accumulated in image-index order.
std::vector<GradientSet> aggregate_grads(const std::vector<GradientSet>& per_image,
                                         const CombinerSpec& spec);

struct ImageDims {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t values() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  bool operator==(const ImageDims&) const = default;
};

/// Bits per pixel of the stored weight sets: N P B_P / (M H W C).
double bpp(const NetworkArch& arch, int n_weights, int m_images, const ImageDims& dims,
           int bits_per_param);

}  // namespace inrc
