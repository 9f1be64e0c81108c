#include "inrc/weight_space.hpp"

#include <cmath>
#include <string>

namespace inrc {

ThetaBank::ThetaBank(std::vector<WeightSet> sets) : sets_(std::move(sets)) {
  if (sets_.empty()) throw Error(Errc::invalid_argument, "theta bank needs at least one weight set");
  for (const auto& s : sets_) {
    if (!s.congruent(sets_.front())) {
      throw Error(Errc::shape_mismatch, "theta bank members must share one architecture");
    }
  }
}

const NetworkArch& ThetaBank::arch() const {
  if (sets_.empty()) throw Error(Errc::invalid_argument, "empty theta bank");
  return sets_.front().arch();
}

void validate(const CombinerSpec& spec, double gamma_tol) {
  const Eigen::Index m = spec.images();
  const Eigen::Index n = spec.weight_sets();
  if (n < 1 || m < n) {
    throw Error(Errc::invalid_argument, "combiner needs M >= N >= 1, got M=" + std::to_string(m) +
                                            " N=" + std::to_string(n));
  }
  if (!spec.alpha.allFinite()) throw Error(Errc::invalid_argument, "combiner alpha must be finite");
  if (spec.gamma.size() != m) {
    throw Error(Errc::invalid_argument, "gamma length " + std::to_string(spec.gamma.size()) +
                                            " does not match M=" + std::to_string(m));
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const double g = spec.gamma(i);
    const bool upper_ok = m == 1 ? g <= 1.0 + gamma_tol : g < 1.0;
    if (!(g > 0.0) || !upper_ok) {
      throw Error(Errc::invalid_argument, "gamma[" + std::to_string(i) + "] = " + std::to_string(g) +
                                              " is outside (0, 1)");
    }
  }
  const double total = spec.gamma.sum();
  if (std::abs(total - 1.0) > gamma_tol) {
    throw Error(Errc::invalid_argument, "gamma sums to " + std::to_string(total) + ", not 1");
  }
}

Eigen::VectorXd uniform_gamma(Eigen::Index m) {
  if (m < 1) throw Error(Errc::invalid_argument, "uniform gamma needs M >= 1");
  return Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
}

CombinerSpec default_combiner(int n_weights, int m_images) {
  if (m_images < 1) throw Error(Errc::invalid_argument, "M must be positive");
  CombinerSpec spec;
  spec.gamma = uniform_gamma(m_images);
  if (n_weights == 1) {
    spec.alpha = Eigen::MatrixXd::Ones(m_images, 1);
    return spec;
  }
  if (n_weights != 2) {
    throw Error(Errc::unsupported_combiner,
                "no default combiner for N=" + std::to_string(n_weights) +
                    "; supply an explicit M x N combiner matrix");
  }
  if (m_images < 2) {
    throw Error(Errc::invalid_argument, "N=2 needs at least two images, got M=" +
                                            std::to_string(m_images));
  }
  spec.alpha.resize(m_images, 2);
  const double denom = static_cast<double>(m_images - 1);
  for (int i = 1; i <= m_images; ++i) {
    spec.alpha(i - 1, 0) = static_cast<double>(m_images - i) / denom;
    spec.alpha(i - 1, 1) = static_cast<double>(i - 1) / denom;
  }
  return spec;
}

WeightSet combine(const ThetaBank& bank, std::span<const double> alpha_row) {
  if (bank.size() == 0) throw Error(Errc::invalid_argument, "empty theta bank");
  if (alpha_row.size() != bank.size()) {
    throw Error(Errc::shape_mismatch, "alpha row has " + std::to_string(alpha_row.size()) +
                                          " entries for " + std::to_string(bank.size()) +
                                          " weight sets");
  }
  WeightSet out(bank.arch());
  for (std::size_t j = 0; j < bank.size(); ++j) {
    out.values() += alpha_row[j] * bank[j].values();
  }
  return out;
}

WeightSet combine(const ThetaBank& bank, const Eigen::VectorXd& alpha_row) {
  return combine(bank, std::span<const double>(alpha_row.data(), static_cast<std::size_t>(alpha_row.size())));
}

std::vector<GradientSet> aggregate_grads(const std::vector<GradientSet>& per_image,
                                         const CombinerSpec& spec) {
  const auto m = static_cast<std::size_t>(spec.images());
  const auto n = static_cast<std::size_t>(spec.weight_sets());
  if (per_image.size() != m || static_cast<std::size_t>(spec.gamma.size()) != m) {
    throw Error(Errc::shape_mismatch, "expected " + std::to_string(m) + " per-image gradients, got " +
                                          std::to_string(per_image.size()));
  }
  if (m == 0) return {};
  for (const auto& g : per_image) {
    if (!g.congruent(per_image.front())) {
      throw Error(Errc::shape_mismatch, "per-image gradients are not congruent");
    }
  }
  std::vector<GradientSet> out(n, GradientSet(per_image.front().arch()));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      const double coeff = spec.alpha(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                           spec.gamma(static_cast<Eigen::Index>(i));
      if (coeff == 0.0) continue;
      out[j].values() += coeff * per_image[i].values();
    }
  }
  return out;
}

double bpp(const NetworkArch& arch, int n_weights, int m_images, const ImageDims& dims,
           int bits_per_param) {
  const double numerator = static_cast<double>(n_weights) * static_cast<double>(param_count(arch)) *
                           static_cast<double>(bits_per_param);
  const double denominator = static_cast<double>(m_images) * static_cast<double>(dims.values());
  return numerator / denominator;
}

}  // namespace inrc
