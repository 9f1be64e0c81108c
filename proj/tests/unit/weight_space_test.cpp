#include "inrc/trainer.hpp"
#include "inrc/weight_space.hpp"

#include "support/oracles.hpp"
#include "support/published_rows.hpp"

#include <gtest/gtest.h>

#include <random>

namespace inrc {
namespace {

NetworkArch make_arch(int l, int n) {
  NetworkArch a;
  a.hidden_layers = l;
  a.neurons = n;
  return a;
}

ThetaBank random_bank(std::mt19937_64& rng, const NetworkArch& a, int n) {
  std::vector<WeightSet> sets;
  for (int j = 0; j < n; ++j) sets.push_back(testing::random_weights(rng, a, 1.0));
  return ThetaBank(std::move(sets));
}

TEST(ThetaBank, RejectsEmptyAndIncongruent) {
  EXPECT_THROW(ThetaBank(std::vector<WeightSet>{}), Error);
  EXPECT_THROW(ThetaBank({WeightSet(make_arch(1, 2)), WeightSet(make_arch(1, 3))}), Error);
}

TEST(Combine, UnitVectorSelectsMember) {
  std::mt19937_64 rng(1);
  const ThetaBank bank = random_bank(rng, make_arch(2, 4), 3);
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
    e(j) = 1.0;
    EXPECT_EQ(combine(bank, e), bank[static_cast<std::size_t>(j)]);
  }
}

TEST(Combine, HalfHalfOfEqualMembersIsIdentity) {
  std::mt19937_64 rng(2);
  const WeightSet t = testing::random_weights(rng, make_arch(2, 4), 1.0);
  const ThetaBank bank({t, t});
  EXPECT_EQ(combine(bank, Eigen::Vector2d(0.5, 0.5)), t);
}

TEST(Combine, MatchesScalarLoopOracle) {
  std::mt19937_64 rng(3);
  const ThetaBank bank = random_bank(rng, make_arch(3, 6), 3);
  const double a[3] = {0.2, 0.3, 0.5};
  const WeightSet w = combine(bank, Eigen::Vector3d(a[0], a[1], a[2]));
  for (Eigen::Index k = 0; k < w.values().size(); ++k) {
    double ref = 0.0;
    for (std::size_t j = 0; j < 3; ++j) ref += a[j] * bank[j].values()(k);
    EXPECT_NEAR(w.values()(k), ref, 1e-15);
  }
}

TEST(Combine, IsLinearInAlpha) {
  std::mt19937_64 rng(4);
  const ThetaBank bank = random_bank(rng, make_arch(2, 5), 2);
  const Eigen::Vector2d a(0.3, -1.2), b(2.5, 0.7);
  const WeightSet lhs = combine(bank, Eigen::VectorXd(a + b));
  const WeightSet rhs = combine(bank, Eigen::VectorXd(a)) + combine(bank, Eigen::VectorXd(b));
  EXPECT_LE((lhs.values() - rhs.values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Combine, RejectsLengthMismatch) {
  std::mt19937_64 rng(5);
  const ThetaBank bank = random_bank(rng, make_arch(1, 2), 2);
  EXPECT_THROW(combine(bank, Eigen::Vector3d(1, 0, 0)), Error);
}

TEST(DefaultCombiner, ThreeImages) {
  const CombinerSpec s = default_combiner(2, 3);
  Eigen::MatrixXd expected(3, 2);
  expected << 1, 0, 0.5, 0.5, 0, 1;
  EXPECT_EQ(s.alpha, expected);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(s.gamma(i), 1.0 / 3.0);
}

TEST(DefaultCombiner, TwoImagesAreEndpoints) {
  EXPECT_EQ(default_combiner(2, 2).alpha, Eigen::MatrixXd::Identity(2, 2));
}

TEST(DefaultCombiner, SixImagesSecondRow) {
  const CombinerSpec s = default_combiner(2, 6);
  EXPECT_DOUBLE_EQ(s.alpha(1, 0), 0.8);
  EXPECT_DOUBLE_EQ(s.alpha(1, 1), 0.2);
}

TEST(DefaultCombiner, OtherNIsUnsupported) {
  try {
    default_combiner(3, 6);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unsupported_combiner);
  }
  EXPECT_EQ(default_combiner(1, 4).alpha, Eigen::MatrixXd::Ones(4, 1));
}

TEST(CombinerSpec, Validation) {
  CombinerSpec s = default_combiner(2, 3);
  EXPECT_NO_THROW(validate(s));
  s.gamma << 0.5, 0.5, 0.0;
  EXPECT_THROW(validate(s), Error);
  s.gamma << 0.4, 0.4, 0.3;
  EXPECT_THROW(validate(s), Error);
  CombinerSpec wide{Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Ones(1)};
  EXPECT_THROW(validate(wide), Error);
  CombinerSpec single{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1)};
  EXPECT_NO_THROW(validate(single));
  CombinerSpec nan = default_combiner(2, 3);
  nan.alpha(0, 0) = std::nan("");
  EXPECT_THROW(validate(nan), Error);
}

TEST(AggregateGrads, ZeroInZeroOut) {
  const NetworkArch a = make_arch(1, 3);
  const std::vector<GradientSet> g(3, GradientSet(a));
  for (const auto& out : aggregate_grads(g, default_combiner(2, 3))) {
    EXPECT_EQ(out.values().cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(AggregateGrads, DefaultCombinerHandFormula) {
  std::mt19937_64 rng(6);
  const NetworkArch a = make_arch(2, 3);
  std::vector<GradientSet> g;
  for (int i = 0; i < 3; ++i) g.emplace_back(a, testing::random_weights(rng, a, 1.0).values());
  const auto out = aggregate_grads(g, default_combiner(2, 3));
  ASSERT_EQ(out.size(), 2u);
  const Eigen::VectorXd expect1 = g[0].values() / 3.0 + g[1].values() / 6.0;
  const Eigen::VectorXd expect2 = g[2].values() / 3.0 + g[1].values() / 6.0;
  EXPECT_LE((out[0].values() - expect1).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((out[1].values() - expect2).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AggregateGrads, IdentityReducesToScaledGradients) {
  std::mt19937_64 rng(7);
  const NetworkArch a = make_arch(1, 4);
  std::vector<GradientSet> g;
  for (int i = 0; i < 3; ++i) g.emplace_back(a, testing::random_weights(rng, a, 1.0).values());
  const CombinerSpec s{Eigen::MatrixXd::Identity(3, 3), uniform_gamma(3)};
  const auto out = aggregate_grads(g, s);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_LE((out[j].values() - g[j].values() / 3.0).cwiseAbs().maxCoeff(), 1e-16);
  }
}

TEST(AggregateGrads, RejectsWrongCount) {
  const NetworkArch a = make_arch(1, 3);
  EXPECT_THROW(aggregate_grads(std::vector<GradientSet>(2, GradientSet(a)), default_combiner(2, 3)), Error);
}

// The aggregated gradient is the finite-difference gradient of the total loss
// with respect to each theta_j, with the total loss assembled by hand.
TEST(AggregateGrads, MatchesFiniteDifferenceOfTotalLoss) {
  std::mt19937_64 rng(8);
  const NetworkArch a = make_arch(2, 5);
  const ThetaBank bank({init_weights(a, 1), init_weights(a, 2)});
  const CombinerSpec spec = default_combiner(2, 3);
  const Eigen::MatrixXd pts = testing::random_points(rng, 25);
  std::vector<Eigen::MatrixXd> targets;
  for (int i = 0; i < 3; ++i) targets.push_back(testing::random_target(rng, 3, 25));

  std::vector<GradientSet> per_image;
  for (int i = 0; i < 3; ++i) {
    per_image.push_back(loss_and_grad(combine(bank, Eigen::VectorXd(spec.alpha.row(i).transpose())), pts,
                                      targets[static_cast<std::size_t>(i)])
                            .grad);
  }
  const auto agg = aggregate_grads(per_image, spec);

  for (std::size_t j = 0; j < 2; ++j) {
    auto total = [&](const Eigen::VectorXd& v) {
      const WeightSet t0 = j == 0 ? WeightSet(a, v) : bank[0];
      const WeightSet t1 = j == 1 ? WeightSet(a, v) : bank[1];
      double sum = 0.0;
      for (int i = 0; i < 3; ++i) {
        WeightSet w(a, spec.alpha(i, 0) * t0.values() + spec.alpha(i, 1) * t1.values());
        sum += spec.gamma(i) * testing::scalar_loss(w, pts, targets[static_cast<std::size_t>(i)]);
      }
      return sum;
    };
    for (Eigen::Index k : testing::sample_indices(rng, bank[j].values().size(), 60)) {
      const double fd = testing::central_difference(total, bank[j].values(), k);
      EXPECT_TRUE(testing::grad_close(agg[j].values()(k), fd)) << "theta " << j + 1 << " param " << k;
    }
  }
}

TEST(Bpp, PublishedRows) {
  const ImageDims kodak{512, 768, 3};
  for (const auto* rows : {&testing::kRows04, &testing::kRows02}) {
    for (const auto& r : *rows) {
      const NetworkArch a = make_arch(r.l, r.n);
      EXPECT_EQ(param_count(a), r.params);
      EXPECT_NEAR(bpp(a, 2, 6, kodak, 16), r.bpp, 1e-3) << "l=" << r.l << " n=" << r.n;
    }
  }
}

TEST(Bpp, CifarAndTrivial) {
  EXPECT_NEAR(bpp(make_arch(4, 18), 2, 128, ImageDims{32, 32, 3}, 16), 0.0925, 1e-4);
  EXPECT_NEAR(bpp(make_arch(4, 18), 2, 128, ImageDims{32, 32, 3}, 16),
              2.0 * 1137.0 * 16.0 / (128.0 * 32 * 32 * 3), 1e-15);
  // Hand check with one scalar per set: N P B_P / (M H W C) = 1*1*8/1.
  NetworkArch tiny = make_arch(1, 1);
  const double per_param = bpp(tiny, 1, 1, ImageDims{1, 1, 1}, 8) / static_cast<double>(param_count(tiny));
  EXPECT_DOUBLE_EQ(per_param, 8.0);
}

}  // namespace
}  // namespace inrc
