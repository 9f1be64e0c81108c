#include "inrc/bundle.hpp"
#include "inrc/convergence.hpp"
#include "inrc/imaging.hpp"
#include "inrc/synth.hpp"
#include "inrc/trainer.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <random>
#include <sstream>

namespace inrc {
namespace {

NetworkArch make_arch(int l, int n) {
  NetworkArch a;
  a.hidden_layers = l;
  a.neurons = n;
  return a;
}

TrainingSet random_set(std::mt19937_64& rng, int m, int h, int w) {
  TrainingSet set;
  set.dims = ImageDims{h, w, 3};
  set.coords = coord_grid(h, w);
  for (int i = 0; i < m; ++i) set.targets.push_back(0.8 * testing::random_target(rng, 3, h * w));
  return set;
}

TrainConfig gd(double lr, int epochs) {
  TrainConfig c;
  c.optimizer = OptimizerKind::plain_gd;
  c.learning_rate = lr;
  c.epochs = epochs;
  c.log_every = 1;
  return c;
}

TEST(TotalLoss, SingleImageReducesToSirenLoss) {
  std::mt19937_64 rng(1);
  const NetworkArch a = make_arch(2, 6);
  const TrainingSet set = random_set(rng, 1, 5, 5);
  const ThetaBank bank({init_weights(a, 3)});
  const CombinerSpec spec{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1)};
  EXPECT_EQ(total_loss(bank, spec, set).total, loss_and_grad(bank[0], set.coords.points, set.targets[0]).loss);
}

TEST(TotalLoss, EqualLossesWithUniformGamma) {
  std::mt19937_64 rng(2);
  const NetworkArch a = make_arch(2, 6);
  TrainingSet set = random_set(rng, 1, 4, 4);
  set.targets = {set.targets[0], set.targets[0], set.targets[0]};
  const ThetaBank bank({init_weights(a, 3)});
  const LossReport r = total_loss(bank, default_combiner(1, 3), set);
  EXPECT_NEAR(r.total, r.per_image[0], 1e-15);
}

TEST(TotalLoss, MatchesMaterializedOracle) {
  std::mt19937_64 rng(3);
  const NetworkArch a = make_arch(2, 5);
  const TrainingSet set = random_set(rng, 3, 4, 5);
  const ThetaBank bank({init_weights(a, 1), init_weights(a, 2)});
  CombinerSpec spec = default_combiner(2, 3);
  spec.gamma << 0.2, 0.5, 0.3;
  double oracle = 0.0;
  for (int i = 0; i < 3; ++i) {
    WeightSet w(a, spec.alpha(i, 0) * bank[0].values() + spec.alpha(i, 1) * bank[1].values());
    oracle += spec.gamma(i) * testing::scalar_loss(w, set.coords.points, set.targets[static_cast<std::size_t>(i)]);
  }
  EXPECT_NEAR(total_loss(bank, spec, set).total, oracle, 1e-12);
}

TEST(TotalLoss, ShapeErrors) {
  std::mt19937_64 rng(4);
  const NetworkArch a = make_arch(1, 3);
  const TrainingSet set = random_set(rng, 2, 3, 3);
  const ThetaBank bank({init_weights(a, 1), init_weights(a, 2)});
  EXPECT_THROW(total_loss(bank, default_combiner(2, 3), set), Error);
  const std::vector<ImageTensor> mixed = {ImageTensor(4, 4, 3), ImageTensor(4, 5, 3)};
  try {
    TrainingSet::from_images(mixed);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::shape_mismatch);
  }
}

TEST(TrainStep, ZeroGradientLeavesBankUnchanged) {
  const NetworkArch a = make_arch(2, 4);
  const ThetaBank start({init_weights(a, 1), init_weights(a, 2)});
  TrainingSet set;
  set.dims = ImageDims{3, 3, 3};
  set.coords = coord_grid(3, 3);
  for (std::size_t j = 0; j < 2; ++j) set.targets.push_back(forward(start[j], set.coords));
  const CombinerSpec spec{Eigen::MatrixXd::Identity(2, 2), uniform_gamma(2)};
  ThetaBank bank = start;
  OptimizerState opt(gd(0.1, 1), bank);
  const StepMetrics m = train_step(bank, spec, set, opt, 0);
  EXPECT_EQ(bank, start);
  EXPECT_EQ(m.total_loss, 0.0);
}

// Identity combiner with plain GD: each theta_j follows an independent
// single-image run with step lr * gamma_j, bit for bit.
TEST(TrainStep, IdentityCombinerReducesToIndependentRuns) {
  std::mt19937_64 rng(5);
  const NetworkArch a = make_arch(2, 6);
  const TrainingSet set = random_set(rng, 2, 5, 4);
  const CombinerSpec spec{Eigen::MatrixXd::Identity(2, 2), uniform_gamma(2)};
  const double lr = 0.05;
  ThetaBank bank({init_weights(a, 11), init_weights(a, 12)});
  std::vector<WeightSet> solo = {bank[0], bank[1]};
  OptimizerState opt(gd(lr, 1), bank);
  for (int t = 0; t < 50; ++t) {
    train_step(bank, spec, set, opt, t);
    for (std::size_t j = 0; j < 2; ++j) {
      const LossAndGrad lg = loss_and_grad(solo[j], set.coords.points, set.targets[j]);
      solo[j].values() -= (lr * spec.gamma(static_cast<Eigen::Index>(j))) * lg.grad.values();
      ASSERT_EQ(bank[j], solo[j]) << "step " << t << " theta " << j + 1;
    }
  }
}

TEST(TrainStep, NonFiniteNamesImageAndEpoch) {
  std::mt19937_64 rng(6);
  const NetworkArch a = make_arch(1, 3);
  TrainingSet set = random_set(rng, 3, 3, 3);
  set.targets[1](0, 0) = std::nan("");
  ThetaBank bank({init_weights(a, 1), init_weights(a, 2)});
  OptimizerState opt(gd(0.1, 1), bank);
  try {
    train_step(bank, default_combiner(2, 3), set, opt, 17);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::non_finite);
    const std::string what = e.what();
    EXPECT_NE(what.find("image 2"), std::string::npos) << what;
    EXPECT_NE(what.find("epoch 17"), std::string::npos) << what;
  }
}

// With every weight zero the hidden activations are sin(0) = 0 and only the
// output bias b sees a gradient: L(b) = 1/(CP) sum (b_c - T_cp)^2 is a
// uniform-curvature quadratic with beta = 2/C and minimizer the channel means.
// eta = 1/(gamma beta) lands on it in one plain-gd step.
TEST(TrainStep, OneStepReachesQuadraticMinimizer) {
  std::mt19937_64 rng(10);
  const NetworkArch a = make_arch(2, 5);
  const TrainingSet set = random_set(rng, 1, 4, 6);
  const Eigen::VectorXd means = set.targets[0].rowwise().mean();

  theory::QuadraticLoss q{Eigen::VectorXd::Constant(3, 2.0 / 3.0), means, 0.0};
  theory::TheoremConfig tc = theory::reference_config();
  tc.losses = {q, q, q};
  tc.gamma = {1.0, 1.0, 0.0};
  const double eta = theory::step_size(tc, 1);
  EXPECT_DOUBLE_EQ(eta, 1.5);

  ThetaBank bank({WeightSet(a)});
  const CombinerSpec spec{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1)};
  OptimizerState opt(gd(eta, 1), bank);
  train_step(bank, spec, set, opt, 0);
  const int last = static_cast<int>(layer_slots(a).size()) - 1;
  EXPECT_LE((bank[0].bias(last) - means).cwiseAbs().maxCoeff(), 1e-15);
  for (int k = 0; k < last; ++k) EXPECT_EQ(bank[0].bias(k).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE(std::abs(total_loss(bank, spec, set).total -
                     (set.targets[0].colwise() - means).squaredNorm() / static_cast<double>(set.targets[0].size())),
            1e-15);
}

TEST(Train, ReconstructionMatchesFinalReportedPsnr) {
  const std::vector<ImageTensor> imgs = {synth::gaussian_blobs(16, 16, 2, 1), synth::gaussian_blobs(16, 16, 2, 2),
                                         synth::gaussian_blobs(16, 16, 2, 3)};
  TrainConfig c;
  c.epochs = 150;
  c.log_every = 1000;
  const NetworkArch a = make_arch(2, 24);
  const CombinerSpec spec = default_combiner(2, 3);
  const TrainResult r = train(imgs, a, spec, c);
  const Bundle b = deserialize(serialize(r.bank, spec, a, imgs[0].dims()));
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(psnr(reconstruct(b, i + 1, 1.0), imgs[static_cast<std::size_t>(i)]),
                r.history.records.back().per_image_psnr[static_cast<std::size_t>(i)], 0.1);
  }
}

TEST(Train, MonotoneUnderSmallStep) {
  std::mt19937_64 rng(7);
  const NetworkArch a = make_arch(2, 8);
  const TrainingSet set = random_set(rng, 3, 6, 6);
  const TrainResult r = train(set, initial_bank(a, 2, gd(1e-3, 500)), default_combiner(2, 3), gd(1e-3, 500));
  ASSERT_EQ(r.history.records.size(), 501u);
  for (std::size_t k = 1; k < r.history.records.size(); ++k) {
    ASSERT_LE(r.history.records[k].total_loss, r.history.records[k - 1].total_loss) << "epoch " << k;
  }
  EXPECT_LT(r.history.records.back().total_loss, r.history.records.front().total_loss);
}

TEST(Train, ZeroEpochsReturnsInitialBank) {
  std::mt19937_64 rng(8);
  const NetworkArch a = make_arch(2, 4);
  TrainConfig c;
  c.epochs = 0;
  c.seed = 9;
  const std::vector<ImageTensor> imgs = {synth::gaussian_blobs(8, 8, 2, 1), synth::gaussian_blobs(8, 8, 2, 2),
                                         synth::gaussian_blobs(8, 8, 2, 3)};
  const TrainResult r = train(imgs, a, default_combiner(2, 3), c);
  EXPECT_EQ(r.bank, ThetaBank({init_weights(a, 9), init_weights(a, 10)}));
  ASSERT_EQ(r.history.records.size(), 1u);
  EXPECT_EQ(r.history.records[0].epoch, 0);
}

TEST(Train, IdenticalInitFlag) {
  TrainConfig c;
  c.seed = 4;
  c.identical_init = true;
  const ThetaBank b = initial_bank(make_arch(1, 3), 3, c);
  EXPECT_EQ(b[0], b[1]);
  EXPECT_EQ(b[1], b[2]);
  c.identical_init = false;
  const ThetaBank d = initial_bank(make_arch(1, 3), 2, c);
  EXPECT_FALSE(d[0] == d[1]);
}

TEST(Train, DeterministicAndHistoryLayout) {
  const NetworkArch a = make_arch(2, 8);
  TrainConfig c;
  c.epochs = 25;
  c.log_every = 10;
  c.seed = 3;
  const std::vector<ImageTensor> imgs = {synth::gaussian_blobs(8, 8, 2, 1), synth::gaussian_blobs(8, 8, 2, 2)};
  const TrainResult r1 = train(imgs, a, default_combiner(2, 2), c);
  const TrainResult r2 = train(imgs, a, default_combiner(2, 2), c);
  EXPECT_EQ(r1.bank, r2.bank);
  std::vector<int> epochs;
  for (const auto& rec : r1.history.records) epochs.push_back(rec.epoch);
  EXPECT_EQ(epochs, (std::vector<int>{0, 10, 20, 25}));
  std::istringstream lines(r1.history.to_json_lines());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("epoch"));
    EXPECT_EQ(j["per_image_loss"].size(), 2u);
    EXPECT_EQ(j["per_image_psnr"].size(), 2u);
    EXPECT_EQ(j["grad_norm_max"].size(), 2u);
    EXPECT_GE(j["total_loss"].get<double>(), 0.0);
    ++count;
  }
  EXPECT_EQ(count, 4);
}

TEST(Train, DivergenceGuard) {
  std::mt19937_64 rng(9);
  const NetworkArch a = make_arch(2, 8);
  const TrainingSet set = random_set(rng, 2, 4, 4);
  try {
    train(set, initial_bank(a, 2, gd(1e4, 200)), default_combiner(2, 2), gd(1e4, 200));
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == Errc::diverged || e.code() == Errc::non_finite) << e.what();
  }
}

TEST(Train, ConfigValidation) {
  TrainConfig c;
  c.learning_rate = 0.0;
  EXPECT_THROW(validate(c), Error);
  c = TrainConfig{};
  c.epochs = -1;
  EXPECT_THROW(validate(c), Error);
  c = TrainConfig{};
  c.beta1 = 1.0;
  EXPECT_THROW(validate(c), Error);
}

// Three smooth 32x32 images, N=2: every image reaches 20 dB.
TEST(TrainSlow, GaussianBlobsReachTwentyDb) {
  const std::vector<ImageTensor> imgs = {synth::gaussian_blobs(32, 32, 4, 1), synth::gaussian_blobs(32, 32, 4, 2),
                                         synth::gaussian_blobs(32, 32, 4, 3)};
  TrainConfig c;
  c.epochs = 2000;
  c.seed = 0;
  c.log_every = 500;
  const TrainResult r = train(imgs, make_arch(4, 64), default_combiner(2, 3), c);
  const auto& first = r.history.records.front();
  const auto& last = r.history.records.back();
  EXPECT_LT(last.total_loss, first.total_loss);
  for (double p : last.per_image_psnr) EXPECT_GE(p, 20.0);
}

}  // namespace
}  // namespace inrc
