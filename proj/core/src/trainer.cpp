#include "inrc/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace inrc {

namespace {

nlohmann::json number_or_inf(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

nlohmann::json number_array(const std::vector<double>& values) {
  nlohmann::json arr = nlohmann::json::array();
  for (double v : values) arr.push_back(number_or_inf(v));
  return arr;
}

void check_set(const ThetaBank& bank, const CombinerSpec& spec, const TrainingSet& set) {
  if (static_cast<std::size_t>(spec.images()) != set.size()) {
    throw Error(Errc::shape_mismatch, "combiner has " + std::to_string(spec.images()) + " rows for " +
                                          std::to_string(set.size()) + " images");
  }
  if (static_cast<std::size_t>(spec.weight_sets()) != bank.size()) {
    throw Error(Errc::shape_mismatch, "combiner has " + std::to_string(spec.weight_sets()) +
                                          " columns for " + std::to_string(bank.size()) + " weight sets");
  }
  if (bank.arch().output_dim != set.dims.channels) {
    throw Error(Errc::shape_mismatch, "network output width does not match image channels");
  }
}

WeightSet combined_weights(const ThetaBank& bank, const CombinerSpec& spec, std::size_t i) {
  const Eigen::VectorXd row = spec.alpha.row(static_cast<Eigen::Index>(i)).transpose();
  return combine(bank, row);
}

}  // namespace

void validate(const TrainConfig& config) {
  if (config.epochs < 0) throw Error(Errc::invalid_argument, "epochs must be non-negative");
  if (!(config.learning_rate > 0.0)) throw Error(Errc::invalid_argument, "learning rate must be positive");
  if (config.log_every < 1) throw Error(Errc::invalid_argument, "log_every must be >= 1");
  if (config.optimizer == OptimizerKind::adam &&
      (!(config.beta1 >= 0.0 && config.beta1 < 1.0) || !(config.beta2 >= 0.0 && config.beta2 < 1.0) ||
       !(config.epsilon > 0.0))) {
    throw Error(Errc::invalid_argument, "adam needs betas in [0, 1) and epsilon > 0");
  }
}

TrainingSet TrainingSet::from_images(const std::vector<ImageTensor>& images) {
  if (images.empty()) throw Error(Errc::invalid_argument, "no training images");
  TrainingSet set;
  set.dims = images.front().dims();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].dims() != set.dims) {
      throw Error(Errc::shape_mismatch, "image " + std::to_string(i + 1) + " has different dims than image 1");
    }
    set.targets.push_back(to_channel_matrix(images[i]));
  }
  set.coords = coord_grid(set.dims.height, set.dims.width);
  return set;
}

double prediction_psnr(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target) {
  // Both signed; a unit-range difference is half the signed difference.
  const double mse_signed = (prediction.cwiseMax(-1.0).cwiseMin(1.0) - target).squaredNorm() /
                            static_cast<double>(target.size());
  const double mse = 0.25 * mse_signed;
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

LossReport total_loss(const ThetaBank& bank, const CombinerSpec& spec, const TrainingSet& set) {
  check_set(bank, spec, set);
  LossReport report;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Eigen::MatrixXd pred = forward(combined_weights(bank, spec, i), set.coords.points);
    const double li = (pred - set.targets[i]).squaredNorm() / static_cast<double>(pred.size());
    report.per_image.push_back(li);
    report.total += spec.gamma(static_cast<Eigen::Index>(i)) * li;
  }
  return report;
}

LossReport total_loss(const ThetaBank& bank, const CombinerSpec& spec,
                      const std::vector<ImageTensor>& images, const CoordGrid& coords) {
  TrainingSet set = TrainingSet::from_images(images);
  if (coords.height != set.dims.height || coords.width != set.dims.width) {
    throw Error(Errc::shape_mismatch, "coordinate grid does not match image dims");
  }
  set.coords = coords;
  return total_loss(bank, spec, set);
}

OptimizerState::OptimizerState(const TrainConfig& config, const ThetaBank& bank)
    : kind_(config.optimizer),
      lr_(config.learning_rate),
      beta1_(config.beta1),
      beta2_(config.beta2),
      epsilon_(config.epsilon) {
  if (kind_ == OptimizerKind::adam) {
    for (const auto& theta : bank.sets()) {
      first_moment_.push_back(Eigen::VectorXd::Zero(theta.values().size()));
      second_moment_.push_back(Eigen::VectorXd::Zero(theta.values().size()));
    }
  }
}

void OptimizerState::apply(ThetaBank& bank, const std::vector<GradientSet>& grads) {
  if (grads.size() != bank.size()) throw Error(Errc::shape_mismatch, "one gradient per weight set expected");
  ++steps_;
  if (kind_ == OptimizerKind::plain_gd) {
    for (std::size_t j = 0; j < bank.size(); ++j) bank[j].values() -= lr_ * grads[j].values();
    return;
  }
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (std::size_t j = 0; j < bank.size(); ++j) {
    const Eigen::VectorXd& g = grads[j].values();
    Eigen::VectorXd& m = first_moment_[j];
    Eigen::VectorXd& v = second_moment_[j];
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    bank[j].values().array() -=
        lr_ * (m.array() / correction1) / ((v.array() / correction2).sqrt() + epsilon_);
  }
}

StepMetrics train_step(ThetaBank& bank, const CombinerSpec& spec, const TrainingSet& set,
                       OptimizerState& optimizer, int epoch) {
  check_set(bank, spec, set);
  StepMetrics metrics;
  std::vector<GradientSet> per_image;
  per_image.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    LossAndGrad lg = loss_and_grad(combined_weights(bank, spec, i), set.coords.points, set.targets[i]);
    const double norm = lg.grad.values().norm();
    if (!std::isfinite(lg.loss) || !std::isfinite(norm)) {
      throw Error(Errc::non_finite, "non-finite loss or gradient for image " + std::to_string(i + 1) +
                                        " at epoch " + std::to_string(epoch));
    }
    metrics.per_image_loss.push_back(lg.loss);
    metrics.per_image_psnr.push_back(prediction_psnr(lg.prediction, set.targets[i]));
    metrics.grad_norm.push_back(norm);
    metrics.total_loss += spec.gamma(static_cast<Eigen::Index>(i)) * lg.loss;
    per_image.push_back(std::move(lg.grad));
  }
  optimizer.apply(bank, aggregate_grads(per_image, spec));
  return metrics;
}

StepMetrics evaluate(const ThetaBank& bank, const CombinerSpec& spec, const TrainingSet& set) {
  check_set(bank, spec, set);
  StepMetrics metrics;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Eigen::MatrixXd pred = forward(combined_weights(bank, spec, i), set.coords.points);
    const double li = (pred - set.targets[i]).squaredNorm() / static_cast<double>(pred.size());
    metrics.per_image_loss.push_back(li);
    metrics.per_image_psnr.push_back(prediction_psnr(pred, set.targets[i]));
    metrics.total_loss += spec.gamma(static_cast<Eigen::Index>(i)) * li;
  }
  return metrics;
}

std::string TrainHistory::to_json_lines() const {
  std::ostringstream out;
  for (const auto& r : records) {
    nlohmann::json line;
    line["epoch"] = r.epoch;
    line["total_loss"] = r.total_loss;
    line["per_image_loss"] = number_array(r.per_image_loss);
    line["per_image_psnr"] = number_array(r.per_image_psnr);
    line["grad_norm_max"] = number_array(r.grad_norm_max);
    out << line.dump() << '\n';
  }
  return out.str();
}

ThetaBank initial_bank(const NetworkArch& arch, int n_weights, const TrainConfig& config) {
  if (n_weights < 1) throw Error(Errc::invalid_argument, "need at least one weight set");
  std::vector<WeightSet> sets;
  for (int j = 0; j < n_weights; ++j) {
    const std::uint64_t seed = config.identical_init ? config.seed : config.seed + static_cast<std::uint64_t>(j);
    sets.push_back(init_weights(arch, seed));
  }
  return ThetaBank(std::move(sets));
}

TrainResult train(const std::vector<ImageTensor>& images, const NetworkArch& arch,
                  const CombinerSpec& spec, const TrainConfig& config, const RecordCallback& on_record) {
  validate(arch);
  const TrainingSet set = TrainingSet::from_images(images);
  return train(set, initial_bank(arch, static_cast<int>(spec.weight_sets()), config), spec, config,
               on_record);
}

TrainResult train(const TrainingSet& set, ThetaBank bank, const CombinerSpec& spec,
                  const TrainConfig& config, const RecordCallback& on_record) {
  validate(config);
  validate(spec);
  check_set(bank, spec, set);

  TrainResult result;
  OptimizerState optimizer(config, bank);
  std::vector<double> grad_max(set.size(), 0.0);
  double initial_total = -1.0;

  auto record = [&](int epoch, const StepMetrics& m) {
    EpochRecord r;
    r.epoch = epoch;
    r.total_loss = m.total_loss;
    r.per_image_loss = m.per_image_loss;
    r.per_image_psnr = m.per_image_psnr;
    r.grad_norm_max = grad_max;
    if (on_record) on_record(r);
    result.history.records.push_back(std::move(r));
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const StepMetrics m = train_step(bank, spec, set, optimizer, epoch);
    if (initial_total < 0.0) initial_total = m.total_loss;
    if (m.total_loss > config.divergence_factor * initial_total && initial_total > 0.0) {
      throw Error(Errc::diverged, "total loss " + std::to_string(m.total_loss) + " at epoch " +
                                      std::to_string(epoch) + " exceeds " +
                                      std::to_string(config.divergence_factor) + "x its initial value");
    }
    for (std::size_t i = 0; i < grad_max.size(); ++i) grad_max[i] = std::max(grad_max[i], m.grad_norm[i]);
    if (epoch % config.log_every == 0) record(epoch, m);
  }
  record(config.epochs, evaluate(bank, spec, set));
  result.bank = std::move(bank);
  return result;
}

}  // namespace inrc
