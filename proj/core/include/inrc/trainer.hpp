#pragma once

#include "inrc/imaging.hpp"
#include "inrc/weight_space.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace inrc {

enum class OptimizerKind { plain_gd, adam };

struct TrainConfig {
  int epochs = 2000;
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  int log_every = 100;
  /// Start every theta_j from init_weights(arch, seed) instead of seed + j.
  bool identical_init = false;
  /// Abort once the total loss exceeds this multiple of its initial value.
  double divergence_factor = 1e6;
};

void validate(const TrainConfig& config);

/// Images prepared once for training: shared coordinate grid plus each
/// target as a signed-range C x pixels matrix.
struct TrainingSet {
  ImageDims dims;
  CoordGrid coords;
  std::vector<Eigen::MatrixXd> targets;

  std::size_t size() const { return targets.size(); }
  static TrainingSet from_images(const std::vector<ImageTensor>& images);
};

struct LossReport {
  double total = 0.0;
  std::vector<double> per_image;
};

/// sum_i gamma_i L_i(combine(bank, alpha_i)).
LossReport total_loss(const ThetaBank& bank, const CombinerSpec& spec, const TrainingSet& set);
LossReport total_loss(const ThetaBank& bank, const CombinerSpec& spec,
                      const std::vector<ImageTensor>& images, const CoordGrid& coords);

class OptimizerState {
 public:
  OptimizerState(const TrainConfig& config, const ThetaBank& bank);

  /// Applies one update to every theta_j given its aggregated gradient.
  void apply(ThetaBank& bank, const std::vector<GradientSet>& grads);

  long steps() const { return steps_; }

 private:
  OptimizerKind kind_;
  double lr_;
  double beta1_;
  double beta2_;
  double epsilon_;
  long steps_ = 0;
  std::vector<Eigen::VectorXd> first_moment_;
  std::vector<Eigen::VectorXd> second_moment_;
};

struct StepMetrics {
  double total_loss = 0.0;
  std::vector<double> per_image_loss;
  std::vector<double> per_image_psnr;  // clamped prediction vs target, unit range
  std::vector<double> grad_norm;       // ||grad_{w_i} L_i|| at this step
};

/// Evaluates all M combined-weight losses at the current bank, aggregates the
/// per-image gradients back onto the bank and applies one optimizer update.
/// The returned metrics describe the bank before the update. Non-finite
/// losses or gradients throw Errc::non_finite naming the image and epoch.
StepMetrics train_step(ThetaBank& bank, const CombinerSpec& spec, const TrainingSet& set,
                       OptimizerState& optimizer, int epoch = 0);

/// Forward-only metrics (grad_norm left empty).
StepMetrics evaluate(const ThetaBank& bank, const CombinerSpec& spec, const TrainingSet& set);

struct EpochRecord {
  int epoch = 0;
  double total_loss = 0.0;
  std::vector<double> per_image_loss;
  std::vector<double> per_image_psnr;
  std::vector<double> grad_norm_max;  // running max of ||grad_{w_i} L_i|| so far
};

struct TrainHistory {
  std::vector<EpochRecord> records;

  /// One JSON object per line: epoch, total_loss, per_image_loss[],
  /// per_image_psnr[], grad_norm_max[].
  std::string to_json_lines() const;
};

struct TrainResult {
  ThetaBank bank;
  TrainHistory history;
};

using RecordCallback = std::function<void(const EpochRecord&)>;

/// Fresh bank for N weight sets: init_weights(arch, seed + j), or the same
/// seed for all when identical_init is set.
ThetaBank initial_bank(const NetworkArch& arch, int n_weights, const TrainConfig& config);

/// Runs config.epochs steps. Records epoch 0, every log_every-th epoch and
/// the final state.
TrainResult train(const std::vector<ImageTensor>& images, const NetworkArch& arch,
                  const CombinerSpec& spec, const TrainConfig& config,
                  const RecordCallback& on_record = {});
TrainResult train(const TrainingSet& set, ThetaBank bank, const CombinerSpec& spec,
                  const TrainConfig& config, const RecordCallback& on_record = {});

/// PSNR (dB, unit range) of a signed-range prediction after clamping to [-1, 1].
double prediction_psnr(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target);

}  // namespace inrc
