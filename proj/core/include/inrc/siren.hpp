#pragma once

#include "inrc/error.hpp"
#include "inrc/grid.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace inrc {

/// Shape of one sine-activated MLP: `hidden_layers` sine layers of width
/// `neurons` followed by a linear output layer.
struct NetworkArch {
  int hidden_layers = 4;
  int neurons = 64;
  int input_dim = 2;
  int output_dim = 3;
  double omega0 = 30.0;

  bool operator==(const NetworkArch&) const = default;
};

/// Throws Errc::invalid_argument unless every dimension is positive and omega0 > 0.
void validate(const NetworkArch& arch);

/// Scalar count of one weight set:
/// (in + 1) n + (l - 1)(n^2 + n) + (n + 1) out. With in = 2, out = 3 this is
/// 3n + (l - 1)(n^2 + n) + 3(n + 1).
std::size_t param_count(const NetworkArch& arch);

/// Offsets of one linear layer inside the flat parameter vector. The weight
/// block is `rows x cols` row-major, followed by `rows` biases.
struct LayerSlot {
  int rows = 0;
  int cols = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

/// Layer 0 (input) through layer `hidden_layers` (output), in storage order.
std::vector<LayerSlot> layer_slots(const NetworkArch& arch);

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// All parameters of one network instance, stored flat in serialization
/// order. The tag keeps weights and gradients from being mixed up.
template <class Tag>
class ParamSet {
 public:
  ParamSet() = default;

  explicit ParamSet(const NetworkArch& arch)
      : arch_(arch), values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(param_count(arch)))) {}

  ParamSet(const NetworkArch& arch, Eigen::VectorXd values) : arch_(arch), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != param_count(arch_)) {
      throw Error(Errc::shape_mismatch, "parameter vector length does not match architecture");
    }
  }

  const NetworkArch& arch() const { return arch_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  int layer_count() const { return arch_.hidden_layers + 1; }

  Eigen::Map<const RowMajorMatrix> weight(int layer) const {
    const LayerSlot s = slot(layer);
    return {values_.data() + s.weight_offset, s.rows, s.cols};
  }
  Eigen::Map<RowMajorMatrix> weight(int layer) {
    const LayerSlot s = slot(layer);
    return {values_.data() + s.weight_offset, s.rows, s.cols};
  }
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const {
    const LayerSlot s = slot(layer);
    return {values_.data() + s.bias_offset, s.rows};
  }
  Eigen::Map<Eigen::VectorXd> bias(int layer) {
    const LayerSlot s = slot(layer);
    return {values_.data() + s.bias_offset, s.rows};
  }

  template <class OtherTag>
  bool congruent(const ParamSet<OtherTag>& other) const {
    return arch_ == other.arch() && size() == other.size();
  }

  ParamSet& operator+=(const ParamSet& rhs) {
    require_congruent(rhs);
    values_ += rhs.values_;
    return *this;
  }
  ParamSet& operator-=(const ParamSet& rhs) {
    require_congruent(rhs);
    values_ -= rhs.values_;
    return *this;
  }
  ParamSet& operator*=(double c) {
    values_ *= c;
    return *this;
  }
  friend ParamSet operator+(ParamSet lhs, const ParamSet& rhs) { return lhs += rhs; }
  friend ParamSet operator-(ParamSet lhs, const ParamSet& rhs) { return lhs -= rhs; }
  friend ParamSet operator*(double c, ParamSet p) { return p *= c; }

  bool operator==(const ParamSet& rhs) const {
    return arch_ == rhs.arch_ && values_.size() == rhs.values_.size() && values_ == rhs.values_;
  }

 private:
  LayerSlot slot(int layer) const {
    const auto slots = layer_slots(arch_);
    if (layer < 0 || layer >= static_cast<int>(slots.size())) {
      throw Error(Errc::index_out_of_range, "layer index out of range");
    }
    return slots[static_cast<std::size_t>(layer)];
  }
  void require_congruent(const ParamSet& rhs) const {
    if (!congruent(rhs)) throw Error(Errc::shape_mismatch, "parameter sets are not congruent");
  }

  NetworkArch arch_;
  Eigen::VectorXd values_;
};

using WeightSet = ParamSet<struct WeightTag>;
using GradientSet = ParamSet<struct GradientTag>;

/// SIREN initialization: layer 0 ~ U(-1/in, 1/in); deeper layers
/// ~ U(-sqrt(6/fan_in)/omega0, +sqrt(6/fan_in)/omega0); zero biases.
/// Deterministic in (arch, seed).
WeightSet init_weights(const NetworkArch& arch, std::uint64_t seed);

/// Network output for every coordinate column: output_dim x coords.size().
/// No activation on the output layer; values are not clamped.
Eigen::MatrixXd forward(const WeightSet& w, const CoordGrid& coords);
Eigen::MatrixXd forward(const WeightSet& w, const Eigen::MatrixXd& points);

struct LossAndGrad {
  double loss = 0.0;
  GradientSet grad;
  Eigen::MatrixXd prediction;  // output_dim x pixels, the forward output the loss saw
};

/// Mean squared error over all pixel-channel entries against `target`
/// (output_dim x pixels, signed range) and its exact gradient.
LossAndGrad loss_and_grad(const WeightSet& w, const Eigen::MatrixXd& points,
                          const Eigen::MatrixXd& target);

}  // namespace inrc
