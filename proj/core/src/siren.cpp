#include "inrc/siren.hpp"

#include "fastmath.hpp"

#include <cmath>
#include <random>
#include <string>

namespace inrc {

namespace {

// Buffers reused across calls. Training calls loss_and_grad with the same
// shapes every step; keeping the storage avoids a fresh mmap and page-fault
// round per layer and step.
struct Workspace {
  std::vector<Eigen::MatrixXd> inputs;   // input to linear layer k
  std::vector<Eigen::MatrixXd> cosines;  // cos(omega0 * z_k) for hidden layer k
  Eigen::MatrixXd z;
  Eigen::MatrixXd scratch;
  Eigen::MatrixXd out_delta;
  Eigen::MatrixXd delta;
  Eigen::MatrixXd upstream;

  std::size_t bytes() const {
    std::size_t n = static_cast<std::size_t>(z.size() + scratch.size() + out_delta.size() + delta.size() +
                                             upstream.size());
    for (const auto& m : inputs) n += static_cast<std::size_t>(m.size());
    for (const auto& m : cosines) n += static_cast<std::size_t>(m.size());
    return n * sizeof(double);
  }
};

// Larger workspaces (full-size photos) are dropped after each call.
constexpr std::size_t kRetainBytes = std::size_t{256} << 20;

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

void release_if_large(Workspace& ws) {
  if (ws.bytes() > kRetainBytes) ws = Workspace{};
}

void check_points(const NetworkArch& arch, const Eigen::MatrixXd& points) {
  if (points.rows() != arch.input_dim) {
    throw Error(Errc::shape_mismatch, "coordinate rows (" + std::to_string(points.rows()) +
                                          ") do not match input_dim (" +
                                          std::to_string(arch.input_dim) + ")");
  }
}

// Fills ws.inputs[0..l] and, when keep_cosines, ws.cosines[0..l-1].
void run_forward(const WeightSet& w, const Eigen::MatrixXd& points, bool keep_cosines, Workspace& ws,
                 Eigen::MatrixXd& output) {
  const NetworkArch& arch = w.arch();
  check_points(arch, points);
  const int hidden = arch.hidden_layers;
  ws.inputs.resize(static_cast<std::size_t>(hidden) + 1);
  ws.cosines.resize(static_cast<std::size_t>(hidden));

  ws.inputs[0] = points;
  for (int k = 0; k < hidden; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    ws.z.noalias() = w.weight(k) * ws.inputs[ku];
    ws.z.colwise() += w.bias(k);
    ws.z *= arch.omega0;
    Eigen::MatrixXd& sines = ws.inputs[ku + 1];
    Eigen::MatrixXd& cosines = keep_cosines ? ws.cosines[ku] : ws.scratch;
    sines.resize(ws.z.rows(), ws.z.cols());
    cosines.resize(ws.z.rows(), ws.z.cols());
    detail::sincos_array(ws.z.data(), sines.data(), cosines.data(), static_cast<std::size_t>(ws.z.size()));
  }
  output.noalias() = w.weight(hidden) * ws.inputs[static_cast<std::size_t>(hidden)];
  output.colwise() += w.bias(hidden);
}

}  // namespace

void validate(const NetworkArch& arch) {
  if (arch.hidden_layers < 1 || arch.neurons < 1 || arch.input_dim < 1 || arch.output_dim < 1) {
    throw Error(Errc::invalid_argument, "network dimensions must be positive");
  }
  if (!(arch.omega0 > 0.0) || !std::isfinite(arch.omega0)) {
    throw Error(Errc::invalid_argument, "omega0 must be positive and finite");
  }
}

std::size_t param_count(const NetworkArch& arch) {
  const auto l = static_cast<std::size_t>(arch.hidden_layers);
  const auto n = static_cast<std::size_t>(arch.neurons);
  const auto in = static_cast<std::size_t>(arch.input_dim);
  const auto out = static_cast<std::size_t>(arch.output_dim);
  return (in + 1) * n + (l - 1) * (n * n + n) + (n + 1) * out;
}

std::vector<LayerSlot> layer_slots(const NetworkArch& arch) {
  std::vector<LayerSlot> slots;
  slots.reserve(static_cast<std::size_t>(arch.hidden_layers) + 1);
  std::size_t offset = 0;
  for (int k = 0; k <= arch.hidden_layers; ++k) {
    LayerSlot s;
    s.rows = k == arch.hidden_layers ? arch.output_dim : arch.neurons;
    s.cols = k == 0 ? arch.input_dim : arch.neurons;
    s.weight_offset = offset;
    s.bias_offset = offset + static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.cols);
    offset = s.bias_offset + static_cast<std::size_t>(s.rows);
    slots.push_back(s);
  }
  return slots;
}

WeightSet init_weights(const NetworkArch& arch, std::uint64_t seed) {
  validate(arch);
  WeightSet w(arch);
  std::mt19937_64 rng(seed);
  for (int k = 0; k <= arch.hidden_layers; ++k) {
    auto weight = w.weight(k);
    const double fan_in = static_cast<double>(weight.cols());
    const double bound = k == 0 ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / arch.omega0;
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < weight.cols(); ++j) weight(i, j) = dist(rng);
    }
  }
  return w;
}

Eigen::MatrixXd forward(const WeightSet& w, const Eigen::MatrixXd& points) {
  Workspace& ws = workspace();
  Eigen::MatrixXd output;
  run_forward(w, points, false, ws, output);
  release_if_large(ws);
  return output;
}

Eigen::MatrixXd forward(const WeightSet& w, const CoordGrid& coords) {
  return forward(w, coords.points);
}

LossAndGrad loss_and_grad(const WeightSet& w, const Eigen::MatrixXd& points,
                          const Eigen::MatrixXd& target) {
  const NetworkArch& arch = w.arch();
  if (target.rows() != arch.output_dim || target.cols() != points.cols()) {
    throw Error(Errc::shape_mismatch,
                "target is " + std::to_string(target.rows()) + "x" + std::to_string(target.cols()) +
                    ", expected " + std::to_string(arch.output_dim) + "x" +
                    std::to_string(points.cols()));
  }
  Workspace& ws = workspace();
  LossAndGrad out;
  run_forward(w, points, true, ws, out.prediction);

  Eigen::MatrixXd& d_out = ws.out_delta;
  d_out = out.prediction - target;
  const double count = static_cast<double>(d_out.size());
  out.loss = d_out.squaredNorm() / count;
  out.grad = GradientSet(arch);

  const int hidden = arch.hidden_layers;
  d_out *= 2.0 / count;
  out.grad.weight(hidden).noalias() = d_out * ws.inputs[static_cast<std::size_t>(hidden)].transpose();
  out.grad.bias(hidden) = d_out.rowwise().sum();
  const Eigen::MatrixXd* delta = &d_out;
  for (int k = hidden - 1; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    ws.upstream.noalias() = w.weight(k + 1).transpose() * *delta;
    ws.delta = arch.omega0 * ws.upstream.cwiseProduct(ws.cosines[ku]);
    delta = &ws.delta;
    out.grad.weight(k).noalias() = ws.delta * ws.inputs[ku].transpose();
    out.grad.bias(k) = ws.delta.rowwise().sum();
  }
  release_if_large(ws);
  return out;
}

}  // namespace inrc
