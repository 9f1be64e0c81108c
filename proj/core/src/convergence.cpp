#include "inrc/convergence.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace inrc::theory {

namespace {

double sq(double x) { return x * x; }

const QuadraticLoss& side_loss(const TheoremConfig& config, int side) {
  if (side != 1 && side != 2) throw Error(Errc::invalid_argument, "side must be 1 or 2");
  return config.losses[static_cast<std::size_t>(side - 1)];
}

// sum_{k<t} r^k without forming r^t - 1 for r near 1.
double geometric_sum(double r, int t) {
  double sum = 0.0;
  double term = 1.0;
  for (int k = 0; k < t; ++k) {
    sum += term;
    term *= r;
  }
  return sum;
}

Eigen::VectorXd json_vector(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw Error(Errc::invalid_argument, std::string(field) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  return v;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

double QuadraticLoss::gap(const Eigen::VectorXd& theta) const {
  return 0.5 * (curvature.array() * (theta - minimizer).array().square()).sum();
}

double QuadraticLoss::value(const Eigen::VectorXd& theta) const { return gap(theta) + offset; }

Eigen::VectorXd QuadraticLoss::gradient(const Eigen::VectorXd& theta) const {
  return curvature.cwiseProduct(theta - minimizer);
}

double gamma3_limit(const TheoremConfig& config) {
  const double b1 = config.losses[0].beta();
  const double b2 = config.losses[1].beta();
  const double b3 = config.losses[2].beta();
  const double denom = sq(config.alpha3[0]) * b3 / (b1 * config.gamma[0]) +
                       sq(config.alpha3[1]) * b3 / (b2 * config.gamma[1]);
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / denom;
}

double secondary_contraction(const TheoremConfig& config) {
  const double b1 = config.losses[0].beta();
  const double b2 = config.losses[1].beta();
  const double b3 = config.losses[2].beta();
  return 1.0 - config.gamma[2] * (sq(config.alpha3[0]) * b3 / (b1 * config.gamma[0]) +
                                  sq(config.alpha3[1]) * b3 / (b2 * config.gamma[1]));
}

void validate(const TheoremConfig& config) {
  const Eigen::Index d = config.dimension();
  if (d < 1) throw Error(Errc::invalid_argument, "dimension must be positive");
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& loss = config.losses[i];
    if (loss.curvature.size() != d || loss.minimizer.size() != d) {
      throw Error(Errc::invalid_argument, "loss " + std::to_string(i + 1) + " has the wrong dimension");
    }
    if (!(loss.curvature.array() > 0.0).all() || !loss.curvature.allFinite() || !loss.minimizer.allFinite()) {
      throw Error(Errc::invalid_argument, "loss " + std::to_string(i + 1) + " needs positive finite curvature");
    }
    if (!(loss.offset >= 0.0)) throw Error(Errc::invalid_argument, "loss offsets must be >= 0");
  }
  if (config.theta1_init.size() != d || config.theta2_init.size() != d) {
    throw Error(Errc::invalid_argument, "initial weights have the wrong dimension");
  }
  if (config.iterations < 0) throw Error(Errc::invalid_argument, "iterations must be >= 0");
  const auto& g = config.gamma;
  if (!(g[0] > 0.0 && g[0] < 1.0) || !(g[1] > 0.0 && g[1] < 1.0) || !(g[2] >= 0.0 && g[2] < 1.0)) {
    throw Error(Errc::invalid_argument, "gamma1, gamma2 must lie in (0,1) and gamma3 in [0,1)");
  }
  if (std::abs(g[0] + g[1] + g[2] - 1.0) > 1e-9) throw Error(Errc::invalid_argument, "gamma must sum to 1");
  if (!std::isfinite(config.alpha3[0]) || !std::isfinite(config.alpha3[1])) {
    throw Error(Errc::invalid_argument, "alpha3 must be finite");
  }
  const double limit = gamma3_limit(config);
  if (g[2] > limit) {
    throw Error(Errc::infeasible_config,
                "gamma3 = " + std::to_string(g[2]) +
                    " violates gamma3 <= 1/(alpha31^2 beta3/(beta1 gamma1) + alpha32^2 beta3/(beta2 gamma2)) = " +
                    std::to_string(limit));
  }
}

double step_size(const TheoremConfig& config, int side) {
  return 1.0 / (config.gamma[static_cast<std::size_t>(side - 1)] * side_loss(config, side).beta());
}

std::array<Eigen::VectorXd, 2> total_gradient(const TheoremConfig& config, const Eigen::VectorXd& theta1,
                                              const Eigen::VectorXd& theta2) {
  // alpha rows: w1 = theta1, w2 = theta2, w3 = alpha31 theta1 + alpha32 theta2.
  const double alpha[3][2] = {{1.0, 0.0}, {0.0, 1.0}, {config.alpha3[0], config.alpha3[1]}};
  const Eigen::VectorXd w[3] = {theta1, theta2, config.alpha3[0] * theta1 + config.alpha3[1] * theta2};
  std::array<Eigen::VectorXd, 2> out = {Eigen::VectorXd::Zero(theta1.size()), Eigen::VectorXd::Zero(theta1.size())};
  for (int i = 0; i < 3; ++i) {
    const Eigen::VectorXd g = config.losses[static_cast<std::size_t>(i)].gradient(w[i]);
    for (int j = 0; j < 2; ++j) {
      const double coeff = alpha[i][j] * config.gamma[static_cast<std::size_t>(i)];
      if (coeff != 0.0) out[static_cast<std::size_t>(j)] += coeff * g;
    }
  }
  return out;
}

Trajectory run_gd(const TheoremConfig& config) {
  validate(config);
  const double eta1 = step_size(config, 1);
  const double eta2 = step_size(config, 2);
  Trajectory traj;
  Eigen::VectorXd theta1 = config.theta1_init;
  Eigen::VectorXd theta2 = config.theta2_init;
  auto push = [&] {
    traj.theta1.push_back(theta1);
    traj.theta2.push_back(theta2);
    traj.w3.push_back(config.alpha3[0] * theta1 + config.alpha3[1] * theta2);
  };
  push();
  for (int t = 0; t < config.iterations; ++t) {
    const auto grads = total_gradient(config, theta1, theta2);
    theta1 -= eta1 * grads[0];
    theta2 -= eta2 * grads[1];
    if (!theta1.allFinite() || !theta2.allFinite()) {
      throw Error(Errc::diverged, "gradient descent iterate became non-finite at t=" + std::to_string(t + 1));
    }
    push();
  }
  return traj;
}

TrajectoryMeasurements measure(const TheoremConfig& config, const Trajectory& trajectory) {
  TrajectoryMeasurements m;
  m.similarities.rho13 = std::numeric_limits<double>::infinity();
  m.similarities.rho23 = std::numeric_limits<double>::infinity();
  m.similarities.rho12 = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trajectory.theta1.size(); ++t) {
    const Eigen::VectorXd g1 = config.losses[0].gradient(trajectory.theta1[t]);
    const Eigen::VectorXd g2 = config.losses[1].gradient(trajectory.theta2[t]);
    const Eigen::VectorXd g3 = config.losses[2].gradient(trajectory.w3[t]);
    m.bounds.g1_sq = std::max(m.bounds.g1_sq, g1.squaredNorm());
    m.bounds.g2_sq = std::max(m.bounds.g2_sq, g2.squaredNorm());
    m.bounds.g3_sq = std::max(m.bounds.g3_sq, g3.squaredNorm());
    m.similarities.rho13 = std::min(m.similarities.rho13, g3.dot(g1));
    m.similarities.rho23 = std::min(m.similarities.rho23, g3.dot(g2));
    m.similarities.rho12 = std::max(m.similarities.rho12, g1.dot(g2));
  }
  return m;
}

double delta_primary(const TheoremConfig& config, const GradientBounds& bounds, int side) {
  if (side != 1 && side != 2) throw Error(Errc::invalid_argument, "side must be 1 or 2");
  const double a = config.alpha3[static_cast<std::size_t>(side - 1)];
  return sq(config.gamma[2]) * sq(a) * bounds.g3_sq;
}

double delta_secondary(const TheoremConfig& config, const GradientBounds& bounds,
                       const Similarities& similarities) {
  const double b1 = config.losses[0].beta();
  const double b2 = config.losses[1].beta();
  const double b3 = config.losses[2].beta();
  const double a31 = config.alpha3[0];
  const double a32 = config.alpha3[1];
  const double k = secondary_contraction(config);
  return sq(k) * bounds.g3_sq                                    //
         + sq(a31) * sq(b3 / b1) * bounds.g1_sq                  //
         + sq(a32) * sq(b3 / b2) * bounds.g2_sq                  //
         - 2.0 * a31 * (b3 / b1) * k * similarities.rho13        //
         - 2.0 * a32 * (b3 / b2) * k * similarities.rho23        //
         + 2.0 * a31 * (sq(b3) / (b1 * b2)) * a32 * similarities.rho12;
}

DeltaTerms delta_terms(const TheoremConfig& config, const GradientBounds& bounds,
                       const Similarities& similarities) {
  return {delta_primary(config, bounds, 1), delta_primary(config, bounds, 2),
          delta_secondary(config, bounds, similarities)};
}

double primary_bound_rhs(const TheoremConfig& config, const GradientBounds& bounds, int t, int side) {
  if (t < 0) throw Error(Errc::invalid_argument, "iteration index must be >= 0");
  const QuadraticLoss& loss = side_loss(config, side);
  const double gamma = config.gamma[static_cast<std::size_t>(side - 1)];
  const double rate = 1.0 - loss.mu() / loss.beta();
  const double gap0 = loss.gap(side == 1 ? config.theta1_init : config.theta2_init);
  const double delta = delta_primary(config, bounds, side);
  return std::pow(rate, t) * gap0 + delta / (2.0 * loss.beta() * sq(gamma)) * geometric_sum(rate, t);
}

double secondary_bound_rhs(const TheoremConfig& config, const GradientBounds& bounds,
                           const std::optional<Similarities>& similarities, int t) {
  if (t < 0) throw Error(Errc::invalid_argument, "iteration index must be >= 0");
  if (!similarities) {
    throw Error(Errc::invalid_argument, "secondary bound needs measured gradient similarities");
  }
  const QuadraticLoss& loss = config.losses[2];
  const double rate = 1.0 - loss.mu() / loss.beta();
  const Eigen::VectorXd w3_init = config.alpha3[0] * config.theta1_init + config.alpha3[1] * config.theta2_init;
  const double gap0 = loss.gap(w3_init);
  const double delta = delta_secondary(config, bounds, *similarities);
  return std::pow(rate, t) * gap0 + delta / (2.0 * loss.beta()) * geometric_sum(rate, t);
}

std::array<double, 3> asymptotic_gaps(const TheoremConfig& config, const DeltaTerms& deltas) {
  return {deltas.delta13 / (2.0 * config.losses[0].mu() * sq(config.gamma[0])),
          deltas.delta23 / (2.0 * config.losses[1].mu() * sq(config.gamma[1])),
          deltas.delta123 / (2.0 * config.losses[2].mu())};
}

BoundReport verify(const TheoremConfig& config) {
  const Trajectory traj = run_gd(config);
  const TrajectoryMeasurements measured = measure(config, traj);

  BoundReport report;
  report.bounds = config.a_priori_bounds.value_or(measured.bounds);
  report.similarities = measured.similarities;
  report.deltas = delta_terms(config, report.bounds, report.similarities);
  report.asymptotic = asymptotic_gaps(config, report.deltas);

  const int T = traj.iterations();
  const double rates[3] = {1.0 - config.losses[0].mu() / config.losses[0].beta(),
                           1.0 - config.losses[1].mu() / config.losses[1].beta(),
                           1.0 - config.losses[2].mu() / config.losses[2].beta()};
  const double offsets[3] = {
      report.deltas.delta13 / (2.0 * config.losses[0].beta() * sq(config.gamma[0])),
      report.deltas.delta23 / (2.0 * config.losses[1].beta() * sq(config.gamma[1])),
      report.deltas.delta123 / (2.0 * config.losses[2].beta())};
  const double gap0[3] = {config.losses[0].gap(traj.theta1[0]), config.losses[1].gap(traj.theta2[0]),
                          config.losses[2].gap(traj.w3[0])};

  // Closed-form RHS evaluated incrementally: rhs(t) = r^t gap0 + offset * S_t.
  double power[3] = {1.0, 1.0, 1.0};
  double partial[3] = {0.0, 0.0, 0.0};
  for (int t = 0; t <= T; ++t) {
    const auto tu = static_cast<std::size_t>(t);
    const double gaps[3] = {config.losses[0].gap(traj.theta1[tu]), config.losses[1].gap(traj.theta2[tu]),
                            config.losses[2].gap(traj.w3[tu])};
    double rhs[3];
    for (int i = 0; i < 3; ++i) rhs[i] = power[i] * gap0[i] + offsets[i] * partial[i];
    report.gap1.push_back(gaps[0]);
    report.gap2.push_back(gaps[1]);
    report.gap3.push_back(gaps[2]);
    report.rhs1.push_back(rhs[0]);
    report.rhs2.push_back(rhs[1]);
    report.rhs3.push_back(rhs[2]);
    for (int i = 0; i < 3; ++i) {
      if (!(gaps[i] <= rhs[i])) report.violations.push_back({i + 1, t, gaps[i], rhs[i]});
      partial[i] += power[i];
      power[i] *= rates[i];
    }
  }

  report.tail_length = std::max(1, T / 5);
  const std::vector<double>* series[3] = {&report.gap1, &report.gap2, &report.gap3};
  for (int i = 0; i < 3; ++i) {
    const auto& s = *series[i];
    const auto begin = s.end() - std::min<std::ptrdiff_t>(report.tail_length, static_cast<std::ptrdiff_t>(s.size()));
    double sum = 0.0;
    for (auto it = begin; it != s.end(); ++it) sum += *it;
    const double mean = sum / static_cast<double>(s.end() - begin);
    report.tail_mean_gap[static_cast<std::size_t>(i)] = mean;
    // The limit is only reached as t -> inf; allow the transient r^t0 gap0
    // left at the first tail iteration t0, which vanishes when it has decayed.
    const int t0 = T + 1 - static_cast<int>(s.end() - begin);
    const double limit = report.asymptotic[static_cast<std::size_t>(i)] + std::pow(rates[i], t0) * gap0[i];
    if (T > 0 && !(mean <= limit)) report.violations.push_back({i + 4, T, mean, limit});
  }
  return report;
}

TheoremConfig reference_config() {
  TheoremConfig c;
  Eigen::VectorXd curvature(2);
  curvature << 0.5, 1.0;
  Eigen::VectorXd m1(2), m2(2), m3(2);
  m1 << 1.0, 0.0;
  m2 << 0.0, 1.0;
  m3 << 1.0, 1.0;
  c.losses = {QuadraticLoss{curvature, m1, 0.0}, QuadraticLoss{curvature, m2, 0.0},
              QuadraticLoss{curvature, m3, 0.0}};
  c.gamma = {0.4, 0.4, 0.2};
  c.alpha3 = {0.5, 0.5};
  c.iterations = 500;
  c.theta1_init = Eigen::VectorXd::Zero(2);
  c.theta2_init = Eigen::VectorXd::Zero(2);
  return c;
}

TheoremConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("config is not valid JSON: ") + e.what());
  }
  try {
    TheoremConfig c;
    const auto& losses = j.at("losses");
    if (!losses.is_array() || losses.size() != 3) {
      throw Error(Errc::invalid_argument, "config needs exactly three losses");
    }
    for (std::size_t i = 0; i < 3; ++i) {
      c.losses[i].curvature = json_vector(losses[i].at("curvature"), "curvature");
      c.losses[i].minimizer = json_vector(losses[i].at("minimizer"), "minimizer");
      c.losses[i].offset = losses[i].value("offset", 0.0);
    }
    const auto gamma = j.at("gamma").get<std::vector<double>>();
    const auto alpha = j.at("alpha3").get<std::vector<double>>();
    if (gamma.size() != 3 || alpha.size() != 2) {
      throw Error(Errc::invalid_argument, "gamma needs 3 entries and alpha3 needs 2");
    }
    std::copy(gamma.begin(), gamma.end(), c.gamma.begin());
    std::copy(alpha.begin(), alpha.end(), c.alpha3.begin());
    c.iterations = j.at("iterations").get<int>();
    const Eigen::Index d = c.losses[0].dimension();
    c.theta1_init = j.contains("theta1_init") ? json_vector(j["theta1_init"], "theta1_init")
                                              : Eigen::VectorXd::Zero(d);
    c.theta2_init = j.contains("theta2_init") ? json_vector(j["theta2_init"], "theta2_init")
                                              : Eigen::VectorXd::Zero(d);
    if (j.contains("gradient_bounds")) {
      const auto& g = j["gradient_bounds"];
      c.a_priori_bounds = GradientBounds{g.at("g1_sq").get<double>(), g.at("g2_sq").get<double>(),
                                         g.at("g3_sq").get<double>()};
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("malformed theorem config: ") + e.what());
  }
}

std::string to_json(const TheoremConfig& config) {
  nlohmann::json j;
  j["losses"] = nlohmann::json::array();
  for (const auto& loss : config.losses) {
    j["losses"].push_back({{"curvature", vector_json(loss.curvature)},
                           {"minimizer", vector_json(loss.minimizer)},
                           {"offset", loss.offset}});
  }
  j["gamma"] = config.gamma;
  j["alpha3"] = config.alpha3;
  j["iterations"] = config.iterations;
  j["theta1_init"] = vector_json(config.theta1_init);
  j["theta2_init"] = vector_json(config.theta2_init);
  if (config.a_priori_bounds) {
    j["gradient_bounds"] = {{"g1_sq", config.a_priori_bounds->g1_sq},
                            {"g2_sq", config.a_priori_bounds->g2_sq},
                            {"g3_sq", config.a_priori_bounds->g3_sq}};
  }
  return j.dump(2);
}

std::string to_json(const BoundReport& report) {
  nlohmann::json j;
  j["passed"] = report.passed();
  j["iterations"] = static_cast<int>(report.gap1.size()) - 1;
  j["gap"] = {report.gap1, report.gap2, report.gap3};
  j["rhs"] = {report.rhs1, report.rhs2, report.rhs3};
  j["G_sq"] = {report.bounds.g1_sq, report.bounds.g2_sq, report.bounds.g3_sq};
  j["rho"] = {{"rho13_min", report.similarities.rho13},
              {"rho23_min", report.similarities.rho23},
              {"rho12_max", report.similarities.rho12}};
  j["delta"] = {{"delta13", report.deltas.delta13},
                {"delta23", report.deltas.delta23},
                {"delta123", report.deltas.delta123}};
  j["asymptotic_gap"] = report.asymptotic;
  j["tail_mean_gap"] = report.tail_mean_gap;
  j["tail_length"] = report.tail_length;
  j["violations"] = nlohmann::json::array();
  for (const auto& v : report.violations) {
    j["violations"].push_back({{"bound", v.bound}, {"t", v.t}, {"gap", v.gap}, {"rhs", v.rhs}});
  }
  return j.dump();
}

}  // namespace inrc::theory
