#pragma once

#include "inrc/imaging.hpp"
#include "inrc/siren.hpp"
#include "inrc/trainer.hpp"
#include "inrc/weight_space.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace inrc::cli {

/// Exit codes: 0 success, 1 usage/config error, 2 runtime/data error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point shared by the binary and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// "l=4,n=64" (optionally ",omega0=30") on top of the default arch.
NetworkArch parse_arch(const std::string& text);

/// Combiner CSV: M rows of N comma-separated decimals.
Eigen::MatrixXd parse_combiner_csv(const std::string& text);
/// Gamma CSV: one value per line.
Eigen::VectorXd parse_gamma_csv(const std::string& text);

enum class DemoMode { naive_average, constrained_average, different_third };

DemoMode parse_demo_mode(const std::string& text);
std::string to_string(DemoMode mode);

struct DemoOptions {
  DemoMode mode = DemoMode::constrained_average;
  int size = 64;
  NetworkArch arch;
  TrainConfig train;
  /// Optional overrides for the '+' / 'x' glyphs and the third target.
  std::vector<ImageTensor> primaries;
  std::optional<ImageTensor> third;
};

/// One rendered image of a demo and how it scores.
struct DemoRow {
  std::string label;
  ImageTensor target;
  ImageTensor reconstruction;
  double psnr = 0.0;            // float64 weights
  double psnr_quantized = 0.0;  // weights rounded through binary16
};

struct DemoResult {
  DemoMode mode = DemoMode::constrained_average;
  std::vector<DemoRow> rows;
  /// naive-average only: PSNR of the averaged-weight image against A, B and
  /// the pixel average, in that order.
  std::vector<double> psnr_vs_references;
  std::string nearest_reference;
  bool phenomenon_holds = false;
  std::string summary;
};

/// Trains the mode's protocol. Defaults: '+' and 'x' glyphs, a procedural
/// sailboat as the different third, identical init for naive-average.
DemoResult run_demo(const DemoOptions& options);

/// Writes originals.png, reconstructions.png, residuals.png, montage.png and
/// metrics.json into `dir`.
void write_demo(const DemoResult& result, const std::filesystem::path& dir);
std::string demo_metrics_json(const DemoResult& result);

}  // namespace inrc::cli
