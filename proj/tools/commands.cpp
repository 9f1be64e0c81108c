#include "commands.hpp"

#include "inrc/bundle.hpp"
#include "inrc/convergence.hpp"
#include "inrc/error.hpp"
#include "inrc/png_io.hpp"
#include "inrc/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace inrc::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

json number_array(const std::vector<double>& values) {
  json arr = json::array();
  for (double v : values) arr.push_back(number_or_inf(v));
  return arr;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::file_error, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::file_error, "failed writing " + path.string());
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& token, const std::string& what) {
  const std::string t = trim(token);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::invalid_argument, "cannot parse '" + t + "' as a number in " + what);
  }
}

int parse_int(const std::string& token, const std::string& what) {
  const double v = parse_double(token, what);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw Error(Errc::invalid_argument, "expected an integer in " + what + ", got '" + trim(token) + "'");
  }
  return static_cast<int>(v);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

OptimizerKind parse_optimizer(const std::string& text) {
  if (text == "adam") return OptimizerKind::adam;
  if (text == "plain-gd" || text == "gd") return OptimizerKind::plain_gd;
  throw Error(Errc::invalid_argument, "unknown optimizer '" + text + "' (adam | plain-gd)");
}

std::vector<ImageTensor> load_images(const std::vector<std::string>& paths) {
  std::vector<ImageTensor> images;
  images.reserve(paths.size());
  for (const auto& p : paths) images.push_back(load_png(p));
  return images;
}

CombinerSpec resolve_combiner(const std::string& combiner, const std::string& gamma, int n_weights,
                              bool n_weights_given, int m_images) {
  CombinerSpec spec;
  if (combiner == "default") {
    spec = default_combiner(n_weights, m_images);
  } else {
    spec.alpha = parse_combiner_csv(read_text(combiner));
    if (n_weights_given && spec.alpha.cols() != n_weights) {
      throw Error(Errc::invalid_argument, "--n-weights " + std::to_string(n_weights) + " disagrees with the " +
                                              std::to_string(spec.alpha.cols()) + "-column combiner file");
    }
    if (spec.alpha.rows() != m_images) {
      throw Error(Errc::invalid_argument, "combiner file has " + std::to_string(spec.alpha.rows()) +
                                              " rows for " + std::to_string(m_images) + " images");
    }
    spec.gamma = uniform_gamma(m_images);
  }
  if (gamma != "uniform") {
    spec.gamma = parse_gamma_csv(read_text(gamma));
    if (spec.gamma.size() != m_images) {
      throw Error(Errc::invalid_argument, "gamma file has " + std::to_string(spec.gamma.size()) +
                                              " values for " + std::to_string(m_images) + " images");
    }
  }
  validate(spec);
  return spec;
}

/// Flags shared by everything that trains.
struct TrainFlags {
  std::string arch = "l=4,n=64";
  int epochs = 2000;
  double lr = 1e-3;
  std::string optimizer = "adam";
  std::uint64_t seed = 0;
  int log_every = 100;

  void add_to(CLI::App* app) {
    app->add_option("--arch", arch, "network shape, e.g. l=4,n=64")->capture_default_str();
    app->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    app->add_option("--lr", lr, "learning rate")->capture_default_str();
    app->add_option("--optimizer", optimizer, "adam | plain-gd")->capture_default_str();
    app->add_option("--seed", seed, "base seed; theta_j starts from seed + j")->capture_default_str();
    app->add_option("--log-every", log_every, "history interval in epochs")->capture_default_str();
  }

  TrainConfig config() const {
    TrainConfig c;
    c.epochs = epochs;
    c.learning_rate = lr;
    c.optimizer = parse_optimizer(optimizer);
    c.seed = seed;
    c.log_every = log_every;
    validate(c);
    return c;
  }
};

std::vector<double> bundle_psnrs(const Bundle& bundle, const std::vector<ImageTensor>& originals) {
  std::vector<double> out;
  for (int i = 1; i <= bundle.m_images(); ++i) {
    out.push_back(psnr(reconstruct(bundle, i, 1.0), originals[static_cast<std::size_t>(i - 1)].to_unit()));
  }
  return out;
}

double header_bpp(const Bundle& b) { return bpp(b.arch, b.n_weights(), b.m_images(), b.dims, b.bits_per_param); }

// ---- compress ------------------------------------------------------------

struct CompressOpts {
  std::vector<std::string> images;
  TrainFlags train;
  int n_weights = 2;
  std::string combiner = "default";
  std::string gamma = "uniform";
  std::string out;
  std::string history;
  bool identical_init = false;
  bool rotate_portrait = false;
};

int cmd_compress(const CompressOpts& o, bool n_weights_given, std::ostream& out) {
  TrainConfig config = o.train.config();
  config.identical_init = o.identical_init;
  NetworkArch arch = parse_arch(o.train.arch);

  std::vector<ImageTensor> images = load_images(o.images);
  std::vector<int> rotated;
  if (o.rotate_portrait) {
    for (std::size_t i = 0; i < images.size(); ++i) {
      if (images[i].height() > images[i].width()) {
        images[i] = rotate90(images[i]);
        rotated.push_back(static_cast<int>(i) + 1);
      }
    }
  }
  const TrainingSet set = TrainingSet::from_images(images);
  arch.output_dim = set.dims.channels;
  const CombinerSpec spec =
      resolve_combiner(o.combiner, o.gamma, o.n_weights, n_weights_given, static_cast<int>(images.size()));

  const TrainResult result = train(set, initial_bank(arch, static_cast<int>(spec.weight_sets()), config), spec,
                                   config, [&](const EpochRecord& r) {
                                     out << "epoch " << r.epoch << " total_loss " << r.total_loss << '\n';
                                   });

  const auto bytes = serialize(result.bank, spec, arch, set.dims);
  ensure_parent(o.out);
  write_bundle(o.out, bytes);
  const fs::path history = o.history.empty() ? fs::path(o.out + ".history.jsonl") : fs::path(o.history);
  ensure_parent(history);
  write_text(history, result.history.to_json_lines());
  if (!rotated.empty()) {
    json meta;
    meta["rotated_images"] = rotated;
    meta["rotation"] = "90 degrees counter-clockwise";
    write_text(o.out + ".meta.json", meta.dump(2) + "\n");
  }

  const Bundle bundle = deserialize(bytes);
  const std::vector<double> stored = bundle_psnrs(bundle, images);
  const EpochRecord& last = result.history.records.back();
  out << std::fixed << std::setprecision(3);
  for (std::size_t i = 0; i < images.size(); ++i) {
    out << "image " << i + 1 << " psnr " << last.per_image_psnr[i] << " dB (stored f16: " << stored[i]
        << " dB)\n";
  }
  out << "bpp " << std::setprecision(6) << header_bpp(bundle) << " bytes " << bytes.size() << '\n';
  return kExitOk;
}

// ---- decompress ----------------------------------------------------------

struct DecompressOpts {
  std::string bundle;
  int index = 1;
  double scale = 1.0;
  bool all = false;
  std::string out;
};

int cmd_decompress(const DecompressOpts& o, std::ostream& out) {
  if (!(o.scale > 0.0)) throw Error(Errc::invalid_argument, "--scale must be positive");
  const Bundle bundle = load_bundle(o.bundle);
  if (o.all) {
    fs::create_directories(o.out);
    for (int i = 1; i <= bundle.m_images(); ++i) {
      const fs::path p = fs::path(o.out) / ("image_" + std::to_string(i) + ".png");
      const ImageTensor img = reconstruct(bundle, i, o.scale);
      save_png(img, p);
      out << p.string() << ' ' << img.height() << 'x' << img.width() << '\n';
    }
    return kExitOk;
  }
  const ImageTensor img = reconstruct(bundle, o.index, o.scale);
  ensure_parent(o.out);
  save_png(img, o.out);
  out << o.out << ' ' << img.height() << 'x' << img.width() << '\n';
  return kExitOk;
}

// ---- metrics -------------------------------------------------------------

struct MetricsOpts {
  std::string bundle;
  std::vector<std::string> images;
  std::string out;
};

int cmd_metrics(const MetricsOpts& o, std::ostream& out) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(o.bundle);
  const Bundle bundle = deserialize(bytes);
  json report;
  report["n_weights"] = bundle.n_weights();
  report["m_images"] = bundle.m_images();
  report["hidden_layers"] = bundle.arch.hidden_layers;
  report["neurons"] = bundle.arch.neurons;
  report["height"] = bundle.dims.height;
  report["width"] = bundle.dims.width;
  report["channels"] = bundle.dims.channels;
  report["bits_per_param"] = bundle.bits_per_param;
  report["param_count"] = param_count(bundle.arch);
  report["bundle_bytes"] = bytes.size();
  report["bpp"] = header_bpp(bundle);
  if (!o.images.empty()) {
    const std::vector<ImageTensor> originals = load_images(o.images);
    if (static_cast<int>(originals.size()) != bundle.m_images()) {
      throw Error(Errc::shape_mismatch, std::to_string(originals.size()) + " originals given for a bundle of " +
                                            std::to_string(bundle.m_images()) + " images");
    }
    for (std::size_t i = 0; i < originals.size(); ++i) {
      if (originals[i].dims() != bundle.dims) {
        throw Error(Errc::shape_mismatch, "original " + std::to_string(i + 1) + " does not match bundle dims");
      }
    }
    const std::vector<double> values = bundle_psnrs(bundle, originals);
    report["per_image_psnr"] = number_array(values);
    report["mean_psnr"] = number_or_inf(mean_of(values));
  }
  const std::string text = report.dump(2) + "\n";
  if (o.out.empty()) {
    out << text;
  } else {
    ensure_parent(o.out);
    write_text(o.out, text);
  }
  return kExitOk;
}

// ---- sweep ---------------------------------------------------------------

struct SweepOpts {
  std::string dataset;
  std::string mode;
  std::vector<int> m_values;
  std::vector<std::string> archs;
  std::string arch = "l=4,n=18";
  int group_size = 6;
  int n_weights = 2;
  int max_groups = 0;
  int epochs = 2000;
  double lr = 1e-3;
  std::string optimizer = "adam";
  std::uint64_t seed = 0;
  std::string out;
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

int cmd_sweep(const SweepOpts& o, std::ostream& out, std::ostream& err) {
  struct Point {
    int m;
    NetworkArch arch;
  };
  std::vector<Point> points;
  if (o.mode == "vary-M") {
    if (o.m_values.empty()) throw Error(Errc::invalid_argument, "vary-M needs a nonempty --m-values list");
    const NetworkArch a = parse_arch(o.arch);
    for (int m : o.m_values) {
      if (m < 1) throw Error(Errc::invalid_argument, "M values must be positive");
      points.push_back({m, a});
    }
  } else if (o.mode == "vary-arch") {
    if (o.archs.empty()) throw Error(Errc::invalid_argument, "vary-arch needs a nonempty --archs list");
    if (o.group_size < 1) throw Error(Errc::invalid_argument, "--m must be positive");
    for (const auto& s : o.archs) points.push_back({o.group_size, parse_arch(s)});
  } else {
    throw Error(Errc::invalid_argument, "unknown sweep mode '" + o.mode + "' (vary-M | vary-arch)");
  }

  TrainConfig config;
  config.epochs = o.epochs;
  config.learning_rate = o.lr;
  config.optimizer = parse_optimizer(o.optimizer);
  config.seed = o.seed;
  config.log_every = std::max(1, o.epochs);
  validate(config);

  std::vector<fs::path> files;
  if (!fs::is_directory(o.dataset)) throw Error(Errc::file_error, o.dataset + " is not a directory");
  for (const auto& entry : fs::directory_iterator(o.dataset)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(Errc::file_error, "no PNG files in " + o.dataset);
  std::vector<ImageTensor> images;
  for (const auto& f : files) images.push_back(load_png(f));
  const ImageDims dims = images.front().dims();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].dims() != dims) {
      throw Error(Errc::shape_mismatch, files[i].filename().string() + " has different dims than " +
                                            files.front().filename().string());
    }
  }

  std::ostringstream csv;
  csv << "mode,M,l,n,P,bpp,mean_psnr,std_psnr,epochs,seed,status\n";
  json meta;
  meta["dataset"] = o.dataset;
  meta["files"] = json::array();
  for (const auto& f : files) meta["files"].push_back(f.filename().string());
  meta["split"] = "contiguous in sorted file-name order";
  meta["points"] = json::array();
  bool any_failed = false;

  for (const Point& p : points) {
    NetworkArch arch = p.arch;
    arch.output_dim = dims.channels;
    const int n = p.m == 1 ? 1 : std::min(o.n_weights, p.m);
    const int available = static_cast<int>(images.size()) / p.m;
    const int groups = o.max_groups > 0 ? std::min(available, o.max_groups) : available;
    std::vector<double> psnrs;
    std::string status = "ok";
    json point;
    point["M"] = p.m;
    point["l"] = arch.hidden_layers;
    point["n"] = arch.neurons;
    point["groups"] = json::array();
    try {
      if (groups < 1) {
        throw Error(Errc::invalid_argument, "M=" + std::to_string(p.m) + " exceeds the " +
                                                std::to_string(images.size()) + " available images");
      }
      const CombinerSpec spec = default_combiner(n, p.m);
      for (int g = 0; g < groups; ++g) {
        const auto begin = images.begin() + static_cast<std::ptrdiff_t>(g) * p.m;
        const std::vector<ImageTensor> group(begin, begin + p.m);
        json names = json::array();
        for (int k = 0; k < p.m; ++k) {
          names.push_back(files[static_cast<std::size_t>(g * p.m + k)].filename().string());
        }
        point["groups"].push_back(names);
        const TrainResult r = train(group, arch, spec, config);
        const StepMetrics m = evaluate(quantize_bank(r.bank), spec, TrainingSet::from_images(group));
        psnrs.insert(psnrs.end(), m.per_image_psnr.begin(), m.per_image_psnr.end());
        err << "sweep M=" << p.m << " l=" << arch.hidden_layers << " n=" << arch.neurons << " group " << g + 1
            << "/" << groups << " done\n";
      }
    } catch (const Error& e) {
      status = std::string("error: ") + e.what();
      any_failed = true;
      psnrs.clear();
    }
    csv << (o.mode) << ',' << p.m << ',' << arch.hidden_layers << ',' << arch.neurons << ','
        << param_count(arch) << ',' << csv_number(bpp(arch, n, p.m, dims, kBundleBitsPerParam)) << ','
        << csv_number(mean_of(psnrs)) << ',' << csv_number(population_std(psnrs)) << ',' << o.epochs << ','
        << o.seed << ',' << csv_field(status) << '\n';
    point["status"] = status;
    meta["points"].push_back(point);
  }

  ensure_parent(o.out);
  write_text(o.out, csv.str());
  write_text(o.out + ".meta.json", meta.dump(2) + "\n");
  out << csv.str();
  return any_failed ? kExitRuntime : kExitOk;
}

// ---- verify-bounds -------------------------------------------------------

struct VerifyOpts {
  std::string config;
  bool reference = false;
  std::string out;
  std::string write_config;
};

int cmd_verify_bounds(const VerifyOpts& o, std::ostream& out) {
  if (o.config.empty() == !o.reference) {
    throw Error(Errc::invalid_argument, "give exactly one of --config or --reference");
  }
  const theory::TheoremConfig config =
      o.reference ? theory::reference_config() : theory::config_from_json(read_text(o.config));
  if (!o.write_config.empty()) {
    ensure_parent(o.write_config);
    write_text(o.write_config, theory::to_json(config) + "\n");
  }
  theory::validate(config);
  const theory::BoundReport report = theory::verify(config);
  if (!o.out.empty()) {
    ensure_parent(o.out);
    write_text(o.out, theory::to_json(report) + "\n");
  }
  out << std::setprecision(6);
  out << "iterations " << config.iterations << '\n';
  out << "G^2 " << report.bounds.g1_sq << ' ' << report.bounds.g2_sq << ' ' << report.bounds.g3_sq << '\n';
  out << "delta13 " << report.deltas.delta13 << " delta23 " << report.deltas.delta23 << " delta123 "
      << report.deltas.delta123 << '\n';
  for (int i = 0; i < 3; ++i) {
    out << "L" << i + 1 << " tail mean gap " << report.tail_mean_gap[static_cast<std::size_t>(i)]
        << " asymptotic limit " << report.asymptotic[static_cast<std::size_t>(i)] << '\n';
  }
  if (report.passed()) {
    out << "PASS all bounds hold\n";
    return kExitOk;
  }
  const theory::Violation& v = report.violations.front();
  out << "FAIL " << report.violations.size() << " violation(s); first: bound " << v.bound << " at t=" << v.t
      << " gap " << v.gap << " > rhs " << v.rhs << '\n';
  return kExitRuntime;
}

// ---- demo ----------------------------------------------------------------

struct DemoOpts {
  std::string mode;
  int size = 64;
  std::vector<std::string> images;
  std::string third;
  TrainFlags train;
  std::string out = "demo";
};

int cmd_demo(const DemoOpts& o, std::ostream& out) {
  DemoOptions d;
  d.mode = parse_demo_mode(o.mode);
  d.size = o.size;
  d.arch = parse_arch(o.train.arch);
  d.train = o.train.config();
  if (!o.images.empty()) {
    if (o.images.size() != 2) throw Error(Errc::invalid_argument, "--images takes exactly two primaries");
    d.primaries = load_images(o.images);
  }
  if (!o.third.empty()) d.third = load_png(o.third);
  const DemoResult r = run_demo(d);
  write_demo(r, o.out);
  out << std::fixed << std::setprecision(3);
  for (const auto& row : r.rows) {
    out << row.label << ": " << row.psnr << " dB (f16 " << row.psnr_quantized << " dB)\n";
  }
  out << r.summary << '\n';
  return kExitOk;
}

ImageTensor as_rgb(const ImageTensor& img) { return img.channels() == 1 ? gray_to_rgb(img) : img; }

}  // namespace

NetworkArch parse_arch(const std::string& text) {
  NetworkArch arch;
  std::stringstream ss(text);
  std::string item;
  bool any = false;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(Errc::invalid_argument, "arch item '" + item + "' is not key=value");
    const std::string key = trim(item.substr(0, eq));
    const std::string value = item.substr(eq + 1);
    if (key == "l") {
      arch.hidden_layers = parse_int(value, "--arch");
    } else if (key == "n") {
      arch.neurons = parse_int(value, "--arch");
    } else if (key == "omega0") {
      arch.omega0 = parse_double(value, "--arch");
    } else {
      throw Error(Errc::invalid_argument, "unknown arch key '" + key + "' (l, n, omega0)");
    }
    any = true;
  }
  if (!any) throw Error(Errc::invalid_argument, "empty --arch");
  validate(arch);
  return arch;
}

Eigen::MatrixXd parse_combiner_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(parse_double(cell, "combiner file"));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(Errc::invalid_argument, "combiner rows have different lengths");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(Errc::invalid_argument, "combiner file is empty");
  Eigen::MatrixXd alpha(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      alpha(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return alpha;
}

Eigen::VectorXd parse_gamma_csv(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (trim(line).empty()) continue;
    values.push_back(parse_double(line, "gamma file"));
  }
  if (values.empty()) throw Error(Errc::invalid_argument, "gamma file is empty");
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

DemoMode parse_demo_mode(const std::string& text) {
  if (text == "naive-average") return DemoMode::naive_average;
  if (text == "constrained-average") return DemoMode::constrained_average;
  if (text == "different-third") return DemoMode::different_third;
  throw Error(Errc::invalid_argument,
              "unknown demo mode '" + text + "' (naive-average | constrained-average | different-third)");
}

std::string to_string(DemoMode mode) {
  switch (mode) {
    case DemoMode::naive_average: return "naive-average";
    case DemoMode::constrained_average: return "constrained-average";
    case DemoMode::different_third: return "different-third";
  }
  return "?";
}

DemoResult run_demo(const DemoOptions& options) {
  const ImageTensor a = options.primaries.size() > 0 ? options.primaries[0].to_unit() : synth::plus_sign(options.size);
  const ImageTensor b = options.primaries.size() > 1 ? options.primaries[1].to_unit() : synth::cross_sign(options.size);
  if (a.dims() != b.dims()) throw Error(Errc::shape_mismatch, "the two primary images differ in dims");
  NetworkArch arch = options.arch;
  arch.output_dim = a.channels();
  const int h = a.height();
  const int w = a.width();

  DemoResult result;
  result.mode = options.mode;
  auto add_row = [&](std::string label, const ImageTensor& target, const WeightSet& weights) {
    DemoRow row;
    row.label = std::move(label);
    row.target = target;
    row.reconstruction = render(weights, h, w);
    row.psnr = psnr(row.reconstruction, target);
    const ThetaBank q = quantize_bank(ThetaBank({weights}));
    row.psnr_quantized = psnr(render(q[0], h, w), target);
    result.rows.push_back(std::move(row));
  };

  if (options.mode == DemoMode::naive_average) {
    CombinerSpec single{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1)};
    // Same seed for both runs: identical initial weights.
    const TrainResult ra = train({a}, arch, single, options.train);
    const TrainResult rb = train({b}, arch, single, options.train);
    const WeightSet avg = 0.5 * (ra.bank[0] + rb.bank[0]);
    const ImageTensor pixel_avg = pixel_average({a, b});
    add_row("A (theta1)", a, ra.bank[0]);
    add_row("B (theta2)", b, rb.bank[0]);
    add_row("averaged weights vs pixel average", pixel_avg, avg);
    const ImageTensor& recon = result.rows.back().reconstruction;
    result.psnr_vs_references = {psnr(recon, a), psnr(recon, b), psnr(recon, pixel_avg)};
    const char* names[3] = {"A", "B", "average"};
    const auto best = std::max_element(result.psnr_vs_references.begin(), result.psnr_vs_references.end()) -
                      result.psnr_vs_references.begin();
    result.nearest_reference = names[best];
    result.phenomenon_holds = result.nearest_reference == "average";
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << "averaged-weight image vs A " << result.psnr_vs_references[0]
      << " dB, vs B " << result.psnr_vs_references[1] << " dB, vs pixel average " << result.psnr_vs_references[2]
      << " dB; nearest: " << result.nearest_reference;
    result.summary = s.str();
    return result;
  }

  ImageTensor middle;
  std::string middle_label;
  if (options.mode == DemoMode::constrained_average) {
    middle = pixel_average({a, b});
    middle_label = "combined (theta1+theta2)/2 vs pixel average";
  } else {
    middle = options.third ? options.third->to_unit() : synth::sailboat(options.size);
    if (middle.channels() != a.channels()) {
      middle = middle.channels() == 1 ? gray_to_rgb(middle) : middle;
    }
    if (middle.dims() != a.dims()) throw Error(Errc::shape_mismatch, "third image differs in dims from the glyphs");
    middle_label = "combined (theta1+theta2)/2 vs third image";
  }
  const CombinerSpec spec = default_combiner(2, 3);
  const TrainResult r = train({a, middle, b}, arch, spec, options.train);
  add_row("A (theta1)", a, r.bank[0]);
  add_row(middle_label, middle, combine(r.bank, Eigen::VectorXd(spec.alpha.row(1).transpose())));
  add_row("B (theta2)", b, r.bank[1]);

  const double pa = result.rows[0].psnr;
  const double pm = result.rows[1].psnr;
  const double pb = result.rows[2].psnr;
  std::ostringstream s;
  s << std::fixed << std::setprecision(3);
  if (options.mode == DemoMode::constrained_average) {
    result.phenomenon_holds = std::abs(pm - pa) <= 3.0 && std::abs(pm - pb) <= 3.0;
    s << "combined " << pm << " dB vs primaries " << pa << " / " << pb << " dB (within 3 dB: "
      << (result.phenomenon_holds ? "yes" : "no") << ")";
  } else {
    result.phenomenon_holds = pa >= 18.0 && pm >= 18.0 && pb >= 18.0;
    s << "PSNR " << pa << " / " << pm << " / " << pb << " dB (all >= 18 dB: "
      << (result.phenomenon_holds ? "yes" : "no") << ")";
  }
  result.summary = s.str();
  return result;
}

std::string demo_metrics_json(const DemoResult& result) {
  json j;
  j["mode"] = to_string(result.mode);
  j["rows"] = json::array();
  for (const auto& row : result.rows) {
    j["rows"].push_back(
        {{"label", row.label}, {"psnr", number_or_inf(row.psnr)}, {"psnr_f16", number_or_inf(row.psnr_quantized)}});
  }
  if (!result.psnr_vs_references.empty()) {
    j["averaged_vs"] = {{"A", number_or_inf(result.psnr_vs_references[0])},
                        {"B", number_or_inf(result.psnr_vs_references[1])},
                        {"average", number_or_inf(result.psnr_vs_references[2])}};
    j["nearest_reference"] = result.nearest_reference;
  }
  j["phenomenon_holds"] = result.phenomenon_holds;
  j["summary"] = result.summary;
  return j.dump(2) + "\n";
}

void write_demo(const DemoResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<ImageTensor> originals, recons, residuals;
  for (const auto& row : result.rows) {
    originals.push_back(as_rgb(row.target));
    recons.push_back(as_rgb(row.reconstruction));
    residuals.push_back(as_rgb(residual(row.target, row.reconstruction)));
  }
  const ImageTensor top = hstack(originals);
  const ImageTensor mid = hstack(recons);
  const ImageTensor bottom = hstack(residuals);
  save_png(top, dir / "originals.png");
  save_png(mid, dir / "reconstructions.png");
  save_png(bottom, dir / "residuals.png");
  save_png(vstack({top, mid, bottom}), dir / "montage.png");
  write_text(dir / "metrics.json", demo_metrics_json(result));
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-image implicit neural representation compressor"};
  app.require_subcommand(1);

  CompressOpts compress;
  auto* c = app.add_subcommand("compress", "train N weight sets on M images and write a bundle");
  c->add_option("--images", compress.images, "input PNGs")->required();
  compress.train.add_to(c);
  auto* n_opt = c->add_option("--n-weights", compress.n_weights, "number of weight sets N")->capture_default_str();
  c->add_option("--combiner", compress.combiner, "default | path to M x N CSV")->capture_default_str();
  c->add_option("--gamma", compress.gamma, "uniform | path to M-line CSV")->capture_default_str();
  c->add_option("--out", compress.out, "bundle path")->required();
  c->add_option("--history", compress.history, "history JSON lines (default <out>.history.jsonl)");
  c->add_flag("--identical-init", compress.identical_init, "start every theta_j from the same weights");
  c->add_flag("--rotate-portrait", compress.rotate_portrait, "rotate portrait images to landscape first");

  DecompressOpts decompress;
  auto* d = app.add_subcommand("decompress", "render images from a bundle");
  d->add_option("--bundle", decompress.bundle, "bundle path")->required();
  d->add_option("--index", decompress.index, "1-based image index")->capture_default_str();
  d->add_option("--scale", decompress.scale, "output size relative to the trained size")->capture_default_str();
  d->add_flag("--all", decompress.all, "render every image; --out is then a directory");
  d->add_option("--out", decompress.out, "output PNG (or directory with --all)")->required();

  MetricsOpts metrics;
  auto* m = app.add_subcommand("metrics", "BPP, sizes and PSNR of a bundle");
  m->add_option("--bundle", metrics.bundle, "bundle path")->required();
  m->add_option("--images", metrics.images, "originals in bundle order");
  m->add_option("--out", metrics.out, "JSON report path (default stdout)");

  SweepOpts sweep;
  auto* s = app.add_subcommand("sweep", "rate-distortion sweep over M or architecture");
  s->add_option("--dataset", sweep.dataset, "directory of equally sized PNGs")->required();
  s->add_option("--mode", sweep.mode, "vary-M | vary-arch")->required();
  s->add_option("--m-values", sweep.m_values, "M values for vary-M")->delimiter(',');
  s->add_option("--archs", sweep.archs, "architectures for vary-arch, e.g. l=2,n=294 l=3,n=206");
  s->add_option("--arch", sweep.arch, "architecture for vary-M")->capture_default_str();
  s->add_option("--m", sweep.group_size, "images per bundle for vary-arch")->capture_default_str();
  s->add_option("--n-weights", sweep.n_weights, "weight sets per bundle")->capture_default_str();
  s->add_option("--max-groups", sweep.max_groups, "train at most this many groups per point (0 = all)");
  s->add_option("--epochs", sweep.epochs, "training epochs")->capture_default_str();
  s->add_option("--lr", sweep.lr, "learning rate")->capture_default_str();
  s->add_option("--optimizer", sweep.optimizer, "adam | plain-gd")->capture_default_str();
  s->add_option("--seed", sweep.seed, "base seed")->capture_default_str();
  s->add_option("--out", sweep.out, "CSV path")->required();

  VerifyOpts verify;
  auto* v = app.add_subcommand("verify-bounds", "check the two-network convergence bounds on quadratics");
  v->add_option("--config", verify.config, "JSON config");
  v->add_flag("--reference", verify.reference, "use the built-in d=2 reference config");
  v->add_option("--out", verify.out, "JSON report path");
  v->add_option("--write-config", verify.write_config, "also write the effective config as JSON");

  DemoOpts demo;
  demo.train.seed = 42;
  auto* g = app.add_subcommand("demo", "weight-averaging experiments on glyph images");
  g->add_option("--mode", demo.mode, "naive-average | constrained-average | different-third")->required();
  g->add_option("--size", demo.size, "glyph size in pixels")->capture_default_str();
  g->add_option("--images", demo.images, "two primary PNGs instead of the '+' and 'x' glyphs");
  g->add_option("--third", demo.third, "third target for different-third (default: procedural sailboat)");
  demo.train.add_to(g);
  g->add_option("--out", demo.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c) return cmd_compress(compress, n_opt->count() > 0, out);
    if (*d) return cmd_decompress(decompress, out);
    if (*m) return cmd_metrics(metrics, out);
    if (*s) return cmd_sweep(sweep, out, err);
    if (*v) return cmd_verify_bounds(verify, out);
    if (*g) return cmd_demo(demo, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_config_error(e.code()) ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace inrc::cli
