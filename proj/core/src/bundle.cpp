#include "inrc/bundle.hpp"

#include "inrc/half.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

namespace inrc {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'I', 'N', 'R', 'B'};
// magic + version + N + M + l + n + omega0 + B_P + H + W + C
constexpr std::size_t kFixedHeader = 4 + 2 + 1 + 2 + 1 + 2 + 4 + 1 + 2 + 2 + 1;

class Writer {
 public:
  explicit Writer(std::size_t reserve) { bytes_.reserve(reserve); }

  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) {
    bytes_.push_back(static_cast<std::uint8_t>(v & 0xffu));
    bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) bytes_.push_back(static_cast<std::uint8_t>((v >> s) & 0xffu));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void raw(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int s = 0; s < 4; ++s) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(s)]) << (8 * s);
    pos_ += 4;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(Errc::truncated_payload, "bundle ends at byte " + std::to_string(bytes_.size()) +
                                               " while reading offset " + std::to_string(pos_));
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <class T>
T checked_narrow(long long value, const char* field) {
  if (value < 0 || value > static_cast<long long>(std::numeric_limits<T>::max())) {
    throw Error(Errc::invalid_argument,
                std::string(field) + " = " + std::to_string(value) + " does not fit the bundle header");
  }
  return static_cast<T>(value);
}

}  // namespace

std::size_t bundle_header_size(int n_weights, int m_images) {
  const auto m = static_cast<std::size_t>(m_images);
  return kFixedHeader + 4 * m * static_cast<std::size_t>(n_weights) + 4 * m;
}

std::size_t bundle_size(const NetworkArch& arch, int n_weights, int m_images) {
  return bundle_header_size(n_weights, m_images) +
         static_cast<std::size_t>(n_weights) * param_count(arch) * (kBundleBitsPerParam / 8);
}

std::vector<std::uint8_t> serialize(const ThetaBank& bank, const CombinerSpec& spec,
                                    const NetworkArch& arch, const ImageDims& dims) {
  validate(arch);
  if (arch.input_dim != 2 || arch.output_dim != dims.channels) {
    throw Error(Errc::shape_mismatch, "bundles store 2-input networks whose output width equals C");
  }
  if (bank.size() == 0 || bank.arch() != arch) {
    throw Error(Errc::shape_mismatch, "theta bank does not match the architecture");
  }
  if (static_cast<std::size_t>(spec.weight_sets()) != bank.size() ||
      spec.gamma.size() != spec.images()) {
    throw Error(Errc::shape_mismatch, "combiner shape does not match the theta bank");
  }
  const int n = static_cast<int>(bank.size());
  const int m = static_cast<int>(spec.images());

  Writer w(bundle_size(arch, n, m));
  w.raw(kMagic);
  w.u16(kBundleVersion);
  w.u8(checked_narrow<std::uint8_t>(n, "N"));
  w.u16(checked_narrow<std::uint16_t>(m, "M"));
  w.u8(checked_narrow<std::uint8_t>(arch.hidden_layers, "l"));
  w.u16(checked_narrow<std::uint16_t>(arch.neurons, "n"));
  w.f32(arch.omega0);
  w.u8(static_cast<std::uint8_t>(kBundleBitsPerParam));
  w.u16(checked_narrow<std::uint16_t>(dims.height, "H"));
  w.u16(checked_narrow<std::uint16_t>(dims.width, "W"));
  w.u8(checked_narrow<std::uint8_t>(dims.channels, "C"));
  for (Eigen::Index i = 0; i < spec.alpha.rows(); ++i) {
    for (Eigen::Index j = 0; j < spec.alpha.cols(); ++j) w.f32(spec.alpha(i, j));
  }
  for (Eigen::Index i = 0; i < spec.gamma.size(); ++i) w.f32(spec.gamma(i));
  for (const auto& theta : bank.sets()) {
    for (Eigen::Index k = 0; k < theta.values().size(); ++k) w.u16(double_to_half(theta.values()(k)));
  }
  return w.take();
}

Bundle deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size()) {
    throw Error(Errc::truncated_payload, "bundle shorter than its magic");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(Errc::bad_magic, "not an INRB bundle");
  }
  Reader r(bytes.subspan(kMagic.size()));
  const std::uint16_t version = r.u16();
  if (version != kBundleVersion) {
    throw Error(Errc::version_mismatch, "bundle version " + std::to_string(version) +
                                            ", reader supports " + std::to_string(kBundleVersion));
  }
  Bundle b;
  const int n = r.u8();
  const int m = r.u16();
  b.arch.hidden_layers = r.u8();
  b.arch.neurons = r.u16();
  b.arch.omega0 = r.f32();
  b.bits_per_param = r.u8();
  if (b.bits_per_param != kBundleBitsPerParam) {
    throw Error(Errc::unsupported_bit_width,
                "B_P = " + std::to_string(b.bits_per_param) + ", version 1 stores 16-bit weights");
  }
  b.dims.height = r.u16();
  b.dims.width = r.u16();
  b.dims.channels = r.u8();
  b.arch.input_dim = 2;
  b.arch.output_dim = b.dims.channels;
  if (n < 1 || m < n || b.dims.height < 1 || b.dims.width < 1 || b.dims.channels < 1) {
    throw Error(Errc::length_mismatch, "header declares an empty or inconsistent shape");
  }
  try {
    validate(b.arch);
  } catch (const Error& e) {
    throw Error(Errc::length_mismatch, std::string("header architecture invalid: ") + e.what());
  }

  const std::size_t expected_rest = bundle_size(b.arch, n, m) - kFixedHeader;
  if (r.remaining() < expected_rest) {
    throw Error(Errc::truncated_payload, "payload has " + std::to_string(r.remaining()) +
                                             " bytes, header implies " + std::to_string(expected_rest));
  }
  if (r.remaining() > expected_rest) {
    throw Error(Errc::length_mismatch, "payload has " + std::to_string(r.remaining()) +
                                           " bytes, header implies " + std::to_string(expected_rest));
  }

  b.spec.alpha.resize(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) b.spec.alpha(i, j) = r.f32();
  }
  b.spec.gamma.resize(m);
  for (int i = 0; i < m; ++i) b.spec.gamma(i) = r.f32();

  const auto p = static_cast<Eigen::Index>(param_count(b.arch));
  std::vector<WeightSet> sets;
  sets.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd values(p);
    for (Eigen::Index k = 0; k < p; ++k) values(k) = half_to_double(r.u16());
    sets.emplace_back(b.arch, std::move(values));
  }
  b.bank = ThetaBank(std::move(sets));
  return b;
}

ThetaBank quantize_bank(const ThetaBank& bank) {
  std::vector<WeightSet> sets;
  sets.reserve(bank.size());
  for (const auto& theta : bank.sets()) {
    WeightSet q = theta;
    for (Eigen::Index k = 0; k < q.values().size(); ++k) q.values()(k) = quantize_half(q.values()(k));
    sets.push_back(std::move(q));
  }
  return ThetaBank(std::move(sets));
}

void write_bundle(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::file_error, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::file_error, "short write to " + path.string());
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_error, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Bundle load_bundle(const std::filesystem::path& path) { return deserialize(read_file_bytes(path)); }

}  // namespace inrc
