#pragma once

#include "inrc/weight_space.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace inrc {

inline constexpr std::uint16_t kBundleVersion = 1;
inline constexpr int kBundleBitsPerParam = 16;

/// The compressed artifact: N half-precision weight sets plus everything
/// needed to render each of the M images.
///
/// Wire format, little-endian throughout:
///
///   "INRB"            4 bytes magic
///   u16 version       (1)
///   u8  N
///   u16 M
///   u8  l             hidden layers
///   u16 n             neurons per hidden layer
///   f32 omega0
///   u8  B_P           bits per stored weight (16 in version 1)
///   u16 H, u16 W, u8 C
///   f32 alpha[M*N]    row-major
///   f32 gamma[M]
///   N weight sets, layer 0 .. output layer, each layer's weights row-major
///   then its biases, every scalar an IEEE 754 binary16.
///
/// The network output width is C; the input width is fixed at 2.
struct Bundle {
  NetworkArch arch;
  ImageDims dims;
  CombinerSpec spec;
  ThetaBank bank;
  int bits_per_param = kBundleBitsPerParam;

  int n_weights() const { return static_cast<int>(bank.size()); }
  int m_images() const { return static_cast<int>(spec.images()); }
};

std::size_t bundle_header_size(int n_weights, int m_images);
std::size_t bundle_size(const NetworkArch& arch, int n_weights, int m_images);

/// Encodes the bank at half precision. The combiner and gamma go in the
/// header at single precision.
std::vector<std::uint8_t> serialize(const ThetaBank& bank, const CombinerSpec& spec,
                                    const NetworkArch& arch, const ImageDims& dims);

/// Decodes a bundle; every weight is widened exactly from its binary16
/// pattern. Throws bad_magic, version_mismatch, unsupported_bit_width,
/// truncated_payload or length_mismatch.
Bundle deserialize(std::span<const std::uint8_t> bytes);

/// Bank with every scalar rounded through binary16, i.e. what a reader of the
/// serialized bundle will see.
ThetaBank quantize_bank(const ThetaBank& bank);

void write_bundle(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
Bundle load_bundle(const std::filesystem::path& path);

}  // namespace inrc
