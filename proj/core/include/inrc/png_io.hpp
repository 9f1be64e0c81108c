#pragma once

#include "inrc/imaging.hpp"

#include <filesystem>

namespace inrc {

/// Reads an 8-bit RGB or grayscale PNG into unit range ([0,255] -> [0,1]).
/// Missing/unreadable files raise Errc::file_error; palette, alpha and
/// 16-bit images raise Errc::unsupported_png.
ImageTensor load_png(const std::filesystem::path& path);

/// Writes an 8-bit PNG (gray or RGB per channel count), rounding half up.
void save_png(const ImageTensor& img, const std::filesystem::path& path);

}  // namespace inrc
