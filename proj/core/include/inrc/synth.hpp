#pragma once

#include "inrc/imaging.hpp"

#include <cstdint>

namespace inrc::synth {

// Procedural test images, all RGB in unit range.

/// White '+' on black; bar thickness is size/8 (at least 1 pixel).
ImageTensor plus_sign(int size);

/// White 'x' on black with the same stroke width as plus_sign.
ImageTensor cross_sign(int size);

/// Smooth sum of `blobs` random colored Gaussian blobs on a dark background.
ImageTensor gaussian_blobs(int height, int width, int blobs, std::uint64_t seed);

/// Colored sailboat-like scene (sky gradient, sea, hull, sail). Unrelated to
/// the glyphs; used as the default "different third" target.
ImageTensor sailboat(int size);

}  // namespace inrc::synth
