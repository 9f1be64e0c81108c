#include "inrc/imaging.hpp"
#include "inrc/png_io.hpp"
#include "inrc/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace inrc {
namespace {

namespace fs = std::filesystem;

ImageTensor random_image(std::mt19937_64& rng, int h, int w, int c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(h * w * c));
  for (auto& x : v) x = u(rng);
  return {h, w, c, std::move(v)};
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "inrc_unit";
  fs::create_directories(dir);
  return dir / name;
}

TEST(CoordGrid, TwoByTwo) {
  const CoordGrid g = coord_grid(2, 2);
  ASSERT_EQ(g.size(), 4u);
  const double expect[4][2] = {{-1, -1}, {1, -1}, {-1, 1}, {1, 1}};
  for (int p = 0; p < 4; ++p) {
    EXPECT_EQ(g.points(0, p), expect[p][0]);
    EXPECT_EQ(g.points(1, p), expect[p][1]);
  }
}

TEST(CoordGrid, SingleAndSpacing) {
  const CoordGrid one = coord_grid(1, 1);
  EXPECT_EQ(one.points(0, 0), 0.0);
  EXPECT_EQ(one.points(1, 0), 0.0);
  const CoordGrid g = coord_grid(3, 5);
  EXPECT_DOUBLE_EQ(g.points(0, 1) - g.points(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(g.points(1, 5) - g.points(1, 0), 1.0);
  EXPECT_THROW(coord_grid(0, 3), Error);
}

TEST(CoordGrid, EntriesInRangeAndCornersExact) {
  for (int h : {2, 3, 17, 64}) {
    for (int w : {2, 5, 31}) {
      const CoordGrid g = coord_grid(h, w);
      EXPECT_LE(g.points.cwiseAbs().maxCoeff(), 1.0);
      const Eigen::Index last = g.points.cols() - 1;
      EXPECT_EQ(g.points(0, 0), -1.0);
      EXPECT_EQ(g.points(1, 0), -1.0);
      EXPECT_EQ(g.points(0, last), 1.0);
      EXPECT_EQ(g.points(1, last), 1.0);
      EXPECT_EQ(g.points(0, w - 1), 1.0);
      EXPECT_EQ(g.points(1, last - (w - 1)), 1.0);
    }
  }
}

TEST(ImageTensor, ClampsAndChecksChannels) {
  const ImageTensor img(1, 2, 1, {-0.5, 1.5});
  EXPECT_EQ(img.at(0, 0, 0), 0.0);
  EXPECT_EQ(img.at(0, 1, 0), 1.0);
  const ImageTensor s(1, 1, 1, {-3.0}, PixelRange::signed_unit);
  EXPECT_EQ(s.at(0, 0, 0), -1.0);
  EXPECT_THROW(ImageTensor(2, 2, 2), Error);
  EXPECT_THROW(ImageTensor(2, 2, 1, {0.0}), Error);
}

TEST(ImageTensor, RangeConversionRoundTrip) {
  std::mt19937_64 rng(1);
  const ImageTensor img = random_image(rng, 3, 4, 3);
  const ImageTensor back = img.to_signed().to_unit();
  for (std::size_t k = 0; k < img.values().size(); ++k) EXPECT_NEAR(back.values()[k], img.values()[k], 1e-15);
}

TEST(Psnr, IdenticalIsInfinite) {
  std::mt19937_64 rng(2);
  const ImageTensor a = random_image(rng, 4, 4, 3);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
}

TEST(Psnr, UniformErrorAnalytic) {
  const ImageTensor a(2, 2, 1, {0.2, 0.4, 0.6, 0.8});
  const ImageTensor b(2, 2, 1, {0.3, 0.3, 0.7, 0.7});
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-10);
}

TEST(Psnr, MatchesLoopOracleAndIsSymmetric) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    const ImageTensor a = random_image(rng, 7, 5, 3);
    const ImageTensor b = random_image(rng, 7, 5, 3);
    double sum = 0.0;
    for (int r = 0; r < 7; ++r) {
      for (int c = 0; c < 5; ++c) {
        for (int ch = 0; ch < 3; ++ch) {
          const double d = a.at(r, c, ch) - b.at(r, c, ch);
          sum += d * d;
        }
      }
    }
    const double oracle = 10.0 * std::log10(1.0 / (sum / 105.0));
    EXPECT_NEAR(psnr(a, b), oracle, 1e-10);
    EXPECT_EQ(psnr(a, b), psnr(b, a));
  }
  EXPECT_THROW(psnr(ImageTensor(2, 2, 1), ImageTensor(2, 3, 1)), Error);
}

TEST(Downsample, ConstantAndHandCase) {
  std::vector<double> v(8 * 6 * 3, 0.37);
  const ImageTensor c = downsample2x(ImageTensor(8, 6, 3, v));
  EXPECT_EQ(c.height(), 4);
  EXPECT_EQ(c.width(), 3);
  for (double x : c.values()) EXPECT_DOUBLE_EQ(x, 0.37);
  const ImageTensor tiny = downsample2x(ImageTensor(2, 2, 1, {0, 0, 1, 1}));
  EXPECT_EQ(tiny.values().size(), 1u);
  EXPECT_EQ(tiny.at(0, 0, 0), 0.5);
  EXPECT_THROW(downsample2x(ImageTensor(3, 4, 1)), Error);
}

TEST(Downsample, MatchesBoxOracle) {
  std::mt19937_64 rng(4);
  const ImageTensor img = random_image(rng, 4, 4, 3);
  const ImageTensor d = downsample2x(img);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const double box = (img.at(2 * r, 2 * c, ch) + img.at(2 * r, 2 * c + 1, ch) + img.at(2 * r + 1, 2 * c, ch) +
                            img.at(2 * r + 1, 2 * c + 1, ch)) /
                           4.0;
        EXPECT_EQ(d.at(r, c, ch), box);
      }
    }
  }
}

TEST(Residual, Contract) {
  std::mt19937_64 rng(5);
  const ImageTensor a = random_image(rng, 5, 5, 3);
  const ImageTensor same = residual(a, a);
  for (double x : same.values()) EXPECT_EQ(x, 0.0);
  ImageTensor b = a;
  b.set(2, 3, 1, a.at(2, 3, 1) > 0.5 ? 0.0 : 1.0);
  const ImageTensor r = residual(a, b);
  for (int row = 0; row < 5; ++row) {
    for (int col = 0; col < 5; ++col) {
      for (int ch = 0; ch < 3; ++ch) {
        EXPECT_EQ(r.at(row, col, ch), (row == 2 && col == 3 && ch == 1) ? 1.0 : 0.0);
      }
    }
  }
  const ImageTensor c = random_image(rng, 5, 5, 3);
  const ImageTensor rc = residual(a, c);
  EXPECT_EQ(*std::max_element(rc.values().begin(), rc.values().end()), 1.0);
}

TEST(ChannelMatrix, LayoutAndInverse) {
  std::mt19937_64 rng(6);
  const ImageTensor img = random_image(rng, 3, 4, 3);
  const Eigen::MatrixXd m = to_channel_matrix(img);
  ASSERT_EQ(m.rows(), 3);
  ASSERT_EQ(m.cols(), 12);
  EXPECT_NEAR(m(2, 1 * 4 + 3), 2.0 * img.at(1, 3, 2) - 1.0, 1e-15);
  const ImageTensor back = from_network_output(m, 3, 4);
  for (std::size_t k = 0; k < img.values().size(); ++k) EXPECT_NEAR(back.values()[k], img.values()[k], 1e-15);
  Eigen::MatrixXd wild = m;
  wild(0, 0) = 5.0;
  wild(1, 0) = -5.0;
  const ImageTensor clamped = from_network_output(wild, 3, 4);
  EXPECT_EQ(clamped.at(0, 0, 0), 1.0);
  EXPECT_EQ(clamped.at(0, 0, 1), 0.0);
}

TEST(Png, RoundTripWithinOneLevel) {
  std::mt19937_64 rng(7);
  for (int c : {1, 3}) {
    const ImageTensor img = random_image(rng, 9, 13, c);
    const fs::path p = temp_path("rt" + std::to_string(c) + ".png");
    save_png(img, p);
    const ImageTensor back = load_png(p);
    ASSERT_EQ(back.dims(), img.dims());
    for (std::size_t k = 0; k < img.values().size(); ++k) {
      EXPECT_LE(std::abs(back.values()[k] - img.values()[k]), 1.0 / 255.0 + 1e-12);
    }
  }
}

TEST(Png, HalfUpRounding) {
  // 0.5 * 255 = 127.5 exactly, so half-up gives 128.
  const ImageTensor img(1, 3, 1, {0.5, 0.25, 0.75});
  const fs::path p = temp_path("round.png");
  save_png(img, p);
  const ImageTensor back = load_png(p);
  EXPECT_EQ(back.at(0, 0, 0), 128.0 / 255.0);
  EXPECT_EQ(back.at(0, 1, 0), 64.0 / 255.0);
  EXPECT_EQ(back.at(0, 2, 0), 191.0 / 255.0);
}

TEST(Png, Errors) {
  try {
    load_png(temp_path("does_not_exist.png"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::file_error);
  }
  const fs::path junk = temp_path("junk.png");
  std::ofstream(junk) << "not a png at all";
  try {
    load_png(junk);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::file_error);
  }
}

TEST(Png, RejectsAlphaPaletteAndSixteenBit) {
  for (const char* name : {"rgba.png", "gray16.png", "palette.png"}) {
    try {
      load_png(fs::path(INRC_TEST_DATA_DIR) / "unsupported" / name);
      FAIL() << name;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::unsupported_png) << name;
    }
  }
}

TEST(Png, CifarFixtureDims) {
  const ImageTensor img = load_png(fs::path(INRC_TEST_DATA_DIR) / "cifar10" / "test_00.png");
  EXPECT_EQ(img.dims(), (ImageDims{32, 32, 3}));
}

TEST(Reconstruct, IndexAndScale) {
  NetworkArch a;
  a.hidden_layers = 2;
  a.neurons = 8;
  const ThetaBank bank({init_weights(a, 1), init_weights(a, 2)});
  const Bundle b = deserialize(serialize(bank, default_combiner(2, 3), a, ImageDims{6, 10, 3}));
  EXPECT_EQ(reconstruct(b, 2, 1.0).dims(), (ImageDims{6, 10, 3}));
  EXPECT_EQ(reconstruct(b, 1, 2.0).dims(), (ImageDims{12, 20, 3}));
  EXPECT_EQ(reconstruct(b, 3, 0.5).dims(), (ImageDims{3, 5, 3}));
  try {
    reconstruct(b, 4, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::index_out_of_range);
  }
  EXPECT_THROW(reconstruct(b, 0, 1.0), Error);
  EXPECT_THROW(reconstruct(b, 1, 0.0), Error);
}

TEST(Reconstruct, CornersAgreeAcrossScalesAndStayInRange) {
  NetworkArch a;
  a.hidden_layers = 3;
  a.neurons = 16;
  const ThetaBank bank({init_weights(a, 3), init_weights(a, 4)});
  const Bundle b = deserialize(serialize(bank, default_combiner(2, 2), a, ImageDims{9, 7, 3}));
  const ImageTensor s1 = reconstruct(b, 2, 1.0);
  const ImageTensor s2 = reconstruct(b, 2, 2.0);
  const int corners[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (const auto& c : corners) {
    for (int ch = 0; ch < 3; ++ch) {
      const double v1 = s1.at(c[0] * (s1.height() - 1), c[1] * (s1.width() - 1), ch);
      const double v2 = s2.at(c[0] * (s2.height() - 1), c[1] * (s2.width() - 1), ch);
      EXPECT_NEAR(v1, v2, 1e-12);
    }
  }
  for (double v : s2.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Montage, StackingAndRotation) {
  std::mt19937_64 rng(8);
  const ImageTensor a = random_image(rng, 2, 3, 3);
  const ImageTensor b = random_image(rng, 2, 4, 3);
  const ImageTensor h = hstack({a, b});
  EXPECT_EQ(h.dims(), (ImageDims{2, 7, 3}));
  EXPECT_EQ(h.at(1, 4, 2), b.at(1, 1, 2));
  const ImageTensor v = vstack({a, a});
  EXPECT_EQ(v.dims(), (ImageDims{4, 3, 3}));
  EXPECT_EQ(v.at(3, 2, 0), a.at(1, 2, 0));
  const ImageTensor r = rotate90(a);
  EXPECT_EQ(r.dims(), (ImageDims{3, 2, 3}));
  // Counter-clockwise: the top-right pixel becomes the top-left.
  EXPECT_EQ(r.at(0, 0, 1), a.at(0, 2, 1));
  EXPECT_EQ(rotate90(rotate90(rotate90(rotate90(a)))), a);
  const ImageTensor avg = pixel_average({a, a});
  EXPECT_EQ(avg, a);
}

TEST(Synth, GlyphsAreBinaryAndDistinct) {
  const ImageTensor plus = synth::plus_sign(64);
  const ImageTensor cross = synth::cross_sign(64);
  EXPECT_EQ(plus.dims(), (ImageDims{64, 64, 3}));
  for (double v : plus.values()) EXPECT_TRUE(v == 0.0 || v == 1.0);
  EXPECT_EQ(plus.at(32, 32, 0), 1.0);
  EXPECT_EQ(plus.at(0, 0, 0), 0.0);
  EXPECT_EQ(cross.at(32, 32, 0), 1.0);
  EXPECT_LT(psnr(plus, cross), 20.0);
  EXPECT_EQ(synth::gaussian_blobs(16, 16, 3, 5), synth::gaussian_blobs(16, 16, 3, 5));
}

}  // namespace
}  // namespace inrc
