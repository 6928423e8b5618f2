#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "nbaitv/image.hpp"
#include "nbaitv/image_io.hpp"

using namespace nbaitv;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "nbaitv_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST(Grid, RejectsZeroDimensionsAndLengthMismatch) {
  EXPECT_THROW(ImageGrid(0, 3), std::invalid_argument);
  EXPECT_THROW(ImageGrid(2, 0), std::invalid_argument);
  EXPECT_THROW(ImageGrid(2, 2, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST(Grid, RowMajorIndexing) {
  ImageGrid g(2, 3, std::vector<double>{0, 1, 2, 3, 4, 5});
  EXPECT_EQ(g(1, 0), 3.0);
  EXPECT_EQ(g(0, 2), 2.0);
  EXPECT_EQ(g.index(1, 2), 5u);
}

TEST(Grid, ShapeMismatchIsReported) {
  ImageGrid a(2, 3), b(3, 2);
  EXPECT_THROW(require_same_shape(a, b, "test"), std::invalid_argument);
  EXPECT_NO_THROW(require_same_shape(a, ImageGrid(2, 3), "test"));
}

TEST(ImageIo, LoadsSmallPgm8) {
  const auto p = temp_path("small.pgm");
  write_file(p, std::string("P5\n# comment\n2 2\n255\n") + std::string{'\x00', '\x80', '\xff', '\x40'});
  const ImageGrid g = load_image(p, ImageFormat::pgm8);
  ASSERT_EQ(g.height(), 2u);
  ASSERT_EQ(g.width(), 2u);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 128.0);
  EXPECT_EQ(g[2], 255.0);
  EXPECT_EQ(g[3], 64.0);
}

TEST(ImageIo, LoadsSinglePixel) {
  const auto p = temp_path("one.pgm");
  write_file(p, std::string("P5 1 1 255\n") + std::string{'\xff'});
  EXPECT_EQ(load_image(p)[0], 255.0);
}

TEST(ImageIo, RejectsBitDepthMismatchAndMissingFile) {
  const auto p = temp_path("small8.pgm");
  write_file(p, std::string("P5\n1 1\n255\n") + std::string{'\x01'});
  EXPECT_THROW(load_image(p, ImageFormat::pgm16), IoError);
  EXPECT_THROW(load_image(temp_path("does_not_exist.pgm")), IoError);
  const auto bad = temp_path("bad.pgm");
  write_file(bad, "P2\n1 1\n255\n1\n");
  EXPECT_THROW(load_image(bad), IoError);
  const auto truncated = temp_path("trunc.pgm");
  write_file(truncated, "P5\n4 4\n255\nab");
  EXPECT_THROW(load_image(truncated), IoError);
}

TEST(ImageIo, RoundTripIsExactForIntegerPixels) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d8(0, 255), d16(0, 65535);
  ImageGrid g8(16, 16), g16(16, 16);
  for (auto& v : g8) v = d8(rng);
  for (auto& v : g16) v = d16(rng);
  for (auto fmt : {ImageFormat::pgm8, ImageFormat::png8}) {
    const auto p = temp_path(fmt == ImageFormat::png8 ? "rt.png" : "rt.pgm");
    save_image(g8, p, fmt);
    EXPECT_EQ(load_image(p, fmt), g8);
    EXPECT_EQ(load_image(p), g8);
  }
  const auto p16 = temp_path("rt16.pgm");
  save_image(g16, p16, ImageFormat::pgm16, 65535.0);
  EXPECT_EQ(load_image(p16, ImageFormat::pgm16), g16);
}

TEST(ImageIo, SaveClampsOutOfRangePixels) {
  const auto p = temp_path("clamp.pgm");
  save_image(ImageGrid(1, 3, std::vector<double>{-3, 0, 300}), p, ImageFormat::pgm8, 255.0);
  const ImageGrid back = load_image(p);
  EXPECT_EQ(back, ImageGrid(1, 3, std::vector<double>{0, 0, 255}));
  save_image(ImageGrid(2, 2, 255.0), p, ImageFormat::pgm8);
  EXPECT_EQ(load_image(p), ImageGrid(2, 2, 255.0));
}

TEST(ImageIo, SaveRejectsNonPositivePeak) {
  EXPECT_THROW(save_image(ImageGrid(1, 1), temp_path("x.pgm"), ImageFormat::pgm8, 0.0), std::invalid_argument);
}

TEST(ImageIo, FormatNames) {
  EXPECT_EQ(parse_image_format("pgm16"), ImageFormat::pgm16);
  EXPECT_THROW(parse_image_format("jpeg"), std::invalid_argument);
  EXPECT_EQ(format_from_extension("a/b.png"), ImageFormat::png8);
  EXPECT_EQ(format_from_extension("a/b.pgm"), ImageFormat::pgm8);
}

TEST(CountIo, SmallRoundTrip) {
  const auto p = temp_path("counts.txt");
  const CountGrid c(2, 2, std::vector<std::int64_t>{0, 1, 2, 70000});
  save_counts(c, p);
  EXPECT_EQ(load_counts(p), c);
}

TEST(CountIo, RandomRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> d(0, 1000000);
  CountGrid c(13, 17);
  for (auto& v : c) v = d(rng);
  const auto p = temp_path("counts_rand.txt");
  save_counts(c, p);
  EXPECT_EQ(load_counts(p), c);
}

TEST(CountIo, MalformedFilesAreRejected) {
  const auto p = temp_path("bad_counts.txt");
  write_file(p, "");
  EXPECT_THROW(load_counts(p), IoError);
  write_file(p, "2 2\n1 2\n3\n");
  EXPECT_THROW(load_counts(p), IoError);
  write_file(p, "1 2\n1 -2\n");
  EXPECT_THROW(load_counts(p), IoError);
  write_file(p, "1 2\n1 x\n");
  EXPECT_THROW(load_counts(p), IoError);
  write_file(p, "1 1\n1\n5\n");
  EXPECT_THROW(load_counts(p), IoError);
}
