#include <gtest/gtest.h>

#include <random>

#include "nbaitv/metrics.hpp"
#include "nbaitv/phantom.hpp"
#include "oracles.hpp"

using namespace nbaitv;

namespace {

ImageGrid random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0, 255);
  ImageGrid g(h, w);
  for (auto& v : g) v = d(rng);
  return g;
}

}  // namespace

TEST(Psnr, IdenticalImagesAreInfinite) {
  const ImageGrid a = random_image(8, 8, 1);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
}

TEST(Psnr, ClosedFormConstantOffset) {
  EXPECT_NEAR(psnr(ImageGrid(10, 10, 0.0), ImageGrid(10, 10, 10.0), 255.0), 28.131, 1e-3);
  EXPECT_NEAR(psnr(ImageGrid(10, 10, 0.0), ImageGrid(10, 10, 10.0), 255.0), 10 * std::log10(65025.0 / 100.0), 1e-12);
}

TEST(Psnr, SymmetricAndMonotoneInNoise) {
  const ImageGrid a = random_image(16, 16, 2);
  const ImageGrid b = random_image(16, 16, 3);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  ImageGrid noise(16, 16);
  for (auto& v : noise) v = n(rng);
  double previous = INFINITY;
  for (double amp = 1e-3; amp <= 1e3; amp *= 10) {
    ImageGrid t = a;
    for (std::size_t k = 0; k < t.size(); ++k) t[k] += amp * noise[k];
    const double p = psnr(a, t);
    EXPECT_LT(p, previous);
    previous = p;
  }
}

TEST(Psnr, RejectsMismatchAndBadPeak) {
  EXPECT_THROW(psnr(ImageGrid(2, 2), ImageGrid(2, 3)), std::invalid_argument);
  EXPECT_THROW(psnr(ImageGrid(2, 2), ImageGrid(2, 2), 0.0), std::invalid_argument);
}

TEST(Ssim, IdenticalImagesAreExactlyOne) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const ImageGrid a = random_image(20, 24, s);
    EXPECT_EQ(ssim(a, a), 1.0);
  }
  const ImageGrid p = make_phantom(32, 32);
  EXPECT_EQ(ssim(p, p), 1.0);
}

TEST(Ssim, ConstantImagesClosedForm) {
  const double c = 100, d = 20, c1 = (0.01 * 255) * (0.01 * 255);
  const double want = (2 * c * (c + d) + c1) / (c * c + (c + d) * (c + d) + c1);
  EXPECT_NEAR(ssim(ImageGrid(16, 16, c), ImageGrid(16, 16, c + d)), want, 1e-12);
}

TEST(Ssim, MatchesDirectFormula) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const ImageGrid a = random_image(32, 32, 10 + s);
    const ImageGrid b = random_image(32, 32, 20 + s);
    EXPECT_NEAR(ssim(a, b), oracle::direct_ssim(a, b), 1e-9);
  }
  const ImageGrid p = make_phantom(32, 32);
  ImageGrid q = p;
  for (std::size_t k = 0; k < q.size(); k += 3) q[k] += 15.0;
  EXPECT_NEAR(ssim(p, q), oracle::direct_ssim(p, q), 1e-9);
}

TEST(Ssim, SymmetricUnderExchange) {
  const ImageGrid a = random_image(16, 16, 5);
  const ImageGrid b = random_image(16, 16, 6);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-15);
}

TEST(Ssim, CustomWindowMatchesDirectFormula) {
  const ImageGrid a = random_image(12, 12, 7);
  const ImageGrid b = random_image(12, 12, 8);
  const SsimParams params{7, 1.0, 0.02, 0.05, 100.0};
  EXPECT_NEAR(ssim(a, b, params), oracle::direct_ssim(a, b, 7, 1.0, 0.02, 0.05, 100.0), 1e-9);
}

TEST(Ssim, RejectsSmallImagesAndBadParams) {
  EXPECT_THROW(ssim(ImageGrid(10, 10), ImageGrid(10, 10)), std::invalid_argument);
  EXPECT_THROW(ssim(ImageGrid(12, 12), ImageGrid(12, 12), SsimParams{.window_size = 4}), std::invalid_argument);
  EXPECT_THROW(ssim(ImageGrid(12, 12), ImageGrid(12, 12), SsimParams{.k1 = 0.0}), std::invalid_argument);
}
