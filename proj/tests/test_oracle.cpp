#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "egpu/oracle.hpp"

using namespace egpu::oracle;

TEST(Dft, DeltaGivesOnes) {
  ComplexVector x(64, 0.0);
  x[0] = 1.0;
  for (const auto& v : dft_reference(x)) EXPECT_NEAR(std::abs(v - std::complex<double>(1.0)), 0.0, 1e-12);
}

TEST(Dft, ConstantGivesScaledDelta) {
  ComplexVector x(32, 1.0);
  auto y = dft_reference(x);
  EXPECT_NEAR(std::abs(y[0] - 32.0), 0.0, 1e-12);
  for (std::size_t k = 1; k < y.size(); ++k) EXPECT_NEAR(std::abs(y[k]), 0.0, 1e-12);
}

// A pure tone at bin m concentrates all energy there.
TEST(Dft, ToneLandsInItsBin) {
  const std::size_t n = 48, m = 5;
  ComplexVector x(n);
  for (std::size_t j = 0; j < n; ++j) x[j] = std::polar(1.0, 2 * std::numbers::pi * double(j * m) / double(n));
  auto y = dft_reference(x);
  for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(std::abs(y[k]), k == m ? double(n) : 0.0, 1e-9);
}

TEST(Dft, LinearAndParseval) {
  auto a = random_vector(100, 1), b = random_vector(100, 2);
  ComplexVector s(100);
  for (int i = 0; i < 100; ++i) s[i] = 2.0 * a[i] - b[i];
  auto fa = dft_reference(a), fb = dft_reference(b), fs = dft_reference(s);
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(std::abs(fs[i] - (2.0 * fa[i] - fb[i])), 0.0, 1e-10);
  EXPECT_NEAR(energy(fa), 100.0 * energy(a), 1e-8 * energy(fa));
}

TEST(DigitReverse, Examples) {
  EXPECT_EQ(digit_reverse(1 + 2 * 4 + 3 * 16, 4, 3), 3u + 2 * 4 + 1 * 16);
  EXPECT_EQ(digit_reverse(7 + 4 * 8 + 3 * 64, 8, 3), 3u + 4 * 8 + 7 * 64);
  EXPECT_EQ(digit_reverse(1, 2, 10), 512u);
  EXPECT_EQ(digit_reverse(0, 16, 3), 0u);
}

TEST(DigitReverse, Involution) {
  for (unsigned radix : {2u, 4u, 8u, 16u})
    for (unsigned digits = 1; digits <= 3; ++digits) {
      std::uint64_t n = 1;
      for (unsigned d = 0; d < digits; ++d) n *= radix;
      std::vector<int> seen(n, 0);
      for (std::uint64_t i = 0; i < n; ++i) {
        auto r = digit_reverse(i, radix, digits);
        ASSERT_LT(r, n);
        ++seen[r];
        EXPECT_EQ(digit_reverse(r, radix, digits), i);
      }
      for (auto s : seen) EXPECT_EQ(s, 1);
    }
}

TEST(Compare, Stats) {
  ComplexVector a{{1, 0}, {0, 2}}, b{{1, 0}, {0, 4}};
  auto s = compare(a, b);
  EXPECT_DOUBLE_EQ(s.max_abs_err, 2.0);
  EXPECT_DOUBLE_EQ(s.max_rel_err, 0.5);
  EXPECT_DOUBLE_EQ(s.rms_err, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(compare(a, a).max_abs_err, 0.0);
  EXPECT_THROW(compare(a, ComplexVector(3)), std::invalid_argument);
}

TEST(RandomVector, DeterministicAndBounded) {
  auto a = random_vector(1000, 42), b = random_vector(1000, 42), c = random_vector(1000, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (const auto& x : a) {
    EXPECT_GE(x.real(), -1.0);
    EXPECT_LT(x.real(), 1.0);
    EXPECT_GE(x.imag(), -1.0);
    EXPECT_LT(x.imag(), 1.0);
  }
}
