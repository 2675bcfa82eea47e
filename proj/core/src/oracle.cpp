#include "egpu/oracle.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace egpu::oracle {

ComplexVector dft_reference(const ComplexVector& input) {
  const std::size_t n = input.size();
  ComplexVector out(n);
  if (n == 0) return out;
  // exp(-2 pi i m / N) for m = nk mod N, tabulated once
  std::vector<std::complex<double>> w(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double a = -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
    w[m] = {std::cos(a), std::sin(a)};
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0;
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      acc += input[j] * w[m];
      m += k;
      if (m >= n) m -= n;
    }
    out[k] = acc;
  }
  return out;
}

std::uint64_t digit_reverse(std::uint64_t index, unsigned radix, unsigned digits) {
  std::uint64_t r = 0;
  for (unsigned d = 0; d < digits; ++d) {
    r = r * radix + index % radix;
    index /= radix;
  }
  return r;
}

ErrorStats compare(const ComplexVector& a, const ComplexVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("compare: length mismatch");
  ErrorStats s;
  if (a.empty()) return s;
  double peak = 0, sq = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = std::abs(a[i] - b[i]);
    s.max_abs_err = std::max(s.max_abs_err, e);
    sq += e * e;
    peak = std::max(peak, std::abs(b[i]));
  }
  s.rms_err = std::sqrt(sq / static_cast<double>(a.size()));
  s.max_rel_err = peak > 0 ? s.max_abs_err / peak : s.max_abs_err;
  return s;
}

double energy(const ComplexVector& v) {
  double e = 0;
  for (const auto& x : v) e += std::norm(x);
  return e;
}

ComplexVector random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ComplexVector v(n);
  for (auto& x : v) {
    const double re = u(rng);
    x = {re, u(rng)};
  }
  return v;
}

}  // namespace egpu::oracle
