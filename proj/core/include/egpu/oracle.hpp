#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace egpu::oracle {

using ComplexVector = std::vector<std::complex<double>>;

// Naive O(N^2) DFT, X[k] = sum_n x[n] exp(-2 pi i n k / N).
ComplexVector dft_reference(const ComplexVector& input);

std::uint64_t digit_reverse(std::uint64_t index, unsigned radix, unsigned digits);

struct ErrorStats {
  double max_abs_err = 0;
  double max_rel_err = 0;  // normalized by max |b|
  double rms_err = 0;
};

// Throws std::invalid_argument on length mismatch.
ErrorStats compare(const ComplexVector& a, const ComplexVector& b);

double energy(const ComplexVector& v);

// Uniform [-1, 1) per component.
ComplexVector random_vector(std::size_t n, std::uint64_t seed);

}  // namespace egpu::oracle
