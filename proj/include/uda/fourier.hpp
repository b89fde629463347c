#pragma once

#include <span>

#include "uda/numerics.hpp"

namespace uda {

// Unnormalized forward DFT convention throughout:
//   X_k = sum_n x_n (cos(2 pi k n / D) - i sin(2 pi k n / D))
// so that ||x||^2 = (1/D) ||X||^2.
struct Spectrum {
    Vector real;
    Vector imag;
};

// Radix-2 FFT when D is a power of two, the O(D^2) definition otherwise.
// Throws std::invalid_argument on an empty input.
Spectrum dft(std::span<const double> x);

// Always the O(D^2) definition.
Spectrum dft_direct(std::span<const double> x);

// Complex input variant used by the amplitude gradient.
Spectrum dft(std::span<const double> real, std::span<const double> imag);

bool is_power_of_two(std::size_t n);

// Training-time guard added under the square root of each modulus.
inline constexpr double kAmplitudeEpsilon = 1e-12;

// Elementwise sqrt(re^2 + im^2 + eps).
Vector amplitude(const Spectrum& s, double eps = 0.0);

// M(x) = amplitude(dft(x), eps).
Vector amplitude_spectrum(std::span<const double> x, double eps = 0.0);

// Gradient of <upstream, M(x)> with respect to x. With eps == 0 a zero-modulus
// component makes the gradient undefined and throws EvaluationError.
Vector amplitude_backward(std::span<const double> x, std::span<const double> upstream,
                          double eps = kAmplitudeEpsilon);

// | ||x||^2 - ||M(x)||^2 / D | / max(||x||^2, 1e-12)
double parseval_residual(std::span<const double> x);

}  // namespace uda
