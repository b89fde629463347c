#include "doctest.h"

#include <cmath>
#include <random>

#include "uda/errors.hpp"
#include "uda/fourier.hpp"

using namespace uda;

namespace {

Vector random_vector(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g;
    Vector v(n);
    for (double& x : v) x = g(rng);
    return v;
}

void check_spectrum(const Spectrum& s, const Vector& re, const Vector& im) {
    REQUIRE(s.real.size() == re.size());
    for (std::size_t k = 0; k < re.size(); ++k) {
        CHECK(std::abs(s.real[k] - re[k]) < 1e-12);
        CHECK(std::abs(s.imag[k] - im[k]) < 1e-12);
    }
}

}  // namespace

TEST_CASE("dft: delta, DC and Nyquist inputs") {
    check_spectrum(dft(Vector{1, 0, 0, 0}), {1, 1, 1, 1}, {0, 0, 0, 0});
    check_spectrum(dft(Vector{1, 1, 1, 1}), {4, 0, 0, 0}, {0, 0, 0, 0});
    check_spectrum(dft(Vector{1, -1, 1, -1}), {0, 0, 4, 0}, {0, 0, 0, 0});
    // non-power-of-two path
    check_spectrum(dft(Vector{1, 1, 1}), {3, 0, 0}, {0, 0, 0});
    CHECK_THROWS_AS(dft(Vector{}), std::invalid_argument);
}

TEST_CASE("dft: fast and definitional transforms agree") {
    std::mt19937_64 rng(0);
    for (std::size_t d : {1u, 2u, 8u, 64u, 512u, 2048u}) {
        const Vector x = random_vector(rng, d);
        const Spectrum fast = dft(x);
        const Spectrum slow = dft_direct(x);
        for (std::size_t k = 0; k < d; ++k) {
            CHECK(std::abs(fast.real[k] - slow.real[k]) < 1e-10);
            CHECK(std::abs(fast.imag[k] - slow.imag[k]) < 1e-10);
        }
    }
}

TEST_CASE("dft: conjugate symmetry for real input") {
    std::mt19937_64 rng(1);
    for (std::size_t d : {5u, 16u}) {
        const Spectrum s = dft(random_vector(rng, d));
        for (std::size_t k = 1; k < d; ++k) {
            CHECK(std::abs(s.real[k] - s.real[d - k]) < 1e-10);
            CHECK(std::abs(s.imag[k] + s.imag[d - k]) < 1e-10);
        }
    }
}

TEST_CASE("dft: linearity") {
    std::mt19937_64 rng(2);
    for (std::size_t d : {6u, 32u}) {
        const Vector x = random_vector(rng, d);
        const Vector y = random_vector(rng, d);
        const double a = 1.7;
        const double b = -0.4;
        Vector z(d);
        for (std::size_t i = 0; i < d; ++i) z[i] = a * x[i] + b * y[i];
        const Spectrum sx = dft(x), sy = dft(y), sz = dft(z);
        for (std::size_t k = 0; k < d; ++k) {
            CHECK(std::abs(sz.real[k] - (a * sx.real[k] + b * sy.real[k])) < 1e-10);
            CHECK(std::abs(sz.imag[k] - (a * sx.imag[k] + b * sy.imag[k])) < 1e-10);
        }
    }
}

TEST_CASE("amplitude: moduli") {
    CHECK(amplitude(Spectrum{{3, 0}, {4, 0}}) == Vector{5, 0});
    CHECK(amplitude(Spectrum{{0, 0, 0}, {0, 0, 0}}) == Vector{0, 0, 0});
    const Vector m = amplitude_spectrum(Vector{1, 0, 0, 0});
    for (double v : m) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("amplitude_backward: one-dimensional sign function") {
    CHECK(amplitude_backward(Vector{2.0}, Vector{1.0}, 0.0)[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(amplitude_backward(Vector{-2.0}, Vector{1.0}, 0.0)[0] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_THROWS_AS(amplitude_backward(Vector{0.0}, Vector{1.0}, 0.0), EvaluationError);
    CHECK_NOTHROW(amplitude_backward(Vector{0.0}, Vector{1.0}, kAmplitudeEpsilon));
    CHECK_THROWS_AS(amplitude_backward(Vector{1.0, 2.0}, Vector{1.0}, 0.0), ShapeError);
}

TEST_CASE("amplitude_backward: matches finite differences at D = 8") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        const Vector x = random_vector(rng, 8);
        const Vector u = random_vector(rng, 8);
        const Vector g = amplitude_backward(x, u, 0.0);
        auto loss = [&](std::span<const double> v) { return dot(u, amplitude_spectrum(v)); };
        CHECK(finite_diff_check(loss, x, g, 1e-5).max_rel_error < 1e-4);
    }
    // odd length goes through the direct transform
    std::mt19937_64 rng(99);
    const Vector x = random_vector(rng, 7);
    const Vector u = random_vector(rng, 7);
    auto loss = [&](std::span<const double> v) { return dot(u, amplitude_spectrum(v)); };
    CHECK(finite_diff_check(loss, x, amplitude_backward(x, u, 0.0), 1e-5).max_rel_error < 1e-4);
}

TEST_CASE("parseval: exact cases and random sweep") {
    CHECK(parseval_residual(Vector{1, 0, 0, 0}) < 1e-12);
    CHECK(parseval_residual(Vector{1, 1, 1, 1}) < 1e-12);
    CHECK(parseval_residual(Vector{0, 0, 0}) == 0.0);
    std::mt19937_64 rng(3);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) worst = std::max(worst, parseval_residual(random_vector(rng, 2048)));
    CHECK(worst < 1e-9);
}

TEST_CASE("amplitude map contracts distances") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 16;
        const Vector a = random_vector(rng, d);
        const Vector b = random_vector(rng, d);
        const double lhs = std::sqrt(squared_distance(amplitude_spectrum(a), amplitude_spectrum(b)));
        const double rhs = std::sqrt(static_cast<double>(d) * squared_distance(a, b));
        CHECK(lhs <= rhs * (1.0 + 1e-12));
        // complex spectra: exact identity
        const Spectrum sa = dft(a), sb = dft(b);
        double complex_dist = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            complex_dist += std::pow(sa.real[k] - sb.real[k], 2) + std::pow(sa.imag[k] - sb.imag[k], 2);
        }
        CHECK(std::sqrt(complex_dist) == doctest::Approx(rhs).epsilon(1e-10));
    }
}
