#include "uda/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "uda/errors.hpp"

namespace uda {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

// In-place iterative Cooley-Tukey, forward sign.
void fft_radix2(Vector& re, Vector& im) {
    const std::size_t n = re.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const double step = -2.0 * std::numbers::pi / static_cast<double>(len);
        for (std::size_t k = 0; k < half; ++k) {
            // Twiddles computed directly rather than by recurrence to keep the
            // error per component near machine precision for large D.
            const double wr = std::cos(step * static_cast<double>(k));
            const double wi = std::sin(step * static_cast<double>(k));
            for (std::size_t start = 0; start < n; start += len) {
                const std::size_t a = start + k;
                const std::size_t b = a + half;
                const double tr = re[b] * wr - im[b] * wi;
                const double ti = re[b] * wi + im[b] * wr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
            }
        }
    }
}

Spectrum direct(std::span<const double> re, std::span<const double> im) {
    const std::size_t n = re.size();
    Spectrum s{Vector(n, 0.0), Vector(n, 0.0)};
    for (std::size_t k = 0; k < n; ++k) {
        double sr = 0.0;
        double si = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            // reduce k*j mod n before scaling to keep the angle small
            const double angle =
                -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / static_cast<double>(n);
            const double c = std::cos(angle);
            const double sn = std::sin(angle);
            sr += re[j] * c - im[j] * sn;
            si += re[j] * sn + im[j] * c;
        }
        s.real[k] = sr;
        s.imag[k] = si;
    }
    return s;
}

}  // namespace

Spectrum dft(std::span<const double> real, std::span<const double> imag) {
    if (real.empty()) throw std::invalid_argument("dft: empty input");
    if (real.size() != imag.size()) throw ShapeError("dft: real and imaginary parts differ in length");
    if (!is_power_of_two(real.size())) return direct(real, imag);
    Spectrum s{Vector(real.begin(), real.end()), Vector(imag.begin(), imag.end())};
    fft_radix2(s.real, s.imag);
    return s;
}

Spectrum dft(std::span<const double> x) {
    const Vector zeros(x.size(), 0.0);
    return dft(x, zeros);
}

Spectrum dft_direct(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("dft: empty input");
    const Vector zeros(x.size(), 0.0);
    return direct(x, zeros);
}

Vector amplitude(const Spectrum& s, double eps) {
    if (s.real.size() != s.imag.size()) throw ShapeError("amplitude: malformed spectrum");
    Vector m(s.real.size());
    for (std::size_t k = 0; k < m.size(); ++k) {
        m[k] = std::sqrt(s.real[k] * s.real[k] + s.imag[k] * s.imag[k] + eps);
    }
    return m;
}

Vector amplitude_spectrum(std::span<const double> x, double eps) { return amplitude(dft(x), eps); }

Vector amplitude_backward(std::span<const double> x, std::span<const double> upstream, double eps) {
    if (x.size() != upstream.size()) throw ShapeError("amplitude_backward: upstream size");
    const Spectrum s = dft(x);
    const Vector m = amplitude(s, eps);
    // dM_k/dx_n = (re_k cos(t) - im_k sin(t)) / M_k, t = 2 pi k n / D, hence
    // g_n = Re(sum_k c_k e^{+i t}) with c_k = u_k X_k / M_k, which equals
    // Re(DFT(conj(c)))_n.
    Vector cr(x.size());
    Vector ci(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (m[k] == 0.0) {
            throw EvaluationError("amplitude_backward: zero modulus at component " + std::to_string(k));
        }
        cr[k] = upstream[k] * s.real[k] / m[k];
        ci[k] = -upstream[k] * s.imag[k] / m[k];
    }
    return dft(cr, ci).real;
}

double parseval_residual(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("parseval_residual: empty input");
    const double energy = squared_norm(x);
    const double spectral = squared_norm(amplitude_spectrum(x)) / static_cast<double>(x.size());
    return std::abs(energy - spectral) / std::max(energy, 1e-12);
}

}  // namespace uda
