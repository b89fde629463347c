#include "uda/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "uda/errors.hpp"

namespace uda {

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeError("dot: length " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("squared_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

Vector normalized(std::span<const double> a) {
    Vector out(a.begin(), a.end());
    const double n = norm(a);
    if (n > 0.0) {
        for (double& v : out) v /= n;
    }
    return out;
}

Vector affine(const Matrix& weight, std::span<const double> bias, std::span<const double> x) {
    if (weight.cols != x.size() || weight.rows != bias.size()) {
        throw ShapeError("affine: weight " + std::to_string(weight.rows) + "x" + std::to_string(weight.cols) +
                         ", bias " + std::to_string(bias.size()) + ", input " + std::to_string(x.size()));
    }
    Vector y(weight.rows);
    for (std::size_t r = 0; r < weight.rows; ++r) {
        const double* w = weight.data.data() + r * weight.cols;
        double s = bias[r];
        for (std::size_t c = 0; c < weight.cols; ++c) s += w[c] * x[c];
        y[r] = s;
    }
    return y;
}

bool all_finite(std::span<const double> a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

std::size_t EncoderState::input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols; }

std::size_t EncoderState::output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows; }

void EncoderState::validate() const {
    if (layers.empty()) throw ShapeError("encoder has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (l.weight.rows == 0 || l.weight.cols == 0 || l.weight.data.size() != l.weight.rows * l.weight.cols) {
            throw ShapeError("layer " + std::to_string(i) + ": malformed weight");
        }
        if (l.bias.size() != l.weight.rows) throw ShapeError("layer " + std::to_string(i) + ": bias size");
        if (i > 0 && layers[i - 1].weight.rows != l.weight.cols) {
            throw ShapeError("layer " + std::to_string(i) + ": input width does not match previous output");
        }
        if (!all_finite(l.weight.data) || !all_finite(l.bias)) {
            throw ShapeError("layer " + std::to_string(i) + ": non-finite parameter");
        }
    }
}

EncoderState make_encoder(std::size_t input_dim, std::size_t hidden_width, std::size_t output_dim,
                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto glorot = [&rng](std::size_t out, std::size_t in) {
        Layer l{Matrix(out, in), Vector(out, 0.0)};
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (double& w : l.weight.data) w = u(rng);
        return l;
    };
    EncoderState s;
    s.layers.push_back(glorot(hidden_width, input_dim));
    s.layers.push_back(glorot(output_dim, hidden_width));
    s.activation = Activation::tanh;
    s.normalize = true;
    return s;
}

namespace {

double activate(Activation a, double z) { return a == Activation::tanh ? std::tanh(z) : z; }

double activation_slope(Activation a, double z) {
    if (a == Activation::identity) return 1.0;
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

}  // namespace

ForwardTrace forward(const EncoderState& state, std::span<const double> input) {
    if (state.layers.empty()) throw ShapeError("encoder has no layers");
    if (input.size() != state.input_dim()) {
        throw ShapeError("encode: input dim " + std::to_string(input.size()) + ", encoder expects " +
                         std::to_string(state.input_dim()));
    }
    ForwardTrace t;
    Vector x(input.begin(), input.end());
    for (std::size_t i = 0; i < state.layers.size(); ++i) {
        const Layer& l = state.layers[i];
        t.layer_inputs.push_back(x);
        Vector z = affine(l.weight, l.bias, x);
        if (i + 1 < state.layers.size()) {
            t.pre_activations.push_back(z);
            for (double& v : z) v = activate(state.activation, v);
        }
        x = std::move(z);
    }
    t.raw_output = x;
    t.output = state.normalize ? normalized(x) : x;
    return t;
}

Vector encode(const EncoderState& state, std::span<const double> input) { return forward(state, input).output; }

std::vector<Layer> zero_gradients(const EncoderState& state) {
    std::vector<Layer> g;
    g.reserve(state.layers.size());
    for (const Layer& l : state.layers) g.push_back(Layer{Matrix(l.weight.rows, l.weight.cols), Vector(l.bias.size())});
    return g;
}

Vector backprop_accumulate(const EncoderState& state, const ForwardTrace& trace,
                           std::span<const double> output_grad, std::vector<Layer>& accum) {
    if (output_grad.size() != state.output_dim()) throw ShapeError("backprop: output gradient size");
    if (accum.size() != state.layers.size()) throw ShapeError("backprop: gradient buffer layer count");

    Vector g(output_grad.begin(), output_grad.end());
    if (state.normalize) {
        // d(z/|z|) = (g - y (y.g)) / |z|
        const double n = norm(trace.raw_output);
        if (n > 0.0) {
            const double yg = dot(trace.output, g);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = (g[i] - trace.output[i] * yg) / n;
        }
    }
    for (std::size_t li = state.layers.size(); li-- > 0;) {
        const Layer& l = state.layers[li];
        Layer& acc = accum[li];
        if (acc.weight.rows != l.weight.rows || acc.weight.cols != l.weight.cols) {
            throw ShapeError("backprop: gradient buffer shape");
        }
        const Vector& x = trace.layer_inputs[li];
        for (std::size_t r = 0; r < l.weight.rows; ++r) {
            acc.bias[r] += g[r];
            double* w = acc.weight.data.data() + r * l.weight.cols;
            for (std::size_t c = 0; c < l.weight.cols; ++c) w[c] += g[r] * x[c];
        }
        Vector gx(l.weight.cols, 0.0);
        for (std::size_t r = 0; r < l.weight.rows; ++r) {
            const double* w = l.weight.data.data() + r * l.weight.cols;
            for (std::size_t c = 0; c < l.weight.cols; ++c) gx[c] += w[c] * g[r];
        }
        if (li > 0) {
            const Vector& z = trace.pre_activations[li - 1];
            for (std::size_t c = 0; c < gx.size(); ++c) gx[c] *= activation_slope(state.activation, z[c]);
        }
        g = std::move(gx);
    }
    return g;
}

EncoderGradients backprop(const EncoderState& state, std::span<const double> input,
                          std::span<const double> output_grad) {
    const ForwardTrace trace = forward(state, input);
    EncoderGradients out;
    out.layers = zero_gradients(state);
    out.input = backprop_accumulate(state, trace, output_grad, out.layers);
    return out;
}

std::size_t parameter_count(const EncoderState& state) {
    std::size_t n = 0;
    for (const Layer& l : state.layers) n += l.weight.data.size() + l.bias.size();
    return n;
}

Vector flatten(const std::vector<Layer>& layers) {
    Vector flat;
    for (const Layer& l : layers) {
        flat.insert(flat.end(), l.weight.data.begin(), l.weight.data.end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

void assign(std::vector<Layer>& layers, std::span<const double> flat) {
    std::size_t total = 0;
    for (const Layer& l : layers) total += l.weight.data.size() + l.bias.size();
    if (total != flat.size()) throw ShapeError("assign: expected " + std::to_string(total) + " parameters");
    std::size_t k = 0;
    for (Layer& l : layers) {
        for (double& w : l.weight.data) w = flat[k++];
        for (double& b : l.bias) b = flat[k++];
    }
}

double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-12});
}

GradCheckReport finite_diff_check(const std::function<double(std::span<const double>)>& loss,
                                  std::span<const double> point, std::span<const double> analytic, double h) {
    if (point.size() != analytic.size()) throw ShapeError("finite_diff_check: gradient size mismatch");
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");

    GradCheckReport report;
    report.errors.reserve(point.size());
    Vector p(point.begin(), point.end());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + h;
        const double up = loss(p);
        p[i] = saved - h;
        const double down = loss(p);
        p[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw EvaluationError("finite_diff_check: non-finite loss at parameter " + std::to_string(i));
        }
        const double numeric = (up - down) / (2.0 * h);
        const double err = relative_error(analytic[i], numeric);
        report.analytic.push_back(analytic[i]);
        report.numeric.push_back(numeric);
        report.errors.push_back(err);
        report.max_rel_error = std::max(report.max_rel_error, err);
    }
    return report;
}

}  // namespace uda
