#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace uda {

using Vector = std::vector<double>;

// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);

// Returns a / ||a||; a zero vector is returned unchanged.
Vector normalized(std::span<const double> a);

// y = W x + b
Vector affine(const Matrix& weight, std::span<const double> bias, std::span<const double> x);

bool all_finite(std::span<const double> a);

enum class Activation : std::uint8_t { identity = 0, tanh = 1 };

struct Layer {
    Matrix weight;  // out x in
    Vector bias;    // out

    bool operator==(const Layer&) const = default;
};

// A stack of affine layers with an elementwise activation between consecutive
// layers (none after the last one) and optional L2 normalization of the output.
struct EncoderState {
    std::vector<Layer> layers;
    Activation activation = Activation::tanh;
    bool normalize = true;

    std::size_t input_dim() const;
    std::size_t output_dim() const;

    // Throws ShapeError when consecutive layers do not compose or a parameter
    // is not finite.
    void validate() const;

    bool operator==(const EncoderState&) const = default;
};

// Two-layer encoder with Glorot-uniform weights and zero biases.
EncoderState make_encoder(std::size_t input_dim, std::size_t hidden_width, std::size_t output_dim,
                          std::uint64_t seed);

// Intermediate values kept by the forward pass for backprop.
struct ForwardTrace {
    std::vector<Vector> layer_inputs;  // input of each layer
    std::vector<Vector> pre_activations;
    Vector raw_output;  // before normalization
    Vector output;
};

ForwardTrace forward(const EncoderState& state, std::span<const double> input);
Vector encode(const EncoderState& state, std::span<const double> input);

struct EncoderGradients {
    std::vector<Layer> layers;
    Vector input;
};

// Layer-shaped gradient buffers filled with zeros.
std::vector<Layer> zero_gradients(const EncoderState& state);

// Gradients of <output_grad, encode(state, input)> with respect to parameters and input.
EncoderGradients backprop(const EncoderState& state, std::span<const double> input,
                          std::span<const double> output_grad);

// Adds the parameter gradient for one sample into `accum` and returns the input gradient.
Vector backprop_accumulate(const EncoderState& state, const ForwardTrace& trace,
                           std::span<const double> output_grad, std::vector<Layer>& accum);

std::size_t parameter_count(const EncoderState& state);
Vector flatten(const std::vector<Layer>& layers);
void assign(std::vector<Layer>& layers, std::span<const double> flat);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::vector<double> errors;  // per parameter
    std::vector<double> analytic;
    std::vector<double> numeric;
};

// Relative error |a - n| / max(|a|, |n|, 1e-12).
double relative_error(double analytic, double numeric);

// Compares `analytic` against central differences (L(p + h e_i) - L(p - h e_i)) / 2h
// of `loss` around `point`. Throws EvaluationError when the loss is not finite.
GradCheckReport finite_diff_check(const std::function<double(std::span<const double>)>& loss,
                                  std::span<const double> point, std::span<const double> analytic,
                                  double h = 1e-5);

}  // namespace uda
