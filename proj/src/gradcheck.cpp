#include "uda/gradcheck.hpp"

#include <algorithm>
#include <random>

#include "uda/fourier.hpp"
#include "uda/losses.hpp"
#include "uda/numerics.hpp"

namespace uda {

namespace {

Vector random_vector(std::mt19937_64& rng, std::size_t n, double sigma = 1.0) {
    std::normal_distribution<double> g(0.0, sigma);
    Vector v(n);
    for (double& x : v) x = g(rng);
    return v;
}

ClassifierHead random_head(std::mt19937_64& rng, std::size_t classes, std::size_t dim) {
    ClassifierHead h{Matrix(classes, dim), random_vector(rng, classes, 0.5)};
    h.weight.data = random_vector(rng, classes * dim);
    return h;
}

Vector concat(std::initializer_list<std::span<const double>> parts) {
    Vector out;
    for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

struct Runner {
    const GradCheckSuiteOptions& opt;
    GradCheckSuiteReport& report;

    void record(const std::string& name, std::uint64_t seed, const GradCheckReport& r) {
        report.cases.push_back(GradCheckCase{name, seed, r.max_rel_error, r.errors.size()});
        report.worst = std::max(report.worst, r.max_rel_error);
        if (!(r.max_rel_error < opt.tolerance)) report.passed = false;
    }
};

void check_encoder(Runner& run, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    EncoderState enc = make_encoder(6, 5, 4, rng());
    const Vector x = random_vector(rng, 6);
    const Vector u = random_vector(rng, 4);
    const EncoderGradients g = backprop(enc, x, u);

    auto by_params = [&](std::span<const double> p) {
        EncoderState e = enc;
        assign(e.layers, p);
        return dot(u, encode(e, x));
    };
    run.record("encoder_params", seed, finite_diff_check(by_params, flatten(enc.layers), flatten(g.layers), run.opt.h));
    auto by_input = [&](std::span<const double> in) { return dot(u, encode(enc, in)); };
    run.record("encoder_input", seed, finite_diff_check(by_input, x, g.input, run.opt.h));
}

void check_cross_entropy(Runner& run, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x1111);
    const std::size_t classes = 3;
    const std::size_t dim = 4;
    const ClassifierHead head = random_head(rng, classes, dim);
    const Vector f = random_vector(rng, dim);
    const int label = static_cast<int>(seed % classes);
    CrossEntropyResult r = cross_entropy(head, f, label);
    if (run.opt.inject_sign_flip) r.feature_grad[0] = -r.feature_grad[0];

    auto loss = [&](std::span<const double> p) {
        ClassifierHead h = head;
        std::copy(p.begin() + dim, p.begin() + dim + h.weight.data.size(), h.weight.data.begin());
        std::copy(p.end() - static_cast<long>(classes), p.end(), h.bias.begin());
        return cross_entropy(h, p.first(dim), label).value;
    };
    const Vector point = concat({f, head.weight.data, head.bias});
    const Vector analytic = concat({r.feature_grad, r.head_grad.weight.data, r.head_grad.bias});
    run.record("cross_entropy", seed, finite_diff_check(loss, point, analytic, run.opt.h));
}

std::vector<Vector> unflatten(std::span<const double> p, std::size_t n, std::size_t dim) {
    std::vector<Vector> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i].assign(p.begin() + i * dim, p.begin() + (i + 1) * dim);
    return out;
}

void check_triplet(Runner& run, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x2222);
    const std::size_t n = 6;
    const std::size_t dim = 4;
    const std::vector<int> labels = {0, 0, 0, 1, 1, 1};
    Vector flat = random_vector(rng, n * dim, 0.5);
    const FeatureLoss r = triplet_loss(unflatten(flat, n, dim), labels, 0.3);
    Vector analytic;
    for (const Vector& g : r.grads) analytic.insert(analytic.end(), g.begin(), g.end());
    auto loss = [&](std::span<const double> p) { return triplet_loss(unflatten(p, n, dim), labels, 0.3).value; };
    run.record("triplet", seed, finite_diff_check(loss, flat, analytic, run.opt.h));
}

void check_ccl(Runner& run, std::uint64_t seed, CclDenominator denominator, const char* name) {
    std::mt19937_64 rng(seed ^ 0x3333);
    const std::size_t anchors = 3;
    const std::size_t dim = 8;
    const std::size_t negs = 5;
    std::vector<Vector> neg_store;
    for (std::size_t i = 0; i < anchors * negs; ++i) neg_store.push_back(normalized(random_vector(rng, dim)));
    ContrastiveBatch base;
    for (std::size_t i = 0; i < anchors; ++i) {
        base.anchors.push_back(normalized(random_vector(rng, dim)));
        base.positives.push_back(normalized(random_vector(rng, dim)));
        std::vector<std::span<const double>> v;
        for (std::size_t k = 0; k < negs; ++k) v.emplace_back(neg_store[i * negs + k]);
        base.negatives.push_back(std::move(v));
    }
    const double tau = 0.07;
    const ContrastiveLoss r = ccl_loss(base, tau, denominator);
    Vector point;
    Vector analytic;
    for (std::size_t i = 0; i < anchors; ++i) {
        point.insert(point.end(), base.anchors[i].begin(), base.anchors[i].end());
        analytic.insert(analytic.end(), r.anchor_grads[i].begin(), r.anchor_grads[i].end());
    }
    for (std::size_t i = 0; i < anchors; ++i) {
        point.insert(point.end(), base.positives[i].begin(), base.positives[i].end());
        analytic.insert(analytic.end(), r.positive_grads[i].begin(), r.positive_grads[i].end());
    }
    auto loss = [&](std::span<const double> p) {
        ContrastiveBatch b = base;
        b.anchors = unflatten(p.first(anchors * dim), anchors, dim);
        b.positives = unflatten(p.subspan(anchors * dim), anchors, dim);
        return ccl_loss(b, tau, denominator).value;
    };
    run.record(name, seed, finite_diff_check(loss, point, analytic, run.opt.h));
}

void check_fourier_end_to_end(Runner& run, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x4444);
    const EncoderState enc = make_encoder(6, 8, 8, rng());
    const ClassifierHead head = random_head(rng, 3, 8);
    const Vector x = random_vector(rng, 6);
    const int label = static_cast<int>(seed % 3);

    const Vector f = encode(enc, x);
    const CrossEntropyResult r = fourier_ce(head, f, label);
    const EncoderGradients g = backprop(enc, x, r.feature_grad);
    const std::size_t enc_params = parameter_count(enc);

    auto loss = [&](std::span<const double> p) {
        EncoderState e = enc;
        assign(e.layers, p.first(enc_params));
        ClassifierHead h = head;
        std::copy(p.begin() + static_cast<long>(enc_params), p.end(), h.weight.data.begin());
        return fourier_ce(h, encode(e, x), label).value;
    };
    const Vector point = concat({flatten(enc.layers), head.weight.data});
    const Vector analytic = concat({flatten(g.layers), r.head_grad.weight.data});
    run.record("fourier_ce_end_to_end", seed, finite_diff_check(loss, point, analytic, run.opt.h));

    // the amplitude map alone, D = 8
    const Vector u = random_vector(rng, 8);
    const Vector ga = amplitude_backward(f, u, 0.0);
    auto amp = [&](std::span<const double> v) { return dot(u, amplitude_spectrum(v)); };
    run.record("amplitude", seed, finite_diff_check(amp, f, ga, run.opt.h));
}

// delta * CCL + gamma * (CE + triplet) + (1 - gamma) * Fourier CE through a shared encoder.
void check_combined_through_encoder(Runner& run, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x5555);
    const std::size_t dim = 8;
    const EncoderState enc = make_encoder(5, 6, dim, rng());
    const std::vector<int> labels = {0, 0, 1, 1};
    std::vector<Vector> inputs;
    for (int i = 0; i < 4; ++i) inputs.push_back(random_vector(rng, 5));
    const ClassifierHead head = random_head(rng, 2, dim);
    const ClassifierHead head_freq = random_head(rng, 2, dim);
    std::vector<Vector> neg_store;
    for (int i = 0; i < 6; ++i) neg_store.push_back(normalized(random_vector(rng, dim)));
    const double delta = 0.1;
    const double gamma = 0.7;
    const LossCoefficients c = combined_coefficients(0.0, 1.0, delta, gamma);

    auto evaluate = [&](const EncoderState& e, std::vector<Layer>* grads) {
        std::vector<ForwardTrace> traces;
        std::vector<Vector> feats;
        for (const Vector& x : inputs) {
            traces.push_back(forward(e, x));
            feats.push_back(traces.back().output);
        }
        std::vector<Vector> fg(feats.size(), Vector(dim, 0.0));
        double value = 0.0;
        const double inv = 1.0 / static_cast<double>(feats.size());
        for (std::size_t i = 0; i < feats.size(); ++i) {
            const auto ce = cross_entropy(head, feats[i], labels[i]);
            const auto fce = fourier_ce(head_freq, feats[i], labels[i]);
            value += inv * (c.spatial * ce.value + c.fourier * fce.value);
            for (std::size_t d = 0; d < dim; ++d) {
                fg[i][d] += inv * (c.spatial * ce.feature_grad[d] + c.fourier * fce.feature_grad[d]);
            }
        }
        const FeatureLoss tri = triplet_loss(feats, labels, 0.3);
        value += c.spatial * tri.value;
        ContrastiveBatch cb;
        for (std::size_t i = 0; i < feats.size(); ++i) {
            const std::size_t pos = i ^ 1u;
            cb.anchors.push_back(feats[i]);
            cb.positives.push_back(feats[pos]);
            std::vector<std::span<const double>> v;
            for (const Vector& n : neg_store) v.emplace_back(n);
            cb.negatives.push_back(std::move(v));
        }
        const ContrastiveLoss ccl = ccl_loss(cb, 0.07);
        value += c.ccl * ccl.value;
        if (grads) {
            for (std::size_t i = 0; i < feats.size(); ++i) {
                for (std::size_t d = 0; d < dim; ++d) {
                    fg[i][d] += c.spatial * tri.grads[i][d] + c.ccl * ccl.anchor_grads[i][d];
                    fg[i ^ 1u][d] += c.ccl * ccl.positive_grads[i][d];
                }
            }
            for (std::size_t i = 0; i < feats.size(); ++i) backprop_accumulate(e, traces[i], fg[i], *grads);
        }
        return value;
    };
    std::vector<Layer> grads = zero_gradients(enc);
    evaluate(enc, &grads);
    auto loss = [&](std::span<const double> p) {
        EncoderState e = enc;
        assign(e.layers, p);
        return evaluate(e, nullptr);
    };
    run.record("combined_through_encoder", seed, finite_diff_check(loss, flatten(enc.layers), flatten(grads), run.opt.h));
}

}  // namespace

GradCheckSuiteReport run_gradcheck_suite(const GradCheckSuiteOptions& options) {
    GradCheckSuiteReport report;
    Runner run{options, report};
    for (int s = 0; s < options.seeds; ++s) {
        const std::uint64_t seed = options.first_seed + static_cast<std::uint64_t>(s);
        check_encoder(run, seed);
        check_cross_entropy(run, seed);
        check_triplet(run, seed);
        check_ccl(run, seed, CclDenominator::with_positive, "ccl_with_positive");
        check_ccl(run, seed, CclDenominator::negatives_only, "ccl_negatives_only");
        check_fourier_end_to_end(run, seed);
        check_combined_through_encoder(run, seed);
    }
    return report;
}

}  // namespace uda
