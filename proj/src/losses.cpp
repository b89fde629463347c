#include "uda/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "uda/errors.hpp"
#include "uda/fourier.hpp"

namespace uda {

HeadGradients zero_gradients(const ClassifierHead& head) {
    return HeadGradients{Matrix(head.weight.rows, head.weight.cols), Vector(head.bias.size(), 0.0)};
}

Vector logits(const ClassifierHead& head, std::span<const double> feature) {
    return affine(head.weight, head.bias, feature);
}

CrossEntropyResult cross_entropy(const ClassifierHead& head, std::span<const double> feature, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= head.num_classes()) {
        throw std::out_of_range("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                                std::to_string(head.num_classes()) + ")");
    }
    const Vector z = logits(head, feature);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double log_norm = zmax + std::log(sum);

    CrossEntropyResult r;
    r.value = log_norm - z[static_cast<std::size_t>(label)];
    r.head_grad = zero_gradients(head);
    r.feature_grad.assign(feature.size(), 0.0);
    for (std::size_t c = 0; c < z.size(); ++c) {
        const double g = std::exp(z[c] - log_norm) - (static_cast<int>(c) == label ? 1.0 : 0.0);
        r.head_grad.bias[c] = g;
        auto wrow = head.weight.row(c);
        auto grow = r.head_grad.weight.row(c);
        for (std::size_t d = 0; d < feature.size(); ++d) {
            grow[d] = g * feature[d];
            r.feature_grad[d] += g * wrow[d];
        }
    }
    return r;
}

FeatureLoss triplet_loss(const std::vector<Vector>& features, std::span<const int> labels, double margin) {
    if (features.size() != labels.size()) throw ShapeError("triplet_loss: labels and features differ in count");
    const std::size_t n = features.size();
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            dist[i * n + j] = dist[j * n + i] = std::sqrt(squared_distance(features[i], features[j]));
        }
    }

    FeatureLoss out;
    out.grads.assign(n, Vector(n ? features.front().size() : 0, 0.0));
    struct Active {
        std::size_t anchor, pos, neg;
    };
    std::vector<Active> active;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t pos = n;
        std::size_t neg = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = dist[i * n + j];
            if (labels[j] == labels[i]) {
                if (pos == n || d > dist[i * n + pos]) pos = j;
            } else if (neg == n || d < dist[i * n + neg]) {
                neg = j;
            }
        }
        if (pos == n || neg == n) continue;
        ++out.valid_anchors;
        const double hinge = dist[i * n + pos] - dist[i * n + neg] + margin;
        if (hinge > 0.0) {
            total += hinge;
            active.push_back({i, pos, neg});
        }
    }
    if (out.valid_anchors == 0) throw DegenerateError("triplet_loss: no anchor has both a positive and a negative");

    const double scale = 1.0 / static_cast<double>(out.valid_anchors);
    out.value = total * scale;
    for (const Active& t : active) {
        const Vector& a = features[t.anchor];
        const Vector& p = features[t.pos];
        const Vector& q = features[t.neg];
        const double dp = dist[t.anchor * n + t.pos];
        const double dn = dist[t.anchor * n + t.neg];
        for (std::size_t d = 0; d < a.size(); ++d) {
            const double up = dp > 0.0 ? (a[d] - p[d]) / dp : 0.0;
            const double un = dn > 0.0 ? (a[d] - q[d]) / dn : 0.0;
            out.grads[t.anchor][d] += scale * (up - un);
            out.grads[t.pos][d] -= scale * up;
            out.grads[t.neg][d] += scale * un;
        }
    }
    return out;
}

ContrastiveLoss ccl_loss(const ContrastiveBatch& batch, double tau, CclDenominator denominator) {
    if (!(tau > 0.0)) throw std::invalid_argument("ccl_loss: temperature must be positive");
    const std::size_t n = batch.anchors.size();
    if (batch.positives.size() != n || batch.negatives.size() != n) {
        throw ShapeError("ccl_loss: anchors, positives and negatives differ in count");
    }
    ContrastiveLoss out;
    out.anchor_grads.resize(n);
    out.positive_grads.resize(n);
    if (n == 0) return out;

    const double scale = 1.0 / static_cast<double>(n);
    std::vector<double> s;
    for (std::size_t i = 0; i < n; ++i) {
        const Vector& a = batch.anchors[i];
        const Vector& p = batch.positives[i];
        const auto& negs = batch.negatives[i];
        if (negs.empty()) throw DegenerateError("ccl_loss: anchor " + std::to_string(i) + " has no negatives");

        const double sp = dot(a, p) / tau;
        s.clear();
        for (const auto& neg : negs) s.push_back(dot(a, neg) / tau);
        double smax = *std::max_element(s.begin(), s.end());
        const bool with_pos = denominator == CclDenominator::with_positive;
        if (with_pos) smax = std::max(smax, sp);
        double z = 0.0;
        for (double v : s) z += std::exp(v - smax);
        if (with_pos) z += std::exp(sp - smax);
        const double log_z = smax + std::log(z);
        out.value += scale * (log_z - sp);

        // dL/da = (sum_n w_n n + w_p p - p) / tau, dL/dp = (w_p - 1) a / tau
        const double wp = with_pos ? std::exp(sp - log_z) : 0.0;
        Vector ga(a.size(), 0.0);
        for (std::size_t k = 0; k < negs.size(); ++k) {
            const double w = std::exp(s[k] - log_z);
            for (std::size_t d = 0; d < a.size(); ++d) ga[d] += w * negs[k][d];
        }
        Vector gp(a.size());
        for (std::size_t d = 0; d < a.size(); ++d) {
            ga[d] = scale * (ga[d] + (wp - 1.0) * p[d]) / tau;
            gp[d] = scale * (wp - 1.0) * a[d] / tau;
        }
        out.anchor_grads[i] = std::move(ga);
        out.positive_grads[i] = std::move(gp);
    }
    return out;
}

CrossEntropyResult fourier_ce(const ClassifierHead& head_freq, std::span<const double> feature, int label,
                              double eps) {
    const Vector amp = amplitude_spectrum(feature, eps);
    CrossEntropyResult r = cross_entropy(head_freq, amp, label);
    r.feature_grad = amplitude_backward(feature, r.feature_grad, eps);
    return r;
}

LossCoefficients combined_coefficients(double lambda_s, double lambda_t, double delta, double gamma) {
    if (lambda_s < 0.0 || lambda_t < 0.0 || delta < 0.0 || gamma < 0.0 || gamma > 1.0) {
        throw std::invalid_argument("combined_loss: weights must be non-negative and gamma <= 1");
    }
    return LossCoefficients{lambda_s, lambda_t * delta, lambda_t * gamma, lambda_t * (1.0 - gamma)};
}

double combined_loss(const LossTerms& terms, double lambda_s, double lambda_t, double delta, double gamma) {
    const LossCoefficients c = combined_coefficients(lambda_s, lambda_t, delta, gamma);
    return c.source * terms.source + c.ccl * terms.ccl + c.spatial * terms.spatial + c.fourier * terms.fourier;
}

ClassifierHead init_head_from_centroids(const std::vector<Vector>& centroids) {
    if (centroids.empty()) throw DegenerateError("init_head_from_centroids: no clusters");
    const std::size_t dim = centroids.front().size();
    ClassifierHead head{Matrix(centroids.size(), dim), Vector(centroids.size(), 0.0)};
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (centroids[c].size() != dim) throw ShapeError("init_head_from_centroids: centroid dimension");
        const Vector unit = normalized(centroids[c]);
        std::copy(unit.begin(), unit.end(), head.weight.row(c).begin());
    }
    return head;
}

ClassifierHead init_head_from_centroids(const PseudoLabeling& labeling) {
    if (labeling.num_clusters == 0) throw DegenerateError("init_head_from_centroids: no clusters");
    return init_head_from_centroids(labeling.centroids);
}

}  // namespace uda
