#pragma once

#include <span>
#include <vector>

#include "uda/clustering.hpp"
#include "uda/numerics.hpp"

namespace uda {

// Linear classifier: logits = W f + b, W is C x D.
struct ClassifierHead {
    Matrix weight;
    Vector bias;

    std::size_t num_classes() const { return weight.rows; }
    std::size_t feature_dim() const { return weight.cols; }
    bool operator==(const ClassifierHead&) const = default;
};

struct HeadGradients {
    Matrix weight;
    Vector bias;
};

HeadGradients zero_gradients(const ClassifierHead& head);
Vector logits(const ClassifierHead& head, std::span<const double> feature);

struct CrossEntropyResult {
    double value = 0.0;
    Vector feature_grad;
    HeadGradients head_grad;
};

// Softmax cross-entropy with a stable log-sum-exp. Throws std::out_of_range
// for a label outside [0, C).
CrossEntropyResult cross_entropy(const ClassifierHead& head, std::span<const double> feature, int label);

// Loss value with the gradient for every input feature.
struct FeatureLoss {
    double value = 0.0;
    std::vector<Vector> grads;
    std::size_t valid_anchors = 0;
};

inline constexpr double kDefaultTripletMargin = 0.3;

// Batch-hard triplet loss with Euclidean distance, averaged over anchors that
// have at least one positive and one negative. Throws DegenerateError when no
// anchor qualifies.
FeatureLoss triplet_loss(const std::vector<Vector>& features, std::span<const int> labels,
                         double margin = kDefaultTripletMargin);

enum class CclDenominator {
    negatives_only,  // sum over queued negatives only
    with_positive,   // adds exp(a.p / tau), the bounded InfoNCE form
};

// Anchors and positives come from the trainable encoder; negatives are views
// into momentum-encoder features and receive no gradient.
struct ContrastiveBatch {
    std::vector<Vector> anchors;
    std::vector<Vector> positives;
    std::vector<std::vector<std::span<const double>>> negatives;
};

struct ContrastiveLoss {
    double value = 0.0;
    std::vector<Vector> anchor_grads;
    std::vector<Vector> positive_grads;
};

// Mean over anchors of -log(exp(a.p/tau) / Z). Throws DegenerateError when an
// anchor has no negatives.
ContrastiveLoss ccl_loss(const ContrastiveBatch& batch, double tau,
                         CclDenominator denominator = CclDenominator::with_positive);

// Cross-entropy on the amplitude spectrum of `feature` through a separate head.
// feature_grad is taken with respect to the spatial feature.
CrossEntropyResult fourier_ce(const ClassifierHead& head_freq, std::span<const double> feature, int label,
                              double eps = 1e-12);

struct LossTerms {
    double source = 0.0;   // CE + triplet on labeled source
    double ccl = 0.0;      // cluster-wise contrastive
    double spatial = 0.0;  // CE + triplet on pseudo labels
    double fourier = 0.0;  // CE on amplitude spectra
};

// Weight of every term in the overall objective
//   ls * L_s + lt * (delta * L_ccl + gamma * L_spa + (1 - gamma) * L_fre).
struct LossCoefficients {
    double source = 0.0;
    double ccl = 0.0;
    double spatial = 0.0;
    double fourier = 0.0;
};

LossCoefficients combined_coefficients(double lambda_s, double lambda_t, double delta, double gamma);
double combined_loss(const LossTerms& terms, double lambda_s, double lambda_t, double delta, double gamma);

// Head with one row per cluster, set to the normalized centroid, and zero bias.
ClassifierHead init_head_from_centroids(const std::vector<Vector>& centroids);
ClassifierHead init_head_from_centroids(const PseudoLabeling& labeling);

}  // namespace uda
