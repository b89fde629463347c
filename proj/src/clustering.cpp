#include "uda/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "uda/errors.hpp"

namespace uda {

void DbscanParams::validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("dbscan: eps must be positive");
    if (min_pts < 1) throw std::invalid_argument("dbscan: min_pts must be at least 1");
}

std::size_t PseudoLabeling::outlier_count() const {
    return static_cast<std::size_t>(std::count(assignment.begin(), assignment.end(), kOutlier));
}

PseudoLabeling dbscan(const std::vector<Vector>& features, const DbscanParams& params, int round_id) {
    params.validate();
    const std::size_t n = features.size();
    for (const Vector& f : features) {
        if (f.size() != features.front().size()) throw ShapeError("dbscan: features differ in dimension");
    }

    const double eps2 = params.eps * params.eps;
    std::vector<std::vector<std::size_t>> neighbors(n);
    for (std::size_t i = 0; i < n; ++i) {
        neighbors[i].push_back(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (squared_distance(features[i], features[j]) <= eps2) {
                neighbors[i].push_back(j);
                neighbors[j].push_back(i);
            }
        }
    }
    std::vector<char> core(n);
    for (std::size_t i = 0; i < n; ++i) {
        core[i] = neighbors[i].size() >= static_cast<std::size_t>(params.min_pts);
    }

    PseudoLabeling out;
    out.round_id = round_id;
    out.assignment.assign(n, kOutlier);
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (!core[seed] || out.assignment[seed] != kOutlier) continue;
        const int id = out.num_clusters++;
        std::deque<std::size_t> frontier{seed};
        out.assignment[seed] = id;
        while (!frontier.empty()) {
            const std::size_t p = frontier.front();
            frontier.pop_front();
            for (std::size_t q : neighbors[p]) {
                if (out.assignment[q] != kOutlier) continue;
                out.assignment[q] = id;
                if (core[q]) frontier.push_back(q);
            }
        }
    }
    if (n > 0) out.centroids = cluster_centroids(features, out.assignment, out.num_clusters);
    return out;
}

std::vector<Vector> cluster_centroids(const std::vector<Vector>& features, std::span<const int> assignment,
                                      int num_clusters) {
    if (features.size() != assignment.size()) throw ShapeError("cluster_centroids: assignment size");
    const std::size_t dim = features.empty() ? 0 : features.front().size();
    std::vector<Vector> sums(static_cast<std::size_t>(num_clusters), Vector(dim, 0.0));
    for (std::size_t i = 0; i < features.size(); ++i) {
        const int c = assignment[i];
        if (c == kOutlier) continue;
        if (c < 0 || c >= num_clusters) throw std::out_of_range("cluster_centroids: cluster id out of range");
        for (std::size_t d = 0; d < dim; ++d) sums[static_cast<std::size_t>(c)][d] += features[i][d];
    }
    for (Vector& s : sums) s = normalized(s);
    return sums;
}

std::vector<int> outliers_as_singletons(std::span<const int> labels) {
    int next = 0;
    for (int l : labels) next = std::max(next, l + 1);
    std::vector<int> out(labels.begin(), labels.end());
    for (int& l : out) {
        if (l == kOutlier) l = next++;
    }
    return out;
}

namespace {

void check_lengths(std::span<const int> pred, std::span<const int> truth, const char* who) {
    if (pred.size() != truth.size()) throw ShapeError(std::string(who) + ": labelings differ in length");
    if (pred.empty()) throw std::invalid_argument(std::string(who) + ": empty labeling");
}

double entropy(const std::map<int, std::size_t>& counts, double n) {
    double h = 0.0;
    for (const auto& [_, c] : counts) {
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace

double nmi(std::span<const int> pred_in, std::span<const int> truth_in) {
    check_lengths(pred_in, truth_in, "nmi");
    const std::vector<int> pred = outliers_as_singletons(pred_in);
    const std::vector<int> truth = outliers_as_singletons(truth_in);
    const double n = static_cast<double>(pred.size());

    std::map<int, std::size_t> pc;
    std::map<int, std::size_t> tc;
    std::map<std::pair<int, int>, std::size_t> joint;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ++pc[pred[i]];
        ++tc[truth[i]];
        ++joint[{pred[i], truth[i]}];
    }
    const double hp = entropy(pc, n);
    const double ht = entropy(tc, n);
    if (hp == 0.0 && ht == 0.0) return 1.0;

    double mi = 0.0;
    for (const auto& [key, c] : joint) {
        const double pij = static_cast<double>(c) / n;
        const double pi = static_cast<double>(pc[key.first]) / n;
        const double pj = static_cast<double>(tc[key.second]) / n;
        mi += pij * std::log(pij / (pi * pj));
    }
    return std::clamp(mi / (0.5 * (hp + ht)), 0.0, 1.0);
}

BCubedScore bcubed(std::span<const int> pred_in, std::span<const int> truth_in) {
    check_lengths(pred_in, truth_in, "bcubed");
    const std::vector<int> pred = outliers_as_singletons(pred_in);
    const std::vector<int> truth = outliers_as_singletons(truth_in);

    // per-item counts via cluster sizes and the contingency table
    std::unordered_map<int, std::size_t> pc;
    std::unordered_map<int, std::size_t> tc;
    std::map<std::pair<int, int>, std::size_t> joint;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ++pc[pred[i]];
        ++tc[truth[i]];
        ++joint[{pred[i], truth[i]}];
    }
    double precision = 0.0;
    double recall = 0.0;
    for (const auto& [key, c] : joint) {
        const double both = static_cast<double>(c);
        precision += both * both / static_cast<double>(pc[key.first]);
        recall += both * both / static_cast<double>(tc[key.second]);
    }
    const double n = static_cast<double>(pred.size());
    BCubedScore s;
    s.precision = precision / n;
    s.recall = recall / n;
    s.f = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

double bcubed_f(std::span<const int> pred, std::span<const int> truth) { return bcubed(pred, truth).f; }

}  // namespace uda
