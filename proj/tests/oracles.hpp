#pragma once

// Reference implementations used only by tests. They share no code with the
// library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline double sqdist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// Straight-line forward pass: W2 tanh(W1 x + b1) + b2, optionally normalized.
// Weights are row-major out x in.
inline Vec mlp_forward(const Vec& w1, const Vec& b1, const Vec& w2, const Vec& b2, const Vec& x, bool normalize,
                       bool use_tanh = true) {
    const std::size_t hidden = b1.size();
    const std::size_t out = b2.size();
    Vec h(hidden);
    for (std::size_t r = 0; r < hidden; ++r) {
        double s = b1[r];
        for (std::size_t c = 0; c < x.size(); ++c) s += w1[r * x.size() + c] * x[c];
        h[r] = use_tanh ? std::tanh(s) : s;
    }
    Vec y(out);
    for (std::size_t r = 0; r < out; ++r) {
        double s = b2[r];
        for (std::size_t c = 0; c < hidden; ++c) s += w2[r * hidden + c] * h[c];
        y[r] = s;
    }
    if (normalize) {
        double n = 0.0;
        for (double v : y) n += v * v;
        n = std::sqrt(n);
        for (double& v : y) v /= n;
    }
    return y;
}

// Textbook DBSCAN as partitions: core flags, connected components of core
// points by transitive closure (O(n^3)), border points attached to the
// adjacent component whose smallest core index is lowest.
inline std::vector<int> dbscan(const std::vector<Vec>& pts, double eps, int min_pts) {
    const std::size_t n = pts.size();
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) adj[i][j] = sqdist(pts[i], pts[j]) <= eps * eps;
    std::vector<char> core(n);
    for (std::size_t i = 0; i < n; ++i) {
        int cnt = 0;
        for (std::size_t j = 0; j < n; ++j) cnt += adj[i][j];
        core[i] = cnt >= min_pts;
    }
    // reach[i][j]: core i and core j are density-connected
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) reach[i][j] = core[i] && core[j] && (adj[i][j] || i == j);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (reach[i][k])
                for (std::size_t j = 0; j < n; ++j)
                    if (reach[k][j]) reach[i][j] = 1;
    // component representative = smallest core index in the component
    std::vector<std::size_t> rep(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i]) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (reach[i][j]) {
                rep[i] = j;
                break;
            }
        }
    }
    std::vector<int> label(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) {
            label[i] = static_cast<int>(rep[i]);
            continue;
        }
        std::size_t best = n;
        for (std::size_t j = 0; j < n; ++j)
            if (core[j] && adj[i][j]) best = std::min(best, rep[j]);
        if (best < n) label[i] = static_cast<int>(best);
    }
    return label;
}

// Canonical partition: set of sorted member lists, outliers listed separately.
inline std::set<std::vector<std::size_t>> partition(const std::vector<int>& labels) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= 0) groups[labels[i]].push_back(i);
    std::set<std::vector<std::size_t>> out;
    for (auto& [_, g] : groups) out.insert(g);
    return out;
}

inline std::vector<std::size_t> outliers(const std::vector<int>& labels) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0) out.push_back(i);
    return out;
}

// Direct entropy / mutual information with natural logs.
inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
    const double n = static_cast<double>(a.size());
    std::set<int> la(a.begin(), a.end());
    std::set<int> lb(b.begin(), b.end());
    auto count = [&](auto pred) {
        double c = 0;
        for (std::size_t i = 0; i < a.size(); ++i) c += pred(i) ? 1.0 : 0.0;
        return c;
    };
    double ha = 0, hb = 0, mi = 0;
    for (int x : la) {
        const double p = count([&](std::size_t i) { return a[i] == x; }) / n;
        ha -= p * std::log(p);
    }
    for (int y : lb) {
        const double p = count([&](std::size_t i) { return b[i] == y; }) / n;
        hb -= p * std::log(p);
    }
    for (int x : la)
        for (int y : lb) {
            const double pxy = count([&](std::size_t i) { return a[i] == x && b[i] == y; }) / n;
            if (pxy == 0) continue;
            const double px = count([&](std::size_t i) { return a[i] == x; }) / n;
            const double py = count([&](std::size_t i) { return b[i] == y; }) / n;
            mi += pxy * std::log(pxy / (px * py));
        }
    if (ha == 0 && hb == 0) return 1.0;
    return mi / ((ha + hb) / 2);
}

// O(n^2) pairwise BCubed F.
inline double bcubed_f(const std::vector<int>& pred, const std::vector<int>& truth) {
    const std::size_t n = pred.size();
    double p = 0, r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double same_pred = 0, same_truth = 0, both = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const bool sp = pred[j] == pred[i];
            const bool st = truth[j] == truth[i];
            same_pred += sp;
            same_truth += st;
            both += sp && st;
        }
        p += both / same_pred;
        r += both / same_truth;
    }
    p /= static_cast<double>(n);
    r /= static_cast<double>(n);
    return 2 * p * r / (p + r);
}

struct Retrieval {
    double mAP = 0;
    std::vector<double> cmc;
    std::size_t skipped = 0;
};

// Enumerates the full ranking of every query explicitly, using a comparator
// written independently from the library (distance, then id).
inline Retrieval retrieval(const std::vector<Vec>& qf, const std::vector<int>& ql, const std::vector<int>& qc,
                           const std::vector<Vec>& gf, const std::vector<int>& gl, const std::vector<int>& gc,
                           const std::vector<std::int64_t>& gid, std::size_t max_rank) {
    Retrieval out;
    out.cmc.assign(max_rank, 0.0);
    std::size_t used = 0;
    double ap_total = 0;
    for (std::size_t q = 0; q < qf.size(); ++q) {
        std::vector<std::pair<std::pair<double, std::int64_t>, std::size_t>> ranked;
        for (std::size_t g = 0; g < gf.size(); ++g) {
            if (gl[g] == ql[q] && gc[g] == qc[q]) continue;
            ranked.push_back({{sqdist(qf[q], gf[g]), gid[g]}, g});
        }
        std::sort(ranked.begin(), ranked.end());
        std::vector<std::size_t> relevant_ranks;
        for (std::size_t r = 0; r < ranked.size(); ++r)
            if (gl[ranked[r].second] == ql[q]) relevant_ranks.push_back(r + 1);
        if (relevant_ranks.empty()) {
            ++out.skipped;
            continue;
        }
        ++used;
        double ap = 0;
        for (std::size_t i = 0; i < relevant_ranks.size(); ++i)
            ap += static_cast<double>(i + 1) / static_cast<double>(relevant_ranks[i]);
        ap_total += ap / static_cast<double>(relevant_ranks.size());
        for (std::size_t k = 1; k <= max_rank; ++k)
            if (relevant_ranks.front() <= k) out.cmc[k - 1] += 1;
    }
    if (used) {
        out.mAP = ap_total / static_cast<double>(used);
        for (double& c : out.cmc) c /= static_cast<double>(used);
    }
    return out;
}

}  // namespace oracle
