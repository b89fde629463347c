#pragma once

#include <span>
#include <vector>

#include "uda/numerics.hpp"

namespace uda {

inline constexpr int kOutlier = -1;

struct DbscanParams {
    double eps = 0.35;
    int min_pts = 4;

    void validate() const;
};

// Cluster assignment for one clustering round. Cluster ids are contiguous
// 0..num_clusters-1; unassigned samples carry kOutlier.
struct PseudoLabeling {
    std::vector<int> assignment;
    int num_clusters = 0;
    std::vector<Vector> centroids;  // L2-normalized cluster means
    int round_id = 0;

    std::size_t outlier_count() const;
};

// DBSCAN with Euclidean distance on the features as given (callers pass
// normalized features). A point is core when at least min_pts points, itself
// included, lie within eps. Points are scanned in index order and every new
// cluster is expanded breadth-first from the first unvisited core point, so a
// border point reachable from several clusters joins the one with the lowest id.
PseudoLabeling dbscan(const std::vector<Vector>& features, const DbscanParams& params, int round_id = 0);

// L2-normalized mean of each cluster's members.
std::vector<Vector> cluster_centroids(const std::vector<Vector>& features, std::span<const int> assignment,
                                      int num_clusters);

// Outliers become singleton clusters with fresh ids.
std::vector<int> outliers_as_singletons(std::span<const int> labels);

// Normalized mutual information, arithmetic-mean normalization. Two trivial
// partitions (both entropies zero) score 1.
double nmi(std::span<const int> pred, std::span<const int> truth);

struct BCubedScore {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
};

BCubedScore bcubed(std::span<const int> pred, std::span<const int> truth);
double bcubed_f(std::span<const int> pred, std::span<const int> truth);

}  // namespace uda
