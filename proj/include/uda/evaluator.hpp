#pragma once

#include <cstdint>
#include <vector>

#include "uda/numerics.hpp"

namespace uda {

struct RetrievalSet {
    std::vector<Vector> features;
    std::vector<int> labels;
    std::vector<int> cameras;
    std::vector<std::int64_t> instance_ids;

    std::size_t size() const { return features.size(); }
    void validate() const;
};

struct RetrievalResult {
    double mAP = 0.0;
    std::vector<double> cmc;  // cmc[k - 1] = rank-k accuracy
    std::size_t evaluated_queries = 0;
    std::size_t skipped_queries = 0;  // no relevant gallery item after exclusion

    double rank1() const { return cmc.empty() ? 0.0 : cmc.front(); }
};

// Ranks the gallery by ascending Euclidean distance (ties by instance id),
// drops gallery items that share both label and camera with the query, and
// averages AP and CMC over queries with at least one relevant item.
// Throws std::invalid_argument for empty sets and ShapeError for dimension mismatches.
RetrievalResult evaluate(const RetrievalSet& query, const RetrievalSet& gallery, std::size_t max_rank = 10);

// Every `stride`-th item (starting at 0) becomes a query, the rest the gallery.
std::pair<RetrievalSet, RetrievalSet> split_query_gallery(const RetrievalSet& all, std::size_t stride = 5);

}  // namespace uda
