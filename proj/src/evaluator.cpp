#include "uda/evaluator.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "uda/errors.hpp"

namespace uda {

void RetrievalSet::validate() const {
    const std::size_t n = features.size();
    if (labels.size() != n || cameras.size() != n || instance_ids.size() != n) {
        throw ShapeError("retrieval set: field lengths differ");
    }
    for (const Vector& f : features) {
        if (f.size() != features.front().size()) throw ShapeError("retrieval set: features differ in dimension");
    }
}

RetrievalResult evaluate(const RetrievalSet& query, const RetrievalSet& gallery, std::size_t max_rank) {
    query.validate();
    gallery.validate();
    if (query.size() == 0 || gallery.size() == 0) throw std::invalid_argument("evaluate: empty query or gallery");
    if (query.features.front().size() != gallery.features.front().size()) {
        throw ShapeError("evaluate: query and gallery dimensions differ");
    }
    if (max_rank == 0) throw std::invalid_argument("evaluate: max_rank must be positive");

    RetrievalResult result;
    result.cmc.assign(max_rank, 0.0);
    double ap_sum = 0.0;
    std::vector<double> dist(gallery.size());
    std::vector<std::size_t> order(gallery.size());
    for (std::size_t q = 0; q < query.size(); ++q) {
        for (std::size_t g = 0; g < gallery.size(); ++g) {
            dist[g] = squared_distance(query.features[q], gallery.features[g]);
        }
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (dist[a] != dist[b]) return dist[a] < dist[b];
            return gallery.instance_ids[a] < gallery.instance_ids[b];
        });

        std::size_t rank = 0;
        std::size_t hits = 0;
        std::size_t first_hit = 0;
        double precision_sum = 0.0;
        for (std::size_t g : order) {
            const bool same_label = gallery.labels[g] == query.labels[q];
            if (same_label && gallery.cameras[g] == query.cameras[q]) continue;
            ++rank;
            if (same_label) {
                ++hits;
                if (hits == 1) first_hit = rank;
                precision_sum += static_cast<double>(hits) / static_cast<double>(rank);
            }
        }
        if (hits == 0) {
            ++result.skipped_queries;
            continue;
        }
        ++result.evaluated_queries;
        ap_sum += precision_sum / static_cast<double>(hits);
        for (std::size_t k = first_hit; k <= max_rank; ++k) result.cmc[k - 1] += 1.0;
    }
    if (result.evaluated_queries > 0) {
        const double n = static_cast<double>(result.evaluated_queries);
        result.mAP = ap_sum / n;
        for (double& c : result.cmc) c /= n;
    }
    return result;
}

std::pair<RetrievalSet, RetrievalSet> split_query_gallery(const RetrievalSet& all, std::size_t stride) {
    all.validate();
    if (stride < 2) throw std::invalid_argument("split_query_gallery: stride must be at least 2");
    RetrievalSet query;
    RetrievalSet gallery;
    for (std::size_t i = 0; i < all.size(); ++i) {
        RetrievalSet& dst = (i % stride == 0) ? query : gallery;
        dst.features.push_back(all.features[i]);
        dst.labels.push_back(all.labels[i]);
        dst.cameras.push_back(all.cameras[i]);
        dst.instance_ids.push_back(all.instance_ids[i]);
    }
    return {std::move(query), std::move(gallery)};
}

}  // namespace uda
