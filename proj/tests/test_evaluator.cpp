#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "uda/errors.hpp"
#include "uda/evaluator.hpp"

using namespace uda;

namespace {

RetrievalSet set_1d(std::vector<double> xs, std::vector<int> labels, std::vector<int> cams) {
    RetrievalSet s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        s.features.push_back(Vector{xs[i]});
        s.instance_ids.push_back(static_cast<std::int64_t>(i));
    }
    s.labels = std::move(labels);
    s.cameras = std::move(cams);
    return s;
}

RetrievalSet random_set(std::mt19937_64& rng, std::size_t n, std::int64_t first_id) {
    std::uniform_int_distribution<int> lab(0, 3);
    std::uniform_int_distribution<int> cam(0, 2);
    std::uniform_int_distribution<int> coord(0, 4);  // coarse grid forces distance ties
    RetrievalSet s;
    for (std::size_t i = 0; i < n; ++i) {
        s.features.push_back(Vector{static_cast<double>(coord(rng)), static_cast<double>(coord(rng))});
        s.labels.push_back(lab(rng));
        s.cameras.push_back(cam(rng));
        s.instance_ids.push_back(first_id + static_cast<std::int64_t>(n - i));
    }
    return s;
}

}  // namespace

TEST_CASE("evaluate: worked examples") {
    const RetrievalSet q = set_1d({0.0}, {1}, {0});
    const RetrievalResult first = evaluate(q, set_1d({0.1, 5.0}, {1, 2}, {1, 1}), 2);
    CHECK(first.mAP == 1.0);
    CHECK(first.cmc[0] == 1.0);

    const RetrievalResult second = evaluate(q, set_1d({0.1, 5.0}, {2, 1}, {1, 1}), 2);
    CHECK(second.mAP == 0.5);
    CHECK(second.cmc[0] == 0.0);
    CHECK(second.cmc[1] == 1.0);

    const RetrievalResult two = evaluate(q, set_1d({0.1, 0.2, 0.3}, {1, 2, 1}, {1, 1, 1}), 3);
    CHECK(two.mAP == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("evaluate: same label and camera are excluded, empty queries skipped") {
    const RetrievalSet q = set_1d({0.0, 1.0}, {1, 7}, {0, 0});
    // the nearest gallery item shares label and camera with query 0
    const RetrievalSet g = set_1d({0.0, 0.5, 3.0}, {1, 2, 1}, {0, 1, 1});
    const RetrievalResult r = evaluate(q, g, 3);
    CHECK(r.evaluated_queries == 1);
    CHECK(r.skipped_queries == 1);
    CHECK(r.mAP == 0.5);
    CHECK(r.rank1() == 0.0);

    const RetrievalResult none = evaluate(set_1d({0.0}, {9}, {0}), g, 3);
    CHECK(none.evaluated_queries == 0);
    CHECK(none.skipped_queries == 1);
}

TEST_CASE("evaluate: ties broken by instance id") {
    RetrievalSet g = set_1d({1.0, 1.0}, {2, 1}, {1, 1});
    g.instance_ids = {5, 9};
    const RetrievalSet q = set_1d({0.0}, {1}, {0});
    CHECK(evaluate(q, g, 2).mAP == 0.5);
    g.instance_ids = {9, 5};
    CHECK(evaluate(q, g, 2).mAP == 1.0);
}

TEST_CASE("evaluate: matches the exhaustive oracle") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> size(1, 30);
    for (int trial = 0; trial < 100; ++trial) {
        const RetrievalSet q = random_set(rng, static_cast<std::size_t>(size(rng)), 0);
        const RetrievalSet g = random_set(rng, static_cast<std::size_t>(size(rng)), 1000);
        const RetrievalResult r = evaluate(q, g, 5);
        const oracle::Retrieval o =
            oracle::retrieval(q.features, q.labels, q.cameras, g.features, g.labels, g.cameras, g.instance_ids, 5);
        CHECK(std::abs(r.mAP - o.mAP) <= 1e-12);
        CHECK(r.skipped_queries == o.skipped);
        for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(r.cmc[k] - o.cmc[k]) <= 1e-12);
    }
}

TEST_CASE("evaluate: bounds, monotone CMC and scale invariance") {
    std::mt19937_64 rng(32);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        RetrievalSet q = random_set(rng, 12, 0);
        RetrievalSet gal = random_set(rng, 25, 100);
        for (auto* s : {&q, &gal})
            for (auto& f : s->features)
                for (double& x : f) x += 0.01 * g(rng);
        const RetrievalResult r = evaluate(q, gal, 10);
        CHECK(r.mAP >= 0.0);
        CHECK(r.mAP <= 1.0);
        for (std::size_t k = 1; k < r.cmc.size(); ++k) CHECK(r.cmc[k] >= r.cmc[k - 1]);
        for (auto* s : {&q, &gal})
            for (auto& f : s->features)
                for (double& x : f) x *= 3.7;
        const RetrievalResult scaled = evaluate(q, gal, 10);
        CHECK(scaled.mAP == doctest::Approx(r.mAP).epsilon(1e-14));
        CHECK(scaled.cmc == r.cmc);
    }
}

TEST_CASE("evaluate: errors and split") {
    const RetrievalSet q = set_1d({0.0}, {1}, {0});
    CHECK_THROWS_AS(evaluate(q, RetrievalSet{}, 1), std::invalid_argument);
    RetrievalSet wide;
    wide.features = {Vector{0.0, 1.0}};
    wide.labels = {1};
    wide.cameras = {0};
    wide.instance_ids = {3};
    CHECK_THROWS_AS(evaluate(q, wide, 1), ShapeError);
    RetrievalSet broken = q;
    broken.labels.clear();
    CHECK_THROWS_AS(evaluate(broken, q, 1), ShapeError);

    const RetrievalSet all = set_1d({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1},
                                    {0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2});
    const auto [query, gallery] = split_query_gallery(all, 5);
    CHECK(query.instance_ids == std::vector<std::int64_t>{0, 5, 10});
    CHECK(gallery.size() == 8);
    CHECK_THROWS_AS(split_query_gallery(all, 1), std::invalid_argument);
}
