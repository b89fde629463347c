#include "doctest.h"

#include "uda/config.hpp"
#include "uda/errors.hpp"

using namespace uda;

TEST_CASE("config: parse skips comments and trims") {
    const ConfigEntries e = parse_config("# run\n\n  loss.delta = 0.5 \nseed=7\n");
    CHECK(e.size() == 2);
    CHECK(e.at("loss.delta") == "0.5");
    CHECK(e.at("seed") == "7");
}

TEST_CASE("config: malformed lines name the line") {
    try {
        parse_config("seed = 1\nno equals here\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_config("seed = 1\nseed = 2\n"), ParseError);
    CHECK_THROWS_AS(parse_config(" = 3\n"), ParseError);
}

TEST_CASE("config: defaults round-trip through entries") {
    const RunConfig base;
    const ConfigEntries e = to_entries(base);
    CHECK(e.size() == config_keys().size());
    const RunConfig back = apply_config(RunConfig{}, e);
    CHECK(to_entries(back) == e);
    CHECK(parse_config(format_config(e)) == e);
}

TEST_CASE("config: overrides reach the right fields") {
    const RunConfig c = apply_config(RunConfig{}, {{"schedule.kind", "linear"},
                                                   {"loss.gamma", "0.25"},
                                                   {"memory.queue_capacity", "2048"},
                                                   {"data.shared_centers", "true"},
                                                   {"seed", "11"}});
    CHECK(c.train.schedule.kind == PolicyKind::linear);
    CHECK(c.train.gamma == 0.25);
    CHECK(c.train.queue_capacity == 2048);
    CHECK(c.data.shared_centers);
    CHECK(c.train.seed == 11);
    CHECK(c.data.seed == 11);
}

TEST_CASE("config: bad keys and values name the key") {
    auto key_of = [](const ConfigEntries& e) {
        try {
            apply_config(RunConfig{}, e);
        } catch (const ConfigError& err) {
            return err.key();
        }
        return std::string("none");
    };
    CHECK(key_of({{"loss.detla", "1"}}) == "loss.detla");
    CHECK(key_of({{"loss.delta", "abc"}}) == "loss.delta");
    CHECK(key_of({{"loss.delta", "1.5x"}}) == "loss.delta");
    CHECK(key_of({{"schedule.kind", "cosine"}}) == "schedule.kind");
    CHECK(key_of({{"loss.tau", "0"}}) == "loss.tau");
    CHECK(key_of({{"data.shared_centers", "yes"}}) == "data.shared_centers");
    CHECK(key_of({{"data.num_classes", "0"}}) == "data");
}
