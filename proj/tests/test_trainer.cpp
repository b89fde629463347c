#include "doctest.h"

#include <filesystem>
#include <set>

#include "json.hpp"
#include "uda/errors.hpp"
#include "uda/trainer.hpp"

using namespace uda;

namespace {

struct Fixture {
    SyntheticData data;
    EvaluationProbe probe;
    TrainConfig cfg;

    Fixture() {
        SyntheticSpec spec;
        spec.num_classes = 5;
        spec.samples_per_class = 12;
        spec.eval_samples_per_class = 6;
        spec.input_dim = 8;
        spec.sigma_within = 0.3;
        data = generate(spec);
        probe = EvaluationProbe{data.target_hidden_labels, data.target_eval};
        cfg.schedule.e1 = 3;
        cfg.schedule.e2 = 9;
        cfg.schedule.e3 = 12;
        cfg.schedule.k = 3;
        cfg.epochs_per_cluster_round = 1;
        cfg.steps_per_epoch = 4;
        cfg.queue_capacity = 64;
        cfg.hidden_width = 12;
        cfg.feature_dim = 8;
        cfg.dbscan = DbscanParams{0.5, 3};
    }

    TrainResult run(const TrainConfig& c, const TrainHooks& hooks = {}) const {
        return train(data.source, data.target, c, &probe, hooks);
    }
};

std::string jsonl(const std::vector<EpochRecord>& records) {
    std::string out;
    for (const auto& r : records) out += to_json_line(r) + "\n";
    return out;
}

}  // namespace

TEST_CASE("train: deterministic record stream") {
    const Fixture f;
    const TrainResult a = f.run(f.cfg);
    const TrainResult b = f.run(f.cfg);
    CHECK(a.records == b.records);
    CHECK(jsonl(a.records) == jsonl(b.records));
    CHECK(a.online == b.online);
    CHECK(a.momentum == b.momentum);
    REQUIRE(a.records.size() == 12);
    TrainConfig other = f.cfg;
    other.seed = 9;
    CHECK(!(f.run(other).records == a.records));
}

TEST_CASE("train: logged weights equal the schedule") {
    const Fixture f;
    for (PolicyKind kind : {PolicyKind::two_stage, PolicyKind::k_step, PolicyKind::linear, PolicyKind::static_weights}) {
        TrainConfig c = f.cfg;
        c.schedule.kind = kind;
        const TrainResult r = f.run(c);
        for (const EpochRecord& rec : r.records) {
            const LossWeights w = weights_at(c.schedule, rec.epoch);
            CHECK(rec.lambda_s == w.source);
            CHECK(rec.lambda_t == w.target);
            CHECK(rec.phase == phase_of(c.schedule, rec.epoch));
        }
    }
}

TEST_CASE("train: step-level invariants") {
    const Fixture f;
    int steps = 0;
    int anchors_checked = 0;
    int target_steps = 0;
    TrainHooks hooks;
    const EncoderState* last_after = nullptr;
    EncoderState previous_after;
    hooks.on_step = [&](const StepTrace& t) {
        ++steps;
        if (t.phase == Phase::target_only) CHECK(t.source_ids.empty());
        if (t.phase == Phase::pretrain) CHECK(t.target_ids.empty());
        if (!t.target_ids.empty()) ++target_steps;
        REQUIRE(t.anchor_labels.size() == t.negative_labels.size());
        for (std::size_t a = 0; a < t.anchor_labels.size(); ++a) {
            CHECK(!t.negative_labels[a].empty());
            for (int n : t.negative_labels[a]) CHECK(n != t.anchor_labels[a]);
            ++anchors_checked;
        }
        // the momentum encoder moves only through the averaging rule
        EncoderState expect = *t.momentum_before;
        momentum_update(expect, *t.online, f.cfg.momentum);
        CHECK(expect == *t.momentum_after);
        if (last_after) CHECK(*t.momentum_before == previous_after);
        previous_after = *t.momentum_after;
        last_after = t.momentum_after;
    };
    f.run(f.cfg, hooks);
    CHECK(steps == 12 * 4);
    CHECK(target_steps > 0);
    CHECK(anchors_checked > 0);
}

TEST_CASE("train: zero learning rate leaves parameters unchanged") {
    const Fixture f;
    TrainConfig c = f.cfg;
    c.learning_rate = 0.0;
    std::optional<EncoderState> first;
    TrainHooks hooks;
    hooks.on_step = [&](const StepTrace& t) {
        if (!first) first = *t.online;
        CHECK(*t.online == *first);
        CHECK(*t.momentum_after == *first);
    };
    const TrainResult r = f.run(c, hooks);
    CHECK(r.online == *first);
    CHECK(r.momentum == r.online);
}

TEST_CASE("train: zero contrastive weight equals training without the term") {
    const Fixture f;
    TrainConfig zero = f.cfg;
    zero.delta = 0.0;
    TrainConfig off = zero;
    off.ccl_pairs = CclPairs::off;
    const TrainResult a = f.run(zero);
    const TrainResult b = f.run(off);
    CHECK(a.online == b.online);
    CHECK(a.momentum == b.momentum);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].mAP == b.records[i].mAP);
        CHECK(a.records[i].nmi == b.records[i].nmi);
        CHECK(b.records[i].loss_ccl == 0.0);
    }
}

TEST_CASE("train: baseline matches the full method through pretraining") {
    const Fixture f;
    const TrainResult full = f.run(f.cfg);
    const TrainResult base = run_baseline(f.data.source, f.data.target, f.cfg, &f.probe);
    for (int e = 0; e < f.cfg.schedule.e1; ++e) CHECK(full.records[e] == base.records[e]);
    CHECK(!(full.records.back() == base.records.back()));
    for (const EpochRecord& r : base.records) {
        CHECK(r.loss_ccl == 0.0);
        CHECK(r.lambda_s == (r.epoch <= f.cfg.schedule.e1 ? 1.0 : 0.0));
    }
    const TrainConfig bc = baseline_config(f.cfg);
    CHECK(bc.schedule.kind == PolicyKind::two_stage);
    CHECK(bc.delta == 0.0);
    CHECK(bc.gamma == 1.0);
    CHECK(bc.ccl_pairs == CclPairs::off);
}

TEST_CASE("train: source-only schedule never touches target data") {
    const Fixture f;
    TrainConfig c = f.cfg;
    c.schedule.kind = PolicyKind::static_weights;
    c.schedule.static_source = 1.0;
    c.schedule.static_target = 0.0;
    c.schedule.e3 = c.schedule.e2;
    TrainHooks hooks;
    hooks.on_step = [](const StepTrace& t) { CHECK(t.target_ids.empty()); };
    const TrainResult r = f.run(c, hooks);
    for (const EpochRecord& rec : r.records) {
        CHECK(rec.lambda_t == 0.0);
        CHECK(rec.round == 0);
    }
}

TEST_CASE("train: repeated degenerate clustering aborts with the partial records") {
    const Fixture f;
    TrainConfig c = f.cfg;
    c.dbscan = DbscanParams{1e-6, 3};
    try {
        f.run(c);
        FAIL("expected an abort");
    } catch (const TrainingAborted& e) {
        CHECK(e.records.size() == static_cast<std::size_t>(c.schedule.e1 + 2));
        CHECK(e.records.back().skipped_round == 1);
    }
}

TEST_CASE("train: metrics are finite and in range") {
    const Fixture f;
    for (const EpochRecord& r : f.run(f.cfg).records) {
        REQUIRE(r.mAP.has_value());
        CHECK(*r.mAP >= 0.0);
        CHECK(*r.mAP <= 1.0);
        CHECK(*r.nmi >= 0.0);
        CHECK(*r.nmi <= 1.0 + 1e-12);
        CHECK(std::isfinite(r.loss_total));
        CHECK(r.outlier_fraction >= 0.0);
        CHECK(r.outlier_fraction <= 1.0);
    }
}

TEST_CASE("train: adam and instance-wise modes run") {
    const Fixture f;
    TrainConfig c = f.cfg;
    c.optimizer = Optimizer::adam;
    c.learning_rate = 1e-3;
    CHECK(f.run(c).records.size() == 12);
    c = f.cfg;
    c.ccl_pairs = CclPairs::instance;
    CHECK_NOTHROW(f.run(c));
}

TEST_CASE("train: input validation") {
    const Fixture f;
    TrainConfig c = f.cfg;
    c.delta = -1.0;
    try {
        f.run(c);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "loss.delta");
    }
    c = f.cfg;
    c.schedule.e2 = 2;
    CHECK_THROWS_AS(f.run(c), ConfigError);
    c = f.cfg;
    c.momentum = 2.0;
    CHECK_THROWS_AS(f.run(c), ConfigError);
    CHECK_THROWS_AS(train({}, f.data.target, f.cfg), std::invalid_argument);
    std::vector<Sample> bad = f.data.target;
    bad[0].input.push_back(1.0);
    CHECK_THROWS_AS(train(f.data.source, bad, f.cfg), ShapeError);
}

TEST_CASE("to_json_line: field order and nulls") {
    EpochRecord r;
    r.epoch = 3;
    r.mAP = 0.5;
    const auto j = nlohmann::ordered_json::parse(to_json_line(r));
    CHECK(j.begin().key() == "epoch");
    CHECK(j["epoch"] == 3);
    CHECK(j["phase"] == "pretrain");
    CHECK(j["mAP"] == 0.5);
    CHECK(j["nmi"].is_null());
    CHECK(j.size() == 17);
}

TEST_CASE("model file round-trip") {
    const EncoderState enc = make_encoder(6, 5, 4, 3);
    CHECK(deserialize_model(serialize_model(enc)) == enc);
    const std::string bytes = serialize_model(enc);
    CHECK(bytes.substr(0, 4) == "UDAM");
    CHECK(static_cast<std::uint8_t>(bytes[4]) == kModelVersion);

    const auto path = std::filesystem::temp_directory_path() / "uda_test_model.bin";
    save_model(path, enc);
    CHECK(load_model(path) == enc);
    std::filesystem::remove(path);

    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS(deserialize_model(bad));
    CHECK_THROWS(deserialize_model(bytes.substr(0, bytes.size() - 3)));
    bad = bytes;
    bad[4] = 7;
    CHECK_THROWS(deserialize_model(bad));
}
