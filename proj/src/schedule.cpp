#include "uda/schedule.hpp"

#include <algorithm>
#include <stdexcept>

namespace uda {

void SchedulePolicy::validate() const {
    if (!(0 < e1 && e1 < e2 && e2 <= e3)) throw std::invalid_argument("schedule: need 0 < e1 < e2 <= e3");
    if (kind == PolicyKind::k_step && (k < 1 || k > e2 - e1)) {
        throw std::invalid_argument("schedule: k must lie in [1, e2 - e1]");
    }
    if (static_source < 0.0 || static_target < 0.0) throw std::invalid_argument("schedule: negative static weight");
}

double decay_weight(const SchedulePolicy& p, int e) {
    switch (p.kind) {
        case PolicyKind::k_step: {
            const int segment_len = (p.e2 - p.e1) / p.k;
            const int segment = std::min(p.k, (e - p.e1 - 1) / segment_len + 1);
            return 1.0 - static_cast<double>(segment) / static_cast<double>(p.k + 1);
        }
        case PolicyKind::linear: {
            // e / (e1 - e2) + e2 / (e2 - e1) folded into one correctly rounded division
            const double w = static_cast<double>(p.e2 - e) / static_cast<double>(p.e2 - p.e1);
            return std::clamp(w, 0.0, 1.0);
        }
        case PolicyKind::two_stage:
            return 0.0;
        case PolicyKind::static_weights:
            return p.static_source;
    }
    return 0.0;
}

Phase phase_of(const SchedulePolicy& p, int e) {
    if (e <= p.e1) return Phase::pretrain;
    if (e > p.e2) return Phase::target_only;
    return Phase::joint;
}

LossWeights weights_at(const SchedulePolicy& p, int e) {
    if (e < 1 || e > p.e3) throw std::out_of_range("weights_at: epoch outside [1, e3]");
    switch (phase_of(p, e)) {
        case Phase::pretrain:
            return {1.0, 0.0};
        case Phase::target_only:
            return {0.0, 1.0};
        case Phase::joint:
            break;
    }
    switch (p.kind) {
        case PolicyKind::two_stage:
            return {0.0, 1.0};
        case PolicyKind::static_weights:
            return {p.static_source, p.static_target};
        case PolicyKind::k_step:
        case PolicyKind::linear: {
            const double w = decay_weight(p, e);
            return {w, 1.0 - w};
        }
    }
    return {0.0, 1.0};
}

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::two_stage: return "two_stage";
        case PolicyKind::k_step: return "k_step";
        case PolicyKind::linear: return "linear";
        case PolicyKind::static_weights: return "static";
    }
    return "?";
}

std::string_view to_string(Phase phase) {
    switch (phase) {
        case Phase::pretrain: return "pretrain";
        case Phase::joint: return "joint";
        case Phase::target_only: return "target_only";
    }
    return "?";
}

PolicyKind parse_policy_kind(std::string_view name) {
    if (name == "two_stage") return PolicyKind::two_stage;
    if (name == "k_step") return PolicyKind::k_step;
    if (name == "linear") return PolicyKind::linear;
    if (name == "static") return PolicyKind::static_weights;
    throw std::invalid_argument("unknown schedule kind '" + std::string(name) + "'");
}

}  // namespace uda
