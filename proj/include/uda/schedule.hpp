#pragma once

#include <string>
#include <string_view>

namespace uda {

enum class PolicyKind { two_stage, k_step, linear, static_weights };

enum class Phase { pretrain, joint, target_only };

// Source/target loss weights over epochs 1..e3, split into three phases:
// (0, e1] source only, (e1, e2] joint, (e2, e3] target only.
struct SchedulePolicy {
    PolicyKind kind = PolicyKind::k_step;
    int k = 3;
    int e1 = 20;
    int e2 = 50;
    int e3 = 80;
    double static_source = 0.2;  // joint-phase weights of the static policy
    double static_target = 0.8;

    // Throws std::invalid_argument unless 0 < e1 < e2 <= e3, 1 <= k <= e2 - e1
    // and the static weights are non-negative.
    void validate() const;
};

struct LossWeights {
    double source = 0.0;
    double target = 0.0;

    bool operator==(const LossWeights&) const = default;
};

// Joint-phase decay w(e) in [0, 1] for k_step and linear.
//   k_step: (e1, e2] is cut into k segments of floor((e2 - e1) / k) epochs, the
//           last one absorbing the remainder; segment i (1-based) has w = 1 - i / (k + 1).
//   linear: w(e) = e / (e1 - e2) + e2 / (e2 - e1), clamped to [0, 1].
double decay_weight(const SchedulePolicy& policy, int epoch);

// Throws std::out_of_range when epoch is outside [1, e3]. The two-stage policy
// keeps (0, 1) for every epoch after e1.
LossWeights weights_at(const SchedulePolicy& policy, int epoch);

Phase phase_of(const SchedulePolicy& policy, int epoch);

std::string_view to_string(PolicyKind kind);
std::string_view to_string(Phase phase);
PolicyKind parse_policy_kind(std::string_view name);

}  // namespace uda
