#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "uda/clustering.hpp"
#include "uda/data.hpp"
#include "uda/evaluator.hpp"
#include "uda/losses.hpp"
#include "uda/memory.hpp"
#include "uda/numerics.hpp"
#include "uda/schedule.hpp"

namespace uda {

enum class Optimizer { sgd, adam };

// How contrastive pairs are formed on the target domain.
enum class CclPairs {
    cluster,   // positives and filtered negatives by pseudo label
    instance,  // every sample its own class; positive is a noisy view of the anchor
    off,
};

struct TrainConfig {
    SchedulePolicy schedule;
    double delta = 0.1;
    double gamma = 0.7;
    double tau = 0.07;
    double momentum = kDefaultMomentum;
    double margin = kDefaultTripletMargin;
    double learning_rate = 0.05;
    DbscanParams dbscan;
    std::size_t queue_capacity = kDefaultQueueCapacity;
    int P = 4;
    int K = 4;
    int epochs_per_cluster_round = 2;
    int steps_per_epoch = 0;  // 0: target sample count / (P K)
    std::uint64_t seed = 0;
    CclDenominator ccl_denominator = CclDenominator::with_positive;
    CclPairs ccl_pairs = CclPairs::cluster;
    double instance_noise = 0.1;  // input noise of the instance-wise positive view
    Optimizer optimizer = Optimizer::sgd;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double weight_decay = 5e-4;  // adam only
    std::size_t hidden_width = 32;
    std::size_t feature_dim = 16;

    // Throws ConfigError naming the offending field.
    void validate() const;
};

// Held-out truth used only for logging: the hidden target labels aligned with
// the training target samples, and a labeled evaluation split.
struct EvaluationProbe {
    std::vector<int> target_labels;
    std::vector<LabeledSample> eval;
};

struct EpochRecord {
    int epoch = 0;
    Phase phase = Phase::pretrain;
    int round = 0;  // clustering round in effect, 0 before the first one
    double lambda_s = 0.0;
    double lambda_t = 0.0;
    double loss_source = 0.0;
    double loss_ccl = 0.0;
    double loss_spatial = 0.0;
    double loss_fourier = 0.0;
    double loss_total = 0.0;
    int num_clusters = 0;
    double outlier_fraction = 0.0;
    std::optional<double> nmi;
    std::optional<double> bcubed_f;
    std::optional<double> mAP;
    std::optional<double> rank1;
    int skipped_round = 0;  // 1 when this epoch's clustering was degenerate

    bool operator==(const EpochRecord&) const = default;
};

std::string to_json_line(const EpochRecord& r);

// Per-step view handed to TrainHooks::on_step after the momentum update.
struct StepTrace {
    int epoch = 0;
    int step = 0;
    Phase phase = Phase::pretrain;
    int round = 0;
    std::vector<std::int64_t> source_ids;
    std::vector<std::int64_t> target_ids;
    std::vector<int> anchor_labels;
    std::vector<std::vector<int>> negative_labels;  // labels of the negatives served to each anchor
    const EncoderState* online = nullptr;
    const EncoderState* momentum_before = nullptr;
    const EncoderState* momentum_after = nullptr;
};

struct TrainHooks {
    std::function<void(const StepTrace&)> on_step;
};

struct TrainResult {
    EncoderState online;
    EncoderState momentum;
    ClassifierHead source_head;
    std::vector<EpochRecord> records;
};

class TrainingAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;

    // Records of the epochs completed before the abort.
    std::vector<EpochRecord> records;
};

// Three-phase training over epochs 1..e3. Throws TrainingAborted after three
// consecutive degenerate clustering rounds (fewer than 2 clusters).
TrainResult train(const std::vector<LabeledSample>& source, const std::vector<Sample>& target,
                  const TrainConfig& config, const EvaluationProbe* probe = nullptr, const TrainHooks& hooks = {});

// Two-stage schedule, no contrastive term (delta = 0, pairs off), no Fourier
// term (gamma = 1).
TrainConfig baseline_config(TrainConfig config);
TrainResult run_baseline(const std::vector<LabeledSample>& source, const std::vector<Sample>& target,
                         const TrainConfig& config, const EvaluationProbe* probe = nullptr,
                         const TrainHooks& hooks = {});

// Encodes the probe's evaluation split and scores it with `evaluate`.
RetrievalResult evaluate_encoder(const EncoderState& encoder, const std::vector<LabeledSample>& eval);

// Model file: "UDAM", version byte, activation byte, normalize byte, u32 layer
// count, then per layer u32 rows, u32 cols, rows*cols f64 weights (row-major)
// and rows f64 biases. Little-endian.
inline constexpr std::uint8_t kModelVersion = 1;
std::string serialize_model(const EncoderState& state);
EncoderState deserialize_model(const std::string& bytes);
void save_model(const std::filesystem::path& path, const EncoderState& state);
EncoderState load_model(const std::filesystem::path& path);

std::string_view to_string(CclPairs pairs);
std::string_view to_string(Optimizer optimizer);

}  // namespace uda
