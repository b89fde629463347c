#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uda/numerics.hpp"

namespace uda {

enum class Domain : std::uint8_t { source, target };

// An encoder input without any label. Target samples reach the trainer only
// in this form.
struct Sample {
    std::int64_t instance_id = 0;
    int camera_id = 0;
    Domain domain = Domain::source;
    Vector input;

    bool operator==(const Sample&) const = default;
};

struct LabeledSample {
    Sample sample;
    int label = 0;

    bool operator==(const LabeledSample&) const = default;
};

struct DomainShift {
    double rotation_deg = 30.0;     // rotation in the plane of the first two dims
    double translation_norm = 1.0;  // norm of a random translation vector
    double scale_min = 0.8;         // per-dimension scale drawn uniformly
    double scale_max = 1.25;
};

struct SyntheticSpec {
    int num_classes = 10;  // per domain
    int samples_per_class = 50;
    int eval_samples_per_class = 20;  // held-out target samples used for retrieval metrics
    int input_dim = 16;
    double sigma_between = 1.0;
    double sigma_within = 0.6;
    DomainShift shift;
    int cameras_per_domain = 4;
    bool shared_centers = false;  // target reuses the source class centers
    std::uint64_t seed = 0;

    // Throws std::invalid_argument when sigma_between > sigma_within >= 0 fails
    // or a count is not positive. sigma_within == 0 is allowed.
    void validate() const;
};

struct SyntheticData {
    std::vector<LabeledSample> source;
    std::vector<Sample> target;              // training target, labels stripped
    std::vector<int> target_hidden_labels;   // evaluation only, aligned with `target`
    std::vector<LabeledSample> target_eval;  // held-out target for retrieval metrics
};

// Class centers ~ N(0, sigma_between^2 I), samples = center + N(0, sigma_within^2 I).
// Target classes are drawn independently (unless shared_centers) and pushed
// through the domain shift x -> S (R x) + t. Cameras are assigned round-robin.
SyntheticData generate(const SyntheticSpec& spec);

// One row of the feature CSV: instance_id,camera_id,label,dim,f_0,...,f_{dim-1}.
struct FeatureRow {
    std::int64_t instance_id = 0;
    int camera_id = 0;
    std::optional<int> label;  // "NA" in the file
    Vector features;

    bool operator==(const FeatureRow&) const = default;
};

struct FeatureTable {
    std::size_t dim = 0;
    std::vector<FeatureRow> rows;

    bool operator==(const FeatureTable&) const = default;
};

// Throws ParseError naming the line for malformed rows and SchemaError for
// dimension mismatches.
FeatureTable parse_features(const std::string& text);
FeatureTable load_features(const std::filesystem::path& path);

std::string format_features(const FeatureTable& table);
void save_features(const std::filesystem::path& path, const FeatureTable& table);

FeatureTable to_table(const std::vector<LabeledSample>& samples);
FeatureTable to_table(const std::vector<Sample>& samples);

// Splits a table into label-free samples and (possibly empty) labels.
std::vector<Sample> samples_from(const FeatureTable& table, Domain domain);
std::vector<LabeledSample> labeled_samples_from(const FeatureTable& table, Domain domain);

// P distinct classes x K members, as indices into `labels`. Entries equal to
// kOutlier are never drawn. Classes with fewer than K members are sampled with
// replacement. Throws DegenerateError when fewer than 2 or fewer than P classes
// are usable.
std::vector<std::size_t> pk_sample(std::span<const int> labels, int P, int K, std::mt19937_64& rng);
std::vector<std::size_t> pk_sample(std::span<const int> labels, int P, int K, std::uint64_t seed);

}  // namespace uda
