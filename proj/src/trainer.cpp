#include "uda/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"

#include "uda/errors.hpp"
#include "uda/evaluator.hpp"
#include "uda/fourier.hpp"

namespace uda {

void TrainConfig::validate() const {
    try {
        schedule.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("schedule", e.what());
    }
    if (delta < 0.0) throw ConfigError("loss.delta", "must be >= 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("loss.gamma", "must lie in [0, 1]");
    if (!(tau > 0.0)) throw ConfigError("loss.tau", "must be > 0");
    if (!(margin >= 0.0)) throw ConfigError("loss.margin", "must be >= 0");
    if (!(momentum >= 0.0 && momentum <= 1.0)) throw ConfigError("memory.momentum", "must lie in [0, 1]");
    if (queue_capacity == 0) throw ConfigError("memory.queue_capacity", "must be positive");
    if (!(learning_rate >= 0.0)) throw ConfigError("train.learning_rate", "must be >= 0");
    if (!(dbscan.eps > 0.0)) throw ConfigError("dbscan.eps", "must be > 0");
    if (dbscan.min_pts < 1) throw ConfigError("dbscan.min_pts", "must be >= 1");
    if (P < 2) throw ConfigError("train.P", "must be >= 2");
    if (K < 2) throw ConfigError("train.K", "must be >= 2");
    if (epochs_per_cluster_round < 1) throw ConfigError("train.epochs_per_cluster_round", "must be >= 1");
    if (steps_per_epoch < 0) throw ConfigError("train.steps_per_epoch", "must be >= 0");
    if (instance_noise < 0.0) throw ConfigError("loss.instance_noise", "must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("train.adam_beta1", "must lie in [0, 1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("train.adam_beta2", "must lie in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("train.weight_decay", "must be >= 0");
    if (hidden_width == 0) throw ConfigError("model.hidden_width", "must be positive");
    if (feature_dim == 0) throw ConfigError("model.feature_dim", "must be positive");
}

std::string_view to_string(CclPairs pairs) {
    switch (pairs) {
        case CclPairs::cluster: return "cluster";
        case CclPairs::instance: return "instance";
        case CclPairs::off: return "off";
    }
    return "?";
}

std::string_view to_string(Optimizer optimizer) { return optimizer == Optimizer::adam ? "adam" : "sgd"; }

std::string to_json_line(const EpochRecord& r) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["phase"] = std::string(to_string(r.phase));
    j["round"] = r.round;
    j["lambda_s"] = r.lambda_s;
    j["lambda_t"] = r.lambda_t;
    j["loss_source"] = r.loss_source;
    j["loss_ccl"] = r.loss_ccl;
    j["loss_spatial"] = r.loss_spatial;
    j["loss_fourier"] = r.loss_fourier;
    j["loss_total"] = r.loss_total;
    j["num_clusters"] = r.num_clusters;
    j["outlier_fraction"] = r.outlier_fraction;
    j["nmi"] = opt(r.nmi);
    j["bcubed_f"] = opt(r.bcubed_f);
    j["mAP"] = opt(r.mAP);
    j["rank1"] = opt(r.rank1);
    j["skipped_round"] = r.skipped_round;
    return j.dump();
}

RetrievalResult evaluate_encoder(const EncoderState& encoder, const std::vector<LabeledSample>& eval) {
    RetrievalSet all;
    for (const LabeledSample& s : eval) {
        all.features.push_back(encode(encoder, s.sample.input));
        all.labels.push_back(s.label);
        all.cameras.push_back(s.sample.camera_id);
        all.instance_ids.push_back(s.sample.instance_id);
    }
    auto [query, gallery] = split_query_gallery(all);
    return evaluate(query, gallery);
}

namespace {

// Plain gradient descent or Adam over one flat parameter block.
class Updater {
public:
    Updater(const TrainConfig& cfg) : cfg_(cfg) {}

    void step(std::span<double> params, std::span<const double> grads, std::vector<double>& m,
              std::vector<double>& v, long& t) const {
        if (cfg_.optimizer == Optimizer::sgd) {
            for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg_.learning_rate * grads[i];
            return;
        }
        if (m.size() != params.size()) {
            m.assign(params.size(), 0.0);
            v.assign(params.size(), 0.0);
            t = 0;
        }
        ++t;
        const double b1 = cfg_.adam_beta1;
        const double b2 = cfg_.adam_beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grads[i] + cfg_.weight_decay * params[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            params[i] -= cfg_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + 1e-8);
        }
    }

private:
    const TrainConfig& cfg_;
};

struct AdamSlot {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;

    void reset() {
        m.clear();
        v.clear();
        t = 0;
    }
};

void add_scaled(Vector& dst, std::span<const double> src, double scale) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

void add_scaled(HeadGradients& dst, const HeadGradients& src, double scale) {
    add_scaled(dst.weight.data, src.weight.data, scale);
    add_scaled(dst.bias, src.bias, scale);
}

ClassifierHead random_head(std::size_t classes, std::size_t dim, std::mt19937_64& rng) {
    ClassifierHead head{Matrix(classes, dim), Vector(classes, 0.0)};
    std::normal_distribution<double> n(0.0, 0.01);
    for (double& w : head.weight.data) w = n(rng);
    return head;
}

struct HeadState {
    ClassifierHead head;
    HeadGradients grad;
    AdamSlot w_slot;
    AdamSlot b_slot;

    void reset(ClassifierHead h) {
        head = std::move(h);
        grad = zero_gradients(head);
        w_slot.reset();
        b_slot.reset();
    }
    void zero() { grad = zero_gradients(head); }
    void apply(const Updater& u) {
        u.step(head.weight.data, grad.weight.data, w_slot.m, w_slot.v, w_slot.t);
        u.step(head.bias, grad.bias, b_slot.m, b_slot.v, b_slot.t);
    }
};

// One batch encoded by the online encoder with per-sample feature gradients.
struct EncodedBatch {
    std::vector<ForwardTrace> traces;
    std::vector<Vector> features;
    std::vector<Vector> grads;

    void encode_all(const EncoderState& enc, const std::vector<const Vector*>& inputs) {
        traces.clear();
        features.clear();
        for (const Vector* x : inputs) {
            traces.push_back(forward(enc, *x));
            features.push_back(traces.back().output);
        }
        grads.assign(features.size(), Vector(enc.output_dim(), 0.0));
    }
};

class Trainer {
public:
    Trainer(const std::vector<LabeledSample>& source, const std::vector<Sample>& target, const TrainConfig& cfg,
            const EvaluationProbe* probe, const TrainHooks& hooks)
        : source_(source), target_(target), cfg_(cfg), probe_(probe), hooks_(hooks), rng_(cfg.seed),
          updater_(cfg), queue_(cfg.queue_capacity, 0) {}

    TrainResult run();

private:
    void start_round(int epoch, EpochRecord& rec);
    void step(int epoch, int step_index, const LossWeights& w, Phase phase, LossTerms& sums, double& total);
    double source_terms(double coef, StepTrace& trace);
    void target_terms(const LossCoefficients& coef, LossTerms& terms, StepTrace& trace);
    void record_metrics(EpochRecord& rec);

    const std::vector<LabeledSample>& source_;
    const std::vector<Sample>& target_;
    const TrainConfig& cfg_;
    const EvaluationProbe* probe_;
    const TrainHooks& hooks_;
    std::mt19937_64 rng_;
    Updater updater_;

    EncoderState online_;
    EncoderState momentum_;
    std::vector<Layer> encoder_grad_;
    AdamSlot encoder_slot_;
    HeadState source_head_;
    HeadState target_head_;
    HeadState fourier_head_;
    std::vector<int> source_labels_;

    NegativeQueue queue_;
    PseudoLabeling labeling_;
    int round_ = 0;
    bool target_active_ = false;
    int consecutive_degenerate_ = 0;
    std::vector<std::size_t> pending_;  // target batch awaiting enqueue
    std::vector<int> pending_labels_;
};

TrainResult Trainer::run() {
    cfg_.validate();
    if (source_.empty()) throw std::invalid_argument("train: empty source domain");
    if (target_.empty()) throw std::invalid_argument("train: empty target domain");
    const std::size_t in_dim = source_.front().sample.input.size();
    for (const LabeledSample& s : source_) {
        if (s.sample.input.size() != in_dim) throw ShapeError("train: source inputs differ in dimension");
    }
    for (const Sample& s : target_) {
        if (s.input.size() != in_dim) throw ShapeError("train: target input dimension differs from source");
    }
    if (probe_ && !probe_->target_labels.empty() && probe_->target_labels.size() != target_.size()) {
        throw ShapeError("train: probe labels do not align with the target samples");
    }

    online_ = make_encoder(in_dim, cfg_.hidden_width, cfg_.feature_dim, rng_());
    momentum_ = online_;
    int num_source_classes = 0;
    for (const LabeledSample& s : source_) {
        if (s.label < 0) throw std::invalid_argument("train: negative source label");
        source_labels_.push_back(s.label);
        num_source_classes = std::max(num_source_classes, s.label + 1);
    }
    source_head_.reset(random_head(static_cast<std::size_t>(num_source_classes), cfg_.feature_dim, rng_));

    TrainResult result;
    const SchedulePolicy& sched = cfg_.schedule;
    for (int epoch = 1; epoch <= sched.e3; ++epoch) {
        const LossWeights w = weights_at(sched, epoch);
        const Phase phase = phase_of(sched, epoch);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.phase = phase;
        rec.lambda_s = w.source;
        rec.lambda_t = w.target;

        if (phase != Phase::pretrain && w.target > 0.0 && (epoch - sched.e1 - 1) % cfg_.epochs_per_cluster_round == 0) {
            try {
                start_round(epoch, rec);
            } catch (TrainingAborted& e) {
                e.records = std::move(result.records);
                throw;
            }
        }

        int steps = cfg_.steps_per_epoch;
        if (steps == 0) {
            steps = std::max<int>(1, static_cast<int>(target_.size()) / (cfg_.P * cfg_.K));
        }
        LossTerms sums;
        double total = 0.0;
        for (int s = 0; s < steps; ++s) step(epoch, s, w, phase, sums, total);
        const double inv = 1.0 / static_cast<double>(steps);
        rec.loss_source = sums.source * inv;
        rec.loss_ccl = sums.ccl * inv;
        rec.loss_spatial = sums.spatial * inv;
        rec.loss_fourier = sums.fourier * inv;
        rec.loss_total = total * inv;
        rec.round = round_;
        record_metrics(rec);
        result.records.push_back(rec);
    }
    result.online = std::move(online_);
    result.momentum = std::move(momentum_);
    result.source_head = std::move(source_head_.head);
    return result;
}

void Trainer::start_round(int epoch, EpochRecord& rec) {
    (void)epoch;
    ++round_;
    std::vector<Vector> feats;
    feats.reserve(target_.size());
    for (const Sample& s : target_) feats.push_back(encode(momentum_, s.input));
    labeling_ = dbscan(feats, cfg_.dbscan, round_);
    queue_.refresh(round_);
    if (labeling_.num_clusters < 2) {
        target_active_ = false;
        rec.skipped_round = 1;
        if (++consecutive_degenerate_ >= 3) {
            throw TrainingAborted("three consecutive degenerate clustering rounds (last: " +
                                  std::to_string(labeling_.num_clusters) + " clusters, round " +
                                  std::to_string(round_) + ")");
        }
        return;
    }
    consecutive_degenerate_ = 0;
    target_active_ = true;
    target_head_.reset(init_head_from_centroids(labeling_));

    std::vector<Vector> amps;
    amps.reserve(feats.size());
    for (const Vector& f : feats) amps.push_back(amplitude_spectrum(f, kAmplitudeEpsilon));
    fourier_head_.reset(init_head_from_centroids(cluster_centroids(amps, labeling_.assignment, labeling_.num_clusters)));
}

double Trainer::source_terms(double coef, StepTrace& trace) {
    const std::vector<std::size_t> idx = pk_sample(source_labels_, cfg_.P, cfg_.K, rng_);
    std::vector<const Vector*> inputs;
    std::vector<int> labels;
    for (std::size_t i : idx) {
        inputs.push_back(&source_[i].sample.input);
        labels.push_back(source_[i].label);
        trace.source_ids.push_back(source_[i].sample.instance_id);
    }
    EncodedBatch batch;
    batch.encode_all(online_, inputs);
    const double inv = 1.0 / static_cast<double>(idx.size());
    double ce = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const CrossEntropyResult r = cross_entropy(source_head_.head, batch.features[i], labels[i]);
        ce += r.value * inv;
        add_scaled(batch.grads[i], r.feature_grad, coef * inv);
        add_scaled(source_head_.grad, r.head_grad, coef * inv);
    }
    const FeatureLoss tri = triplet_loss(batch.features, labels, cfg_.margin);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        add_scaled(batch.grads[i], tri.grads[i], coef);
        backprop_accumulate(online_, batch.traces[i], batch.grads[i], encoder_grad_);
    }
    return ce + tri.value;
}

void Trainer::target_terms(const LossCoefficients& coef, LossTerms& terms, StepTrace& trace) {
    const int classes = std::min(cfg_.P, labeling_.num_clusters);
    const std::vector<std::size_t> idx = pk_sample(labeling_.assignment, classes, cfg_.K, rng_);
    const std::size_t n = idx.size();
    std::vector<const Vector*> inputs;
    std::vector<int> labels;
    for (std::size_t i : idx) {
        inputs.push_back(&target_[i].input);
        labels.push_back(labeling_.assignment[i]);
        trace.target_ids.push_back(target_[i].instance_id);
    }
    EncodedBatch batch;
    batch.encode_all(online_, inputs);
    const double inv = 1.0 / static_cast<double>(n);

    // spatial: CE + triplet on pseudo labels
    double ce = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const CrossEntropyResult r = cross_entropy(target_head_.head, batch.features[i], labels[i]);
        ce += r.value * inv;
        add_scaled(batch.grads[i], r.feature_grad, coef.spatial * inv);
        add_scaled(target_head_.grad, r.head_grad, coef.spatial * inv);
    }
    const FeatureLoss tri = triplet_loss(batch.features, labels, cfg_.margin);
    for (std::size_t i = 0; i < n; ++i) add_scaled(batch.grads[i], tri.grads[i], coef.spatial);
    terms.spatial = ce + tri.value;

    // Fourier: CE on amplitude spectra
    double fce = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const CrossEntropyResult r = fourier_ce(fourier_head_.head, batch.features[i], labels[i], kAmplitudeEpsilon);
        fce += r.value * inv;
        add_scaled(batch.grads[i], r.feature_grad, coef.fourier * inv);
        add_scaled(fourier_head_.grad, r.head_grad, coef.fourier * inv);
    }
    terms.fourier = fce;

    // contrastive
    std::vector<int> pair_labels(n);
    EncodedBatch views;  // instance-wise positives
    if (cfg_.ccl_pairs != CclPairs::off) {
        ContrastiveBatch cb;
        std::vector<std::size_t> anchor_of;
        std::vector<std::size_t> positive_of;
        if (cfg_.ccl_pairs == CclPairs::instance) {
            std::normal_distribution<double> noise(0.0, cfg_.instance_noise);
            std::vector<Vector> noisy;
            noisy.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                Vector x = *inputs[i];
                for (double& v : x) v += noise(rng_);
                noisy.push_back(std::move(x));
            }
            std::vector<const Vector*> noisy_ptrs;
            for (const Vector& x : noisy) noisy_ptrs.push_back(&x);
            views.encode_all(online_, noisy_ptrs);
            for (std::size_t i = 0; i < n; ++i) pair_labels[i] = static_cast<int>(idx[i]);
        } else {
            pair_labels = labels;
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t pos = n;
            if (cfg_.ccl_pairs == CclPairs::cluster) {
                // hardest positive: least similar same-cluster sample in the batch
                double best = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i || labels[j] != labels[i]) continue;
                    const double sim = dot(batch.features[i], batch.features[j]);
                    if (pos == n || sim < best) {
                        best = sim;
                        pos = j;
                    }
                }
                if (pos == n) continue;
            }
            std::vector<const QueueEntry*> negs = queue_.negative_entries(pair_labels[i]);
            if (negs.empty()) continue;
            std::vector<std::span<const double>> views_of;
            std::vector<int> neg_labels;
            views_of.reserve(negs.size());
            for (const QueueEntry* e : negs) {
                views_of.emplace_back(e->feature);
                if (hooks_.on_step) neg_labels.push_back(e->pseudo_label);
            }
            cb.anchors.push_back(batch.features[i]);
            cb.positives.push_back(cfg_.ccl_pairs == CclPairs::cluster ? batch.features[pos] : views.features[i]);
            cb.negatives.push_back(std::move(views_of));
            anchor_of.push_back(i);
            positive_of.push_back(pos);
            if (hooks_.on_step) {
                trace.anchor_labels.push_back(pair_labels[i]);
                trace.negative_labels.push_back(std::move(neg_labels));
            }
        }
        if (!cb.anchors.empty()) {
            const ContrastiveLoss c = ccl_loss(cb, cfg_.tau, cfg_.ccl_denominator);
            terms.ccl = c.value;
            for (std::size_t a = 0; a < anchor_of.size(); ++a) {
                add_scaled(batch.grads[anchor_of[a]], c.anchor_grads[a], coef.ccl);
                if (cfg_.ccl_pairs == CclPairs::cluster) {
                    add_scaled(batch.grads[positive_of[a]], c.positive_grads[a], coef.ccl);
                } else {
                    add_scaled(views.grads[anchor_of[a]], c.positive_grads[a], coef.ccl);
                }
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) backprop_accumulate(online_, batch.traces[i], batch.grads[i], encoder_grad_);
    if (cfg_.ccl_pairs == CclPairs::instance) {
        for (std::size_t i = 0; i < n; ++i) backprop_accumulate(online_, views.traces[i], views.grads[i], encoder_grad_);
    }

    // enqueued with momentum-encoder features once this step's update is applied
    pending_.assign(idx.begin(), idx.end());
    pending_labels_ = std::move(pair_labels);
}

void Trainer::step(int epoch, int step_index, const LossWeights& w, Phase phase, LossTerms& sums, double& total) {
    StepTrace trace;
    trace.epoch = epoch;
    trace.step = step_index;
    trace.phase = phase;
    trace.round = round_;

    const LossCoefficients coef = combined_coefficients(w.source, w.target, cfg_.delta, cfg_.gamma);
    encoder_grad_ = zero_gradients(online_);
    source_head_.zero();
    target_head_.zero();
    fourier_head_.zero();
    pending_.clear();

    LossTerms terms;
    if (w.source > 0.0) terms.source = source_terms(coef.source, trace);
    const bool use_target = w.target > 0.0 && target_active_;
    if (use_target) target_terms(coef, terms, trace);

    Vector flat_grad = flatten(encoder_grad_);
    Vector flat = flatten(online_.layers);
    updater_.step(flat, flat_grad, encoder_slot_.m, encoder_slot_.v, encoder_slot_.t);
    assign(online_.layers, flat);
    if (w.source > 0.0) source_head_.apply(updater_);
    if (use_target) {
        target_head_.apply(updater_);
        fourier_head_.apply(updater_);
    }

    EncoderState before;
    if (hooks_.on_step) before = momentum_;
    momentum_update(momentum_, online_, cfg_.momentum);

    if (!pending_.empty()) {
        std::vector<Vector> keys;
        keys.reserve(pending_.size());
        for (std::size_t i : pending_) keys.push_back(encode(momentum_, target_[i].input));
        queue_.enqueue(keys, pending_labels_, round_);
    }

    sums.source += terms.source;
    sums.ccl += terms.ccl;
    sums.spatial += terms.spatial;
    sums.fourier += terms.fourier;
    total += combined_loss(terms, w.source, use_target ? w.target : 0.0, cfg_.delta, cfg_.gamma);

    if (hooks_.on_step) {
        trace.online = &online_;
        trace.momentum_before = &before;
        trace.momentum_after = &momentum_;
        hooks_.on_step(trace);
    }
}

void Trainer::record_metrics(EpochRecord& rec) {
    PseudoLabeling diag;
    const PseudoLabeling* labeling = &labeling_;
    if (round_ == 0 || !target_active_) {
        std::vector<Vector> feats;
        feats.reserve(target_.size());
        for (const Sample& s : target_) feats.push_back(encode(momentum_, s.input));
        diag = dbscan(feats, cfg_.dbscan, round_);
        labeling = &diag;
    }
    rec.num_clusters = labeling->num_clusters;
    rec.outlier_fraction =
        static_cast<double>(labeling->outlier_count()) / static_cast<double>(labeling->assignment.size());
    if (!probe_) return;
    if (!probe_->target_labels.empty()) {
        rec.nmi = nmi(labeling->assignment, probe_->target_labels);
        rec.bcubed_f = bcubed_f(labeling->assignment, probe_->target_labels);
    }
    if (!probe_->eval.empty()) {
        const RetrievalResult r = evaluate_encoder(momentum_, probe_->eval);
        rec.mAP = r.mAP;
        rec.rank1 = r.rank1();
    }
}

}  // namespace

TrainResult train(const std::vector<LabeledSample>& source, const std::vector<Sample>& target,
                  const TrainConfig& config, const EvaluationProbe* probe, const TrainHooks& hooks) {
    Trainer t(source, target, config, probe, hooks);
    return t.run();
}

TrainConfig baseline_config(TrainConfig config) {
    config.schedule.kind = PolicyKind::two_stage;
    config.delta = 0.0;
    config.gamma = 1.0;
    config.ccl_pairs = CclPairs::off;
    return config;
}

TrainResult run_baseline(const std::vector<LabeledSample>& source, const std::vector<Sample>& target,
                         const TrainConfig& config, const EvaluationProbe* probe, const TrainHooks& hooks) {
    return train(source, target, baseline_config(config), probe, hooks);
}

}  // namespace uda
