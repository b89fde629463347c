#include "uda/memory.hpp"

#include <stdexcept>
#include <string>

#include "uda/errors.hpp"

namespace uda {

void momentum_update(EncoderState& momentum, const EncoderState& online, double m) {
    if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("momentum_update: m must lie in [0, 1]");
    if (momentum.layers.size() != online.layers.size()) throw ShapeError("momentum_update: layer count");
    for (std::size_t i = 0; i < online.layers.size(); ++i) {
        Layer& dst = momentum.layers[i];
        const Layer& src = online.layers[i];
        if (dst.weight.rows != src.weight.rows || dst.weight.cols != src.weight.cols ||
            dst.bias.size() != src.bias.size()) {
            throw ShapeError("momentum_update: layer " + std::to_string(i) + " shape");
        }
    }
    const double keep = 1.0 - m;
    for (std::size_t i = 0; i < online.layers.size(); ++i) {
        Layer& dst = momentum.layers[i];
        const Layer& src = online.layers[i];
        for (std::size_t k = 0; k < dst.weight.data.size(); ++k) {
            dst.weight.data[k] = m * dst.weight.data[k] + keep * src.weight.data[k];
        }
        for (std::size_t k = 0; k < dst.bias.size(); ++k) dst.bias[k] = m * dst.bias[k] + keep * src.bias[k];
    }
}

NegativeQueue::NegativeQueue(std::size_t capacity, int round_id) : capacity_(capacity), round_id_(round_id) {
    if (capacity == 0) throw std::invalid_argument("NegativeQueue: capacity must be positive");
}

void NegativeQueue::enqueue(const std::vector<Vector>& features, std::span<const int> pseudo_labels,
                            int round_id) {
    if (round_id != round_id_) {
        throw StaleRoundError("enqueue: round " + std::to_string(round_id) + " but queue is at round " +
                              std::to_string(round_id_));
    }
    if (features.size() != pseudo_labels.size()) throw ShapeError("enqueue: features and labels differ in count");
    for (std::size_t i = 0; i < features.size(); ++i) {
        entries_.push_back(QueueEntry{features[i], pseudo_labels[i], round_id});
        if (entries_.size() > capacity_) entries_.pop_front();
    }
}

std::vector<Vector> NegativeQueue::negatives_for(int anchor_pseudo_label) const {
    std::vector<Vector> out;
    for (const QueueEntry& e : entries_) {
        if (e.pseudo_label != anchor_pseudo_label) out.push_back(e.feature);
    }
    return out;
}

std::vector<const QueueEntry*> NegativeQueue::negative_entries(int anchor_pseudo_label) const {
    std::vector<const QueueEntry*> out;
    out.reserve(entries_.size());
    for (const QueueEntry& e : entries_) {
        if (e.pseudo_label != anchor_pseudo_label) out.push_back(&e);
    }
    return out;
}

void NegativeQueue::refresh(int new_round_id) {
    if (new_round_id <= round_id_) {
        throw std::invalid_argument("refresh: round " + std::to_string(new_round_id) + " does not follow " +
                                    std::to_string(round_id_));
    }
    entries_.clear();
    round_id_ = new_round_id;
}

}  // namespace uda
