#pragma once

#include <deque>
#include <span>
#include <vector>

#include "uda/numerics.hpp"

namespace uda {

inline constexpr double kDefaultMomentum = 0.99;
inline constexpr std::size_t kDefaultQueueCapacity = 1024;

// p_hat <- m * p_hat + (1 - m) * p for every parameter. Throws ShapeError when
// the two encoders differ in shape and std::invalid_argument for m outside [0, 1].
void momentum_update(EncoderState& momentum, const EncoderState& online, double m);

struct QueueEntry {
    Vector feature;
    int pseudo_label = 0;
    int round_id = 0;
};

// Bounded FIFO of momentum-encoder features tagged with the pseudo label and
// clustering round they were produced under. Single owner; not synchronized.
class NegativeQueue {
public:
    explicit NegativeQueue(std::size_t capacity = kDefaultQueueCapacity, int round_id = 0);

    // Appends in order, evicting the oldest entries past capacity. Throws
    // StaleRoundError when round_id is not the queue's current round.
    void enqueue(const std::vector<Vector>& features, std::span<const int> pseudo_labels, int round_id);

    // Queued features whose label differs from the anchor's, oldest first.
    std::vector<Vector> negatives_for(int anchor_pseudo_label) const;

    // Same filter without copying; pointers stay valid until the next enqueue
    // or refresh.
    std::vector<const QueueEntry*> negative_entries(int anchor_pseudo_label) const;

    // Empties the queue and moves to a strictly later round.
    void refresh(int new_round_id);

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::size_t capacity() const { return capacity_; }
    int round_id() const { return round_id_; }
    const std::deque<QueueEntry>& entries() const { return entries_; }

private:
    std::size_t capacity_;
    int round_id_;
    std::deque<QueueEntry> entries_;
};

}  // namespace uda
