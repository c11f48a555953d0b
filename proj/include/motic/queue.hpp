#pragma once

#include <cstdint>
#include <vector>

#include "motic/vec.hpp"

namespace motic {

// Fixed-capacity FIFO ring of key features with a parallel label ring and a
// validity mask. Capacity must be an integer multiple of every push batch
// size, so the ring arithmetic stays exact. Never-written slots stay invalid
// and are excluded from snapshots; they are never pre-filled.
class FeatureQueue {
public:
    FeatureQueue(int capacity, int dim);

    // Overwrites the oldest len(keys) slots in FIFO order. Each key must be
    // unit-norm within 1e-9; labels are the virtual (post-expansion) labels.
    void push(const std::vector<Vec>& keys, const std::vector<int>& labels);

    struct Snapshot {
        std::vector<Vec> features;
        std::vector<int> labels;
        int count() const { return static_cast<int>(labels.size()); }
    };

    // Valid entries only, oldest first. A copy, so readers never observe a
    // partially updated ring.
    Snapshot snapshot() const;

    int capacity() const { return capacity_; }
    int dim() const { return dim_; }
    int valid_count() const;
    int head() const { return head_; }

private:
    int capacity_;
    int dim_;
    int head_ = 0;
    std::vector<double> features_;  // capacity * dim, row per slot
    std::vector<int> labels_;
    std::vector<std::uint8_t> valid_;
};

}  // namespace motic
