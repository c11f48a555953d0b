#include "motic/queue.hpp"

#include <cmath>
#include <cstring>

namespace motic {

FeatureQueue::FeatureQueue(int capacity, int dim) : capacity_(capacity), dim_(dim) {
    if (capacity < 1) throw ConfigError("FeatureQueue: capacity must be >= 1");
    if (dim < 1) throw ConfigError("FeatureQueue: dim must be >= 1");
    features_.assign(static_cast<std::size_t>(capacity) * dim, 0.0);
    labels_.assign(static_cast<std::size_t>(capacity), 0);
    valid_.assign(static_cast<std::size_t>(capacity), 0);
}

void FeatureQueue::push(const std::vector<Vec>& keys, const std::vector<int>& labels) {
    if (keys.size() != labels.size()) throw ShapeMismatchError("queue_push: keys/labels length mismatch");
    const int b = static_cast<int>(keys.size());
    if (b < 1 || b > capacity_ || capacity_ % b != 0) {
        throw BatchTooLargeError("queue_push: batch size must divide capacity");
    }
    for (int i = 0; i < b; ++i) {
        if (static_cast<int>(keys[i].size()) != dim_) {
            throw ShapeMismatchError("queue_push: key dim mismatch");
        }
        if (std::fabs(norm(keys[i]) - 1.0) > 1e-9) {
            throw NormViolationError("queue_push: key not unit-norm");
        }
        if (labels[i] < 0) throw LabelOutOfRangeError("queue_push: negative label");
    }
    for (int i = 0; i < b; ++i) {
        const int slot = (head_ + i) % capacity_;
        std::memcpy(features_.data() + static_cast<std::size_t>(slot) * dim_, keys[i].data(),
                    sizeof(double) * dim_);
        labels_[slot] = labels[i];
        valid_[slot] = 1;
    }
    head_ = (head_ + b) % capacity_;
}

FeatureQueue::Snapshot FeatureQueue::snapshot() const {
    // Walking the ring from head wraps past any still-invalid slots first,
    // so valid entries come out oldest to newest.
    Snapshot s;
    const int n = valid_count();
    s.features.reserve(n);
    s.labels.reserve(n);
    for (int i = 0; i < capacity_; ++i) {
        const int slot = (head_ + i) % capacity_;
        if (!valid_[slot]) continue;
        const double* row = features_.data() + static_cast<std::size_t>(slot) * dim_;
        s.features.emplace_back(row, row + dim_);
        s.labels.push_back(labels_[slot]);
    }
    return s;
}

int FeatureQueue::valid_count() const {
    int n = 0;
    for (std::uint8_t v : valid_) n += v;
    return n;
}

}  // namespace motic
