#pragma once

#include <string>
#include <vector>

#include "motic/error.hpp"
#include "motic/vec.hpp"

namespace motic {

struct LabeledVec {
    Vec x;
    int label = 0;
};

// Access trail for the session-protocol audit: records which split was read
// and in what order, so tests can prove incremental data is never touched
// before its session.
struct AccessLog {
    struct Event {
        std::string kind;  // "base", "support", "test"
        int session = 0;
    };
    std::vector<Event> events;
};

// The base session plus T incremental N-way K-shot sessions, with
// per-session test splits. Class id spaces of sessions are disjoint and
// contiguous: base classes are [0, |C0|), session t adds the next N ids.
// All reads go through the logged accessors.
class SessionDataset {
public:
    SessionDataset() = default;
    SessionDataset(int dim, std::vector<LabeledVec> base_train,
                   std::vector<std::vector<LabeledVec>> supports,
                   std::vector<std::vector<LabeledVec>> test_splits,
                   std::vector<std::vector<int>> session_classes);

    const std::vector<LabeledVec>& base() const;
    const std::vector<LabeledVec>& support(int t) const;     // t in [1, sessions()]
    const std::vector<LabeledVec>& test_split(int t) const;  // t in [0, sessions()]

    int dim() const { return dim_; }
    int sessions() const { return static_cast<int>(supports_.size()); }  // T
    int base_class_count() const { return static_cast<int>(session_classes_.at(0).size()); }
    int total_classes() const;
    const std::vector<int>& classes_of_session(int t) const { return session_classes_.at(t); }
    bool is_base_class(int label) const { return label < base_class_count(); }

    void set_access_log(AccessLog* log) const { log_ = log; }

private:
    int dim_ = 0;
    std::vector<LabeledVec> base_train_;
    std::vector<std::vector<LabeledVec>> supports_;     // [t-1]
    std::vector<std::vector<LabeledVec>> test_splits_;  // [t], including 0
    std::vector<std::vector<int>> session_classes_;     // [t], including 0
    mutable AccessLog* log_ = nullptr;
};

}  // namespace motic
