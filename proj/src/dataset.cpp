#include "motic/dataset.hpp"

namespace motic {

SessionDataset::SessionDataset(int dim, std::vector<LabeledVec> base_train,
                               std::vector<std::vector<LabeledVec>> supports,
                               std::vector<std::vector<LabeledVec>> test_splits,
                               std::vector<std::vector<int>> session_classes)
    : dim_(dim),
      base_train_(std::move(base_train)),
      supports_(std::move(supports)),
      test_splits_(std::move(test_splits)),
      session_classes_(std::move(session_classes)) {
    if (test_splits_.size() != supports_.size() + 1 ||
        session_classes_.size() != supports_.size() + 1) {
        throw ConfigError("SessionDataset: split counts inconsistent");
    }
}

const std::vector<LabeledVec>& SessionDataset::base() const {
    if (log_) log_->events.push_back({"base", 0});
    return base_train_;
}

const std::vector<LabeledVec>& SessionDataset::support(int t) const {
    if (t < 1 || t > sessions()) throw IndexOutOfRangeError("SessionDataset::support: bad session");
    if (log_) log_->events.push_back({"support", t});
    return supports_[static_cast<std::size_t>(t) - 1];
}

const std::vector<LabeledVec>& SessionDataset::test_split(int t) const {
    if (t < 0 || t > sessions()) throw IndexOutOfRangeError("SessionDataset::test_split: bad session");
    if (log_) log_->events.push_back({"test", t});
    return test_splits_[static_cast<std::size_t>(t)];
}

int SessionDataset::total_classes() const {
    int n = 0;
    for (const auto& cls : session_classes_) n += static_cast<int>(cls.size());
    return n;
}

}  // namespace motic
