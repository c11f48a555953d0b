#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace motic {

struct GradCheckResult {
    std::string name;
    int instances = 0;
    double max_rel_err = 0.0;
    bool pass = false;
};

// Each suite builds seeded random instances, evaluates the analytic gradient,
// and compares against central finite differences at h = 1e-5 through the
// loss-value path only. The relative error is
// ||analytic - fd||_2 / max(||analytic||_2, ||fd||_2, 1e-12), worst instance
// reported; pass threshold 1e-4.
GradCheckResult gradcheck_encoder(int instances, std::uint64_t seed);
GradCheckResult gradcheck_encoder_input(int instances, std::uint64_t seed);
GradCheckResult gradcheck_loss_ce(int instances, std::uint64_t seed);
GradCheckResult gradcheck_loss_ssc(int instances, std::uint64_t seed);
GradCheckResult gradcheck_loss_moti(int instances, std::uint64_t seed);

std::vector<GradCheckResult> run_all_gradchecks(int instances, std::uint64_t seed);

}  // namespace motic
