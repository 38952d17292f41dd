#include "eaagent/reward.hpp"

#include <cmath>

namespace eaagent {

void RewardConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("reward alpha must lie in (0, 1]");
    if (!(beta > 0.0)) throw ConfigError("reward beta must be positive");
}

RewardBreakdown compute_reward(const AlignmentOutcome& outcome, const Iri& gold,
                               const RewardConfig& config) {
    RewardBreakdown r;
    r.mu = (outcome.final_prediction == gold) ? 1.0 : 0.0;

    if (outcome.refined_prediction) {
        const bool initial_ok = outcome.initial_prediction == gold;
        const bool refined_ok = *outcome.refined_prediction == gold;
        if (!initial_ok && refined_ok)
            r.ref = 1.0;
        else if (initial_ok && refined_ok)
            r.ref = -config.alpha;
        else if (initial_ok && !refined_ok)
            r.ref = -1.0;
        else
            r.ref = 0.0;
    }

    r.e = std::exp(-config.beta * static_cast<double>(outcome.path.length()));
    r.total = r.mu + (r.ref ? config.c * *r.ref : 0.0) + r.e;
    return r;
}

}  // namespace eaagent
