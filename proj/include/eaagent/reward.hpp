#pragma once

#include <optional>

#include "eaagent/executor.hpp"

namespace eaagent {

struct RewardConfig {
    double alpha = 0.5;  // penalty for a redundant (keep-correct) reflection, in (0, 1]
    double beta = 0.2;   // efficiency decay per step, > 0
    double c = 1.0;      // weight of the reflection term

    void validate() const;
};

struct RewardBreakdown {
    double mu = 0.0;            // 1 iff the final prediction equals gold
    std::optional<double> ref;  // present iff a Reflector step ran
    double e = 0.0;             // exp(-beta * steps)
    double total = 0.0;         // mu + c * ref + e
};

// Scores one executed outcome against its gold target. The reflection term
// compares initial vs refined: a fixed correction earns +1, undoing a correct
// initial costs -1, confirming a correct initial costs -alpha, and the
// both-wrong case (outside the original case split) scores 0.
RewardBreakdown compute_reward(const AlignmentOutcome& outcome, const Iri& gold,
                               const RewardConfig& config = {});

}  // namespace eaagent
