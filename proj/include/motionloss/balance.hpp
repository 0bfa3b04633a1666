// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

namespace motionloss {

/// lambda(step) = 3 - 6 step / total_steps.
struct LambdaSchedule {
    double start = 3.0;
    double end = -3.0;
    long total_steps = 1;

    double at(long step) const;
};

double lambda_at(long step, long total_steps);

inline constexpr double kMinDescentRate = 1e-3;
inline constexpr double kMaxDescentRate = 1e3;

/// Two-term loss weights driven by how fast each term descends.
struct WeightState {
    std::array<double, 2> weights = {0.5, 0.5};
    std::array<std::vector<double>, 2> current;   // losses of the running window
    std::array<std::vector<double>, 2> previous;  // losses of the last completed window
    long step = 0;
    int window = 100;

    /// Appends one evaluation of both terms and advances the step counter. Returns true when the
    /// running window is full and a rebalance is due (requires a completed previous window).
    bool record(double first, double second);
};

/// Descending rate r_i = mean(current_i) / mean(previous_i), clamped to [1e-3, 1e3], then
/// w_i = r_i^lambda / sum_j r_j^lambda. The running window becomes the previous one.
WeightState update_weights(const WeightState &state, double lambda);

/// Same rule on explicit rates, without window bookkeeping.
std::array<double, 2> weights_from_rates(const std::array<double, 2> &rates, double lambda);

} // namespace motionloss
