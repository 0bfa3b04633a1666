// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include "motionloss/balance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "motionloss/errors.hpp"

namespace motionloss {

double LambdaSchedule::at(long step) const {
    if (total_steps <= 0) throw ContractViolation("lambda schedule: total_steps must be positive");
    if (step < 0 || step > total_steps) throw ContractViolation("lambda schedule: step out of range");
    return start + (end - start) * double(step) / double(total_steps);
}

double lambda_at(long step, long total_steps) { return LambdaSchedule{3.0, -3.0, total_steps}.at(step); }

bool WeightState::record(double first, double second) {
    current[0].push_back(first);
    current[1].push_back(second);
    ++step;
    if (int(current[0].size()) < window) return false;
    if (previous[0].empty()) {
        previous = std::move(current);
        current = {};
        return false;
    }
    return true;
}

std::array<double, 2> weights_from_rates(const std::array<double, 2> &rates, double lambda) {
    std::array<double, 2> w;
    for (int i = 0; i < 2; ++i) w[i] = std::pow(std::clamp(rates[i], kMinDescentRate, kMaxDescentRate), lambda);
    const double sum = w[0] + w[1];
    w[0] /= sum;
    w[1] = 1.0 - w[0];
    return w;
}

WeightState update_weights(const WeightState &state, double lambda) {
    std::array<double, 2> rates;
    for (int i = 0; i < 2; ++i) {
        const auto &cur = state.current[i];
        const auto &prev = state.previous[i];
        if (cur.empty() || prev.empty()) throw ContractViolation("update_weights: empty loss window");
        const double mean_cur = std::accumulate(cur.begin(), cur.end(), 0.0) / double(cur.size());
        const double mean_prev = std::accumulate(prev.begin(), prev.end(), 0.0) / double(prev.size());
        if (!(mean_cur > 0 && mean_prev > 0)) throw ContractViolation("update_weights: loss averages must be positive");
        rates[i] = mean_cur / mean_prev;
    }
    WeightState next = state;
    next.weights = weights_from_rates(rates, lambda);
    next.previous = state.current;
    next.current = {};
    return next;
}

} // namespace motionloss
