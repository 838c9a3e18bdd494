/*
 * Copyright 2026 The qmdp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmdp/errors.hpp"

namespace qmdp {

// Number of bits needed to hold codes 0..count-1.
inline std::size_t bits_for(std::size_t count) {
    std::size_t b = 0;
    while ((std::size_t{1} << b) < count) ++b;
    return b;
}

// Classical MDP: P(s'|s,a) plus an integer reward attached to each next state.
class MdpSpec {
public:
    static constexpr double kRowTolerance = 1e-9;

    MdpSpec(std::size_t num_states, std::size_t num_actions)
        : num_states_(num_states),
          num_actions_(num_actions),
          transitions_(num_states * num_actions * num_states, 0.0),
          rewards_(num_states) {
        if (num_states == 0 || num_actions == 0) throw ValidationError("MDP needs at least one state and one action");
        for (std::size_t s = 0; s < num_states; ++s) rewards_[s] = static_cast<int>(s);
        state_bits_ = bits_for(num_states);
        action_bits_ = bits_for(num_actions);
        reward_bits_ = bits_for(static_cast<std::size_t>(max_reward()) + 1);
    }

    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t num_actions() const noexcept { return num_actions_; }
    std::size_t state_bits() const noexcept { return state_bits_; }
    std::size_t action_bits() const noexcept { return action_bits_; }
    std::size_t reward_bits() const noexcept { return reward_bits_; }

    double probability(std::size_t s, std::size_t a, std::size_t next) const {
        return transitions_[index(s, a, next)];
    }
    void set_probability(std::size_t s, std::size_t a, std::size_t next, double p) {
        transitions_[index(s, a, next)] = p;
    }

    int reward(std::size_t next) const { return rewards_.at(next); }
    void set_reward(std::size_t next, int value) { rewards_.at(next) = value; }
    int max_reward() const { return *std::max_element(rewards_.begin(), rewards_.end()); }

    bool identity_rewards() const {
        for (std::size_t s = 0; s < num_states_; ++s) {
            if (rewards_[s] != static_cast<int>(s)) return false;
        }
        return true;
    }

    void set_widths(std::optional<std::size_t> state_bits, std::optional<std::size_t> action_bits,
                    std::optional<std::size_t> reward_bits) {
        state_bits_ = state_bits.value_or(bits_for(num_states_));
        action_bits_ = action_bits.value_or(bits_for(num_actions_));
        reward_bits_ = reward_bits.value_or(bits_for(static_cast<std::size_t>(std::max(max_reward(), 0)) + 1));
    }

    // Throws on the first violated invariant.
    void validate() const {
        if (num_states_ > (std::size_t{1} << state_bits_)) {
            throw ValidationError("width overflow: " + std::to_string(num_states_) + " states do not fit in " +
                                  std::to_string(state_bits_) + " state bits");
        }
        if (num_actions_ > (std::size_t{1} << action_bits_)) {
            throw ValidationError("width overflow: " + std::to_string(num_actions_) + " actions do not fit in " +
                                  std::to_string(action_bits_) + " action bits");
        }
        for (std::size_t s = 0; s < num_states_; ++s) {
            if (rewards_[s] < 0) throw ValidationError("negative reward for s" + std::to_string(s));
            if (static_cast<std::size_t>(rewards_[s]) >= (std::size_t{1} << reward_bits_)) {
                throw ValidationError("width overflow: reward " + std::to_string(rewards_[s]) +
                                      " does not fit in " + std::to_string(reward_bits_) + " reward bits");
            }
        }
        for (std::size_t s = 0; s < num_states_; ++s) {
            for (std::size_t a = 0; a < num_actions_; ++a) {
                double sum = 0.0;
                for (std::size_t n = 0; n < num_states_; ++n) {
                    const double p = probability(s, a, n);
                    if (!(p >= 0.0 && p <= 1.0)) {
                        throw ValidationError("probability out of [0,1] for (s" + std::to_string(s) + ",a" +
                                              std::to_string(a) + ")");
                    }
                    sum += p;
                }
                if (std::abs(sum - 1.0) > kRowTolerance) {
                    throw ValidationError("row-sum violation at (s" + std::to_string(s) + ",a" + std::to_string(a) +
                                          "): probabilities sum to " + std::to_string(sum));
                }
            }
        }
    }

private:
    std::size_t num_states_;
    std::size_t num_actions_;
    std::vector<double> transitions_;
    std::vector<int> rewards_;
    std::size_t state_bits_ = 0;
    std::size_t action_bits_ = 0;
    std::size_t reward_bits_ = 0;

    std::size_t index(std::size_t s, std::size_t a, std::size_t next) const {
        if (s >= num_states_ || a >= num_actions_ || next >= num_states_) {
            throw ValidationError("transition index out of range");
        }
        return (s * num_actions_ + a) * num_states_ + next;
    }
};

namespace detail {

inline std::size_t require_index(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw ValidationError(std::string("schema error: missing key '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ValidationError(std::string("schema error: '") + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

inline std::optional<std::size_t> optional_index(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    return require_index(j, key);
}

}  // namespace detail

// JSON schema:
//   { "num_states": N, "num_actions": M,
//     "transitions": [ {"s":0, "a":0, "next":1, "p":0.6}, ... ],
//     "rewards": [ {"next":3, "value":3}, ... ],              (optional)
//     "state_bits": 2, "action_bits": 1, "reward_bits": 2 }  (optional)
inline MdpSpec parse_mdp_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("schema error: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("schema error: config must be an object");
    MdpSpec mdp(detail::require_index(doc, "num_states"), detail::require_index(doc, "num_actions"));
    if (!doc.contains("transitions") || !doc["transitions"].is_array()) {
        throw ValidationError("schema error: 'transitions' must be a list");
    }
    std::vector<bool> seen(mdp.num_states() * mdp.num_actions() * mdp.num_states(), false);
    for (const auto& rec : doc["transitions"]) {
        const auto s = detail::require_index(rec, "s");
        const auto a = detail::require_index(rec, "a");
        const auto n = detail::require_index(rec, "next");
        if (s >= mdp.num_states() || n >= mdp.num_states() || a >= mdp.num_actions()) {
            throw ValidationError("schema error: transition (s" + std::to_string(s) + ",a" + std::to_string(a) +
                                  ",s" + std::to_string(n) + ") references an unknown state or action");
        }
        if (!rec.contains("p") || !rec["p"].is_number()) throw ValidationError("schema error: transition needs numeric 'p'");
        const std::size_t key = (s * mdp.num_actions() + a) * mdp.num_states() + n;
        if (seen[key]) throw ValidationError("schema error: duplicate transition record");
        seen[key] = true;
        mdp.set_probability(s, a, n, rec["p"].get<double>());
    }
    if (doc.contains("rewards")) {
        if (!doc["rewards"].is_array()) throw ValidationError("schema error: 'rewards' must be a list");
        for (const auto& rec : doc["rewards"]) {
            const auto n = detail::require_index(rec, "next");
            if (n >= mdp.num_states()) throw ValidationError("schema error: reward for unknown state");
            mdp.set_reward(n, static_cast<int>(detail::require_index(rec, "value")));
        }
    }
    mdp.set_widths(detail::optional_index(doc, "state_bits"), detail::optional_index(doc, "action_bits"),
                   detail::optional_index(doc, "reward_bits"));
    mdp.validate();
    return mdp;
}

// The four-state, two-action environment. Rows for s0 are the published
// values; the remaining rows are uniform over the transition support observed
// in the three-step trajectory table and are NOT published magnitudes.
inline MdpSpec paper_mdp() {
    MdpSpec m(4, 2);
    struct Row { std::size_t s, a, next; double p; };
    constexpr Row rows[] = {
        {0, 0, 1, 0.6}, {0, 0, 2, 0.4}, {0, 1, 0, 0.1}, {0, 1, 1, 0.9},
        {1, 0, 0, 0.5}, {1, 0, 1, 0.5}, {1, 1, 2, 0.5}, {1, 1, 3, 0.5},
        {2, 0, 0, 0.5}, {2, 0, 2, 0.5}, {2, 1, 1, 0.5}, {2, 1, 3, 0.5},
        {3, 0, 2, 0.5}, {3, 0, 3, 0.5}, {3, 1, 3, 1.0},
    };
    for (const auto& r : rows) m.set_probability(r.s, r.a, r.next, r.p);
    m.validate();
    return m;
}

}  // namespace qmdp
