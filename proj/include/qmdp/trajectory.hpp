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
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qmdp/distribution.hpp"
#include "qmdp/errors.hpp"
#include "qmdp/mdp.hpp"

namespace qmdp {

// Field layout of a classical trajectory record. Step t occupies the group
// starting at bit t * group_bits(); within a group, from least significant:
// state, action, next state, reward. The return field sits above the last
// group, so printed strings read [return][step T-1]...[step 0].
struct RecordFormat {
    std::size_t state_bits = 2;
    std::size_t action_bits = 1;
    std::size_t reward_bits = 2;
    std::size_t return_bits = 4;
    std::size_t steps = 3;

    static RecordFormat for_mdp(const MdpSpec& mdp, std::size_t steps) {
        const auto max_return = steps * static_cast<std::size_t>(std::max(mdp.max_reward(), 0));
        return {mdp.state_bits(), mdp.action_bits(), mdp.reward_bits(),
                std::max<std::size_t>(1, bits_for(max_return + 1)), steps};
    }

    std::size_t group_bits() const noexcept { return 2 * state_bits + action_bits + reward_bits; }
    std::size_t width() const noexcept { return return_bits + steps * group_bits(); }

    std::size_t group_offset(std::size_t t) const noexcept { return t * group_bits(); }
    std::size_t state_offset(std::size_t t) const noexcept { return group_offset(t); }
    std::size_t action_offset(std::size_t t) const noexcept { return group_offset(t) + state_bits; }
    std::size_t next_offset(std::size_t t) const noexcept { return group_offset(t) + state_bits + action_bits; }
    std::size_t reward_offset(std::size_t t) const noexcept { return group_offset(t) + 2 * state_bits + action_bits; }
    std::size_t return_offset() const noexcept { return steps * group_bits(); }

    friend bool operator==(const RecordFormat&, const RecordFormat&) = default;
};

struct Step {
    std::size_t state = 0;
    std::size_t action = 0;
    std::size_t next_state = 0;
    int reward = 0;
    friend bool operator==(const Step&, const Step&) = default;
};

struct TrajectoryRecord {
    std::vector<Step> steps;
    int return_value = 0;
    double probability = 0.0;
    std::optional<std::uint64_t> count;
};

struct Transition {
    std::size_t state = 0;
    std::size_t action = 0;
    std::size_t next_state = 0;
    friend auto operator<=>(const Transition&, const Transition&) = default;
};

namespace detail {

inline std::uint64_t field(std::uint64_t bits, std::size_t offset, std::size_t width) {
    if (width == 0) return 0;
    return (bits >> offset) & ((std::uint64_t{1} << width) - 1);
}

inline std::uint64_t place(std::uint64_t value, std::size_t offset, std::size_t width) {
    if (width == 0) return 0;
    return (value & ((std::uint64_t{1} << width) - 1)) << offset;
}

}  // namespace detail

inline std::uint64_t encode_trajectory(const TrajectoryRecord& rec, const RecordFormat& fmt) {
    if (rec.steps.size() != fmt.steps) throw ValidationError("trajectory length does not match record format");
    std::uint64_t bits = detail::place(static_cast<std::uint64_t>(rec.return_value), fmt.return_offset(), fmt.return_bits);
    for (std::size_t t = 0; t < fmt.steps; ++t) {
        const auto& st = rec.steps[t];
        bits |= detail::place(st.state, fmt.state_offset(t), fmt.state_bits);
        bits |= detail::place(st.action, fmt.action_offset(t), fmt.action_bits);
        bits |= detail::place(st.next_state, fmt.next_offset(t), fmt.state_bits);
        bits |= detail::place(static_cast<std::uint64_t>(st.reward), fmt.reward_offset(t), fmt.reward_bits);
    }
    return bits;
}

// Reads the raw fields; no invariant is checked here.
inline TrajectoryRecord decode_trajectory(std::uint64_t bits, const RecordFormat& fmt) {
    TrajectoryRecord rec;
    rec.return_value = static_cast<int>(detail::field(bits, fmt.return_offset(), fmt.return_bits));
    for (std::size_t t = 0; t < fmt.steps; ++t) {
        rec.steps.push_back({detail::field(bits, fmt.state_offset(t), fmt.state_bits),
                             detail::field(bits, fmt.action_offset(t), fmt.action_bits),
                             detail::field(bits, fmt.next_offset(t), fmt.state_bits),
                             static_cast<int>(detail::field(bits, fmt.reward_offset(t), fmt.reward_bits))});
    }
    return rec;
}

inline std::string format_step(const Step& st) {
    return "s" + std::to_string(st.state) + "/a" + std::to_string(st.action) + "/s" + std::to_string(st.next_state) +
           "/r" + std::to_string(st.reward);
}

inline std::vector<double> uniform_start(const MdpSpec& mdp) {
    return std::vector<double>(mdp.num_states(), 1.0 / static_cast<double>(mdp.num_states()));
}

inline std::vector<double> point_start(const MdpSpec& mdp, std::size_t state) {
    if (state >= mdp.num_states()) throw ValidationError("start state out of range");
    std::vector<double> v(mdp.num_states(), 0.0);
    v[state] = 1.0;
    return v;
}

// Brute-force enumeration of every trajectory with nonzero probability under
// a uniform behaviour policy; the classical reference for all circuit output.
inline std::vector<TrajectoryRecord> classical_enumerate(const MdpSpec& mdp, std::size_t steps,
                                                         const std::vector<double>& start) {
    if (steps == 0) throw ValidationError("number of steps must be >= 1");
    if (start.size() != mdp.num_states()) throw ValidationError("start distribution has wrong length");
    double total = 0.0;
    for (double p : start) {
        if (p < 0.0) throw ValidationError("start distribution has a negative entry");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("start distribution must sum to 1");

    const double policy = 1.0 / static_cast<double>(mdp.num_actions());
    std::vector<TrajectoryRecord> out;
    TrajectoryRecord cur;
    std::function<void(std::size_t, double)> walk = [&](std::size_t s, double p) {
        if (cur.steps.size() == steps) {
            TrajectoryRecord rec = cur;
            rec.probability = p;
            out.push_back(std::move(rec));
            return;
        }
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            for (std::size_t n = 0; n < mdp.num_states(); ++n) {
                const double pt = mdp.probability(s, a, n);
                if (pt <= 0.0) continue;
                cur.steps.push_back({s, a, n, mdp.reward(n)});
                cur.return_value += mdp.reward(n);
                walk(n, p * policy * pt);
                cur.return_value -= mdp.reward(n);
                cur.steps.pop_back();
            }
        }
    };
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        if (start[s] > 0.0) walk(s, start[s]);
    }
    return out;
}

inline OutcomeDistribution to_distribution(const std::vector<TrajectoryRecord>& records, const RecordFormat& fmt) {
    OutcomeDistribution d{fmt.width(), {}, std::nullopt};
    for (const auto& r : records) d.values[encode_trajectory(r, fmt)] += r.probability;
    return d;
}

// ---------------------------------------------------------------------------
// Published trajectory corpus

struct CorpusEntry {
    std::string id;
    std::string bits;
};

struct Corpus {
    std::vector<CorpusEntry> entries;

    std::optional<std::string> id_of(std::string_view bits) const {
        for (const auto& e : entries) {
            if (e.bits == bits) return e.id;
        }
        return std::nullopt;
    }
};

// `id,bits` CSV with a one-line header; bits most-significant first.
inline Corpus parse_corpus_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    Corpus corpus;
    if (!std::getline(in, line)) throw ValidationError("empty corpus");
    std::set<std::string> ids;
    std::size_t lineno = 1;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ValidationError("line " + std::to_string(lineno) + ": malformed corpus line '" + line + "'");
        }
        CorpusEntry e{line.substr(0, comma), line.substr(comma + 1)};
        if (e.id.empty()) throw ValidationError("line " + std::to_string(lineno) + ": missing id");
        if (e.bits.empty() || e.bits.find_first_not_of("01") != std::string::npos) {
            throw ValidationError(e.id + ": malformed bit string '" + e.bits + "'");
        }
        if (width == 0) width = e.bits.size();
        if (e.bits.size() != width) {
            throw ValidationError(e.id + ": malformed bit string, length " + std::to_string(e.bits.size()) +
                                  " differs from " + std::to_string(width));
        }
        if (!ids.insert(e.id).second) throw ValidationError(e.id + ": duplicate trajectory id");
        corpus.entries.push_back(std::move(e));
    }
    if (corpus.entries.empty()) throw ValidationError("empty corpus");
    return corpus;
}

inline std::string corpus_to_csv(const Corpus& corpus) {
    std::string out = "id,bits\n";
    for (const auto& e : corpus.entries) out += e.id + ',' + e.bits + '\n';
    return out;
}

struct Violation {
    std::string id;
    std::optional<std::size_t> step;
    std::string kind;  // "chaining" | "reward" | "return"
    std::string detail;
};

struct SupportReport {
    std::set<Transition> support;
    std::vector<std::set<Transition>> support_by_step;
    std::vector<Violation> violations;
    std::size_t entries = 0;

    bool consistent() const noexcept { return violations.empty(); }
};

// Decodes every corpus string and collects its transitions together with all
// violations of chaining, reward == next-state and return == sum(rewards).
inline SupportReport analyze_corpus(const Corpus& corpus, const RecordFormat& fmt) {
    SupportReport rep;
    rep.support_by_step.resize(fmt.steps);
    const auto modulus = std::uint64_t{1} << fmt.return_bits;
    for (const auto& e : corpus.entries) {
        if (e.bits.size() != fmt.width()) {
            throw ValidationError(e.id + ": malformed bit string, expected " + std::to_string(fmt.width()) +
                                  " bits, got " + std::to_string(e.bits.size()));
        }
        const auto rec = decode_trajectory(parse_bitstring(e.bits), fmt);
        std::uint64_t sum = 0;
        for (std::size_t t = 0; t < fmt.steps; ++t) {
            const auto& st = rec.steps[t];
            const Transition tr{st.state, st.action, st.next_state};
            rep.support.insert(tr);
            rep.support_by_step[t].insert(tr);
            if (t > 0 && st.state != rec.steps[t - 1].next_state) {
                rep.violations.push_back({e.id, t, "chaining",
                                          "state s" + std::to_string(st.state) + " does not follow next state s" +
                                              std::to_string(rec.steps[t - 1].next_state)});
            }
            if (static_cast<std::size_t>(st.reward) != st.next_state) {
                rep.violations.push_back({e.id, t, "reward",
                                          "reward " + std::to_string(st.reward) + " differs from next state s" +
                                              std::to_string(st.next_state)});
            }
            sum += static_cast<std::uint64_t>(st.reward);
        }
        if (static_cast<std::uint64_t>(rec.return_value) != sum % modulus) {
            rep.violations.push_back({e.id, std::nullopt, "return",
                                      "return prefix " + std::to_string(rec.return_value) + " differs from reward sum " +
                                          std::to_string(sum)});
        }
        ++rep.entries;
    }
    return rep;
}

// As analyze_corpus, but the first violation is raised as an error.
inline SupportReport extract_support_from_corpus(const Corpus& corpus, const RecordFormat& fmt) {
    auto rep = analyze_corpus(corpus, fmt);
    if (!rep.consistent()) {
        const auto& v = rep.violations.front();
        throw ValidationError("consistency violation in " + v.id +
                              (v.step ? " at step " + std::to_string(*v.step) : std::string()) + ": " + v.detail);
    }
    return rep;
}

// An MDP whose transitions are uniform over a given support.
inline MdpSpec mdp_from_support(std::size_t num_states, std::size_t num_actions, const std::set<Transition>& support) {
    MdpSpec m(num_states, num_actions);
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> rows;
    for (const auto& t : support) rows[{t.state, t.action}].push_back(t.next_state);
    for (const auto& [key, nexts] : rows) {
        for (auto n : nexts) m.set_probability(key.first, key.second, n, 1.0 / static_cast<double>(nexts.size()));
    }
    m.validate();
    return m;
}

}  // namespace qmdp
