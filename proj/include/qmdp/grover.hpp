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

// Amplitude amplification over the measurement-free static preparation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmdp/builder.hpp"
#include "qmdp/circuit.hpp"
#include "qmdp/errors.hpp"
#include "qmdp/mdp.hpp"
#include "qmdp/statevector.hpp"
#include "qmdp/trajectory.hpp"

namespace qmdp {

struct MarkPredicate {
    std::uint64_t target_return = 0;
    std::optional<std::size_t> start_state;  // state code at t = 0
    std::optional<std::size_t> end_state;    // next-state code at t = T-1
};

struct GroverPlan {
    MarkPredicate predicate;
    std::size_t iterations = 0;
    double marked_probability = 0.0;
    InstructionList preparation;
};

// The qubits fixed by a predicate and the value each must hold.
inline std::vector<Control> marked_pattern(const MarkPredicate& pred, const RegisterLayout& layout) {
    const auto& fmt = layout.format;
    if (pred.target_return >= (std::uint64_t{1} << fmt.return_bits)) {
        throw ValidationError("target return " + std::to_string(pred.target_return) + " does not fit in " +
                              std::to_string(fmt.return_bits) + " return bits");
    }
    auto check_state = [&](std::size_t s, const char* what) {
        if (s >= (std::size_t{1} << fmt.state_bits)) {
            throw ValidationError(std::string(what) + " state code " + std::to_string(s) + " is out of range");
        }
    };
    std::vector<Control> pattern = detail::code_controls(layout.return_qubits, pred.target_return);
    if (pred.start_state) {
        check_state(*pred.start_state, "start");
        auto c = detail::code_controls(layout.bank(0).state, *pred.start_state);
        pattern.insert(pattern.end(), c.begin(), c.end());
    }
    if (pred.end_state) {
        check_state(*pred.end_state, "end");
        auto c = detail::code_controls(layout.bank(fmt.steps - 1).next_state, *pred.end_state);
        pattern.insert(pattern.end(), c.begin(), c.end());
    }
    return pattern;
}

inline bool predicate_matches(const MarkPredicate& pred, std::uint64_t record, const RecordFormat& fmt) {
    const auto rec = decode_trajectory(record, fmt);
    if (static_cast<std::uint64_t>(rec.return_value) != pred.target_return) return false;
    if (pred.start_state && rec.steps.front().state != *pred.start_state) return false;
    if (pred.end_state && rec.steps.back().next_state != *pred.end_state) return false;
    return true;
}

namespace detail {

// Phase flip on the basis states matching `pattern`: Z on one pattern qubit
// controlled by the rest, X-conjugated when that qubit must read 0.
inline InstructionList phase_flip(std::vector<Control> pattern) {
    if (pattern.empty()) throw UnsatisfiableError("empty constraint: predicate marks no basis pattern");
    const Control target = pattern.back();
    pattern.pop_back();
    InstructionList out;
    if (!target.on_one) out.push_back(GateOp{Gate::x(), target.qubit});
    out.push_back(GateOp{Gate::z().with_controls(std::move(pattern)), target.qubit});
    if (!target.on_one) out.push_back(GateOp{Gate::x(), target.qubit});
    return out;
}

}  // namespace detail

inline InstructionList build_oracle(const MarkPredicate& pred, const RegisterLayout& layout) {
    return detail::phase_flip(marked_pattern(pred, layout));
}

// Reflection about A|0>: A^-1, then -1 on |0...0>, then A.
inline InstructionList build_diffuser(const InstructionList& preparation, const RegisterLayout& layout) {
    InstructionList out = invert_segment(preparation);
    std::vector<Control> zeros;
    for (Qubit q = 0; q < layout.num_qubits; ++q) zeros.push_back({q, false});
    const auto flip = detail::phase_flip(std::move(zeros));
    out.insert(out.end(), flip.begin(), flip.end());
    out.insert(out.end(), preparation.begin(), preparation.end());
    return out;
}

inline double grover_success(double p, std::size_t iterations) {
    const double theta = std::asin(std::sqrt(p));
    const double s = std::sin((2.0 * static_cast<double>(iterations) + 1.0) * theta);
    return s * s;
}

// round(pi / (4 asin sqrt p) - 1/2) with ties resolved toward fewer
// iterations (success is equal on both sides of a tie).
inline std::size_t optimal_iterations(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("marked probability must lie in (0, 1)");
    const double y = std::numbers::pi / (4.0 * std::asin(std::sqrt(p))) - 0.5;
    const double k = std::ceil(y - 0.5 - 1e-9);
    return k < 0.0 ? 0 : static_cast<std::size_t>(k);
}

struct SuccessPoint {
    std::size_t iteration = 0;
    double analytic = 0.0;
    double simulated = 0.0;
    double sampled = 0.0;
};

struct GroverResult {
    GroverPlan plan;
    RegisterLayout layout;
    std::vector<TrajectoryRecord> marked;  // pre-amplification probabilities
    std::vector<SuccessPoint> curve;
    OutcomeDistribution sampled;  // terminal measurement after the last iteration
};

namespace detail {

inline double pattern_mass(const StateVector& state, const std::vector<Control>& pattern) {
    std::vector<Qubit> qs;
    std::uint64_t want = 0;
    for (const auto& c : pattern) {
        qs.push_back(c.qubit);
        want = (want << 1) | (c.on_one ? 1u : 0u);
    }
    return marginal_probabilities(state, std::span<const Qubit>(qs))[want];
}

inline std::vector<TrajectoryRecord> marked_trajectories(const StateVector& state, const MarkPredicate& pred,
                                                         const RegisterLayout& layout) {
    const auto readout = layout.terminal_readout();
    std::vector<TrajectoryRecord> out;
    const auto amps = state.amplitudes();
    for (std::uint64_t i = 0; i < amps.size(); ++i) {
        const double p = std::norm(amps[i]);
        if (p < 1e-12) continue;
        std::uint64_t rec = 0;
        for (const auto& [q, c] : readout) rec |= ((i >> q) & 1u) << c;
        if (!predicate_matches(pred, rec, layout.format)) continue;
        auto tr = decode_trajectory(rec, layout.format);
        tr.probability = p;
        out.push_back(std::move(tr));
    }
    return out;
}

}  // namespace detail

// Builds the preparation, measures the marked mass analytically, applies
// `iterations` (or the optimal count) rounds of oracle + diffuser and samples
// the full record after every round.
inline GroverResult run_grover(const MdpSpec& mdp, std::size_t steps, const MarkPredicate& pred,
                               std::optional<std::size_t> iterations, std::uint64_t shots, std::uint64_t seed) {
    auto built = build_static_program(mdp, steps, false);
    GroverResult result;
    result.layout = built.layout;
    const auto& layout = result.layout;
    const auto pattern = marked_pattern(pred, layout);
    result.plan.predicate = pred;
    result.plan.preparation = built.program.instructions();

    StateVector state(layout.num_qubits);
    apply_segment(state, result.plan.preparation);
    const double p = detail::pattern_mass(state, pattern);
    if (p < 1e-12) {
        throw UnsatisfiableError("zero marked mass: no trajectory has return " + std::to_string(pred.target_return) +
                                 " under the given constraints");
    }
    result.plan.marked_probability = p;
    result.plan.iterations = iterations ? *iterations : (p >= 1.0 - 1e-12 ? 0 : optimal_iterations(p));
    result.marked = detail::marked_trajectories(state, pred, layout);

    const auto oracle = build_oracle(pred, layout);
    const auto diffuser = build_diffuser(result.plan.preparation, layout);
    const auto readout = layout.terminal_readout();
    for (std::size_t j = 0;; ++j) {
        auto dist = sample_terminal(state, readout, layout.format.width(), shots, seed + j);
        double hits = 0.0;
        for (const auto& [rec, count] : dist.values) {
            if (predicate_matches(pred, rec, layout.format)) hits += count;
        }
        result.curve.push_back(
            {j, grover_success(p, j), detail::pattern_mass(state, pattern), hits / static_cast<double>(shots)});
        if (j == result.plan.iterations) {
            result.sampled = std::move(dist);
            break;
        }
        apply_segment(state, oracle);
        apply_segment(state, diffuser);
    }
    return result;
}

struct MaxReturnResult {
    std::uint64_t best_return = 0;
    std::vector<TrajectoryRecord> witnesses;
    std::vector<GroverPlan> log;  // one entry per scanned candidate, preparation omitted
    GroverResult search;
};

// Scans return codes downward from T * max_reward and amplifies the first
// one with nonzero marked mass.
inline MaxReturnResult find_max_return(const MdpSpec& mdp, std::size_t steps, std::optional<std::size_t> start_state,
                                       std::uint64_t shots, std::uint64_t seed) {
    MaxReturnResult out;
    std::optional<std::uint64_t> hit;
    {
        auto built = build_static_program(mdp, steps, false);
        const auto& layout = built.layout;
        StateVector state(layout.num_qubits);
        apply_segment(state, built.program.instructions());
        const std::uint64_t top = std::min<std::uint64_t>(
            steps * static_cast<std::uint64_t>(std::max(mdp.max_reward(), 0)),
            (std::uint64_t{1} << layout.format.return_bits) - 1);
        for (std::uint64_t g = top + 1; g-- > 0;) {
            MarkPredicate pred{g, start_state, std::nullopt};
            const double p = detail::pattern_mass(state, marked_pattern(pred, layout));
            GroverPlan plan{pred, 0, p, {}};
            if (p >= 1e-12) plan.iterations = p >= 1.0 - 1e-12 ? 0 : optimal_iterations(p);
            out.log.push_back(std::move(plan));
            if (p >= 1e-12) {
                hit = g;
                break;
            }
        }
    }
    if (!hit) throw UnsatisfiableError("no trajectory: the start state has no outgoing support");
    out.best_return = *hit;
    out.search = run_grover(mdp, steps, MarkPredicate{*hit, start_state, std::nullopt}, std::nullopt, shots, seed);
    out.witnesses = out.search.marked;
    return out;
}

struct PolicyConflict {
    std::size_t state = 0;
    std::size_t chosen_action = 0;
    std::size_t rejected_action = 0;
};

struct PolicyReport {
    std::map<std::size_t, std::size_t> policy;
    std::vector<PolicyConflict> conflicts;
};

// State -> action read off the witnesses. When witnesses disagree, the
// action of the most probable witness wins (then the lowest record value).
inline PolicyReport extract_policy(std::vector<TrajectoryRecord> witnesses, const RecordFormat& fmt) {
    std::stable_sort(witnesses.begin(), witnesses.end(), [&](const TrajectoryRecord& a, const TrajectoryRecord& b) {
        if (a.probability != b.probability) return a.probability > b.probability;
        return encode_trajectory(a, fmt) < encode_trajectory(b, fmt);
    });
    PolicyReport rep;
    for (const auto& w : witnesses) {
        for (const auto& st : w.steps) {
            auto [it, inserted] = rep.policy.emplace(st.state, st.action);
            if (inserted || it->second == st.action) continue;
            const bool known = std::any_of(rep.conflicts.begin(), rep.conflicts.end(), [&](const PolicyConflict& c) {
                return c.state == st.state && c.rejected_action == st.action;
            });
            if (!known) rep.conflicts.push_back({st.state, it->second, st.action});
        }
    }
    return rep;
}

}  // namespace qmdp
