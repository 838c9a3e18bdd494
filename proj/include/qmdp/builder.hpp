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

// Compiles an MdpSpec into circuits: the single-interaction blocks, the
// dynamic program that reuses one register bank across steps, and the static
// program that unrolls one bank per step.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmdp/circuit.hpp"
#include "qmdp/errors.hpp"
#include "qmdp/mdp.hpp"
#include "qmdp/trajectory.hpp"

namespace qmdp {

// Qubit lists are least-significant bit first: element j carries bit j of
// the register's code.
struct RegisterBank {
    std::vector<Qubit> state;
    std::vector<Qubit> action;
    std::vector<Qubit> next_state;
    std::vector<Qubit> reward;

    std::size_t width() const { return state.size() + action.size() + next_state.size() + reward.size(); }
};

enum class Role { State, Action, NextState, Reward };

struct RegisterLayout {
    // One bank per step (static) or a single bank reused every step (dynamic).
    std::vector<RegisterBank> banks;
    std::vector<Qubit> return_qubits;
    std::size_t num_qubits = 0;
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    RecordFormat format;

    const RegisterBank& bank(std::size_t step) const { return banks.size() == 1 ? banks.front() : banks.at(step); }

    std::size_t interaction_qubits() const {
        std::size_t n = 0;
        for (const auto& b : banks) n += b.width();
        return n;
    }

    // Classical bits receiving register `role` of step `step`, LSB first.
    std::vector<std::size_t> cbits(std::size_t step, Role role) const {
        std::size_t offset = 0;
        std::size_t width = 0;
        switch (role) {
            case Role::State: offset = format.state_offset(step); width = format.state_bits; break;
            case Role::Action: offset = format.action_offset(step); width = format.action_bits; break;
            case Role::NextState: offset = format.next_offset(step); width = format.state_bits; break;
            case Role::Reward: offset = format.reward_offset(step); width = format.reward_bits; break;
        }
        std::vector<std::size_t> out(width);
        for (std::size_t j = 0; j < width; ++j) out[j] = offset + j;
        return out;
    }

    std::vector<std::size_t> return_cbits() const {
        std::vector<std::size_t> out(format.return_bits);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = format.return_offset() + j;
        return out;
    }

    // Qubit -> classical bit map for reading every step of an unrolled layout
    // at the end of the circuit.
    std::vector<std::pair<Qubit, std::size_t>> terminal_readout() const {
        if (banks.size() != format.steps) throw ValidationError("terminal readout needs one bank per step");
        std::vector<std::pair<Qubit, std::size_t>> out;
        auto add = [&](const std::vector<Qubit>& qs, const std::vector<std::size_t>& cs) {
            for (std::size_t j = 0; j < qs.size(); ++j) out.emplace_back(qs[j], cs[j]);
        };
        for (std::size_t t = 0; t < format.steps; ++t) {
            add(banks[t].state, cbits(t, Role::State));
            add(banks[t].action, cbits(t, Role::Action));
            add(banks[t].next_state, cbits(t, Role::NextState));
            add(banks[t].reward, cbits(t, Role::Reward));
        }
        add(return_qubits, return_cbits());
        return out;
    }
};

namespace detail {

inline RegisterBank make_bank(const RecordFormat& fmt, Qubit offset) {
    RegisterBank b;
    auto take = [&](std::vector<Qubit>& v, std::size_t n) {
        for (std::size_t j = 0; j < n; ++j) v.push_back(offset++);
    };
    take(b.state, fmt.state_bits);
    take(b.action, fmt.action_bits);
    take(b.next_state, fmt.state_bits);
    take(b.reward, fmt.reward_bits);
    return b;
}

inline RegisterLayout make_layout(const MdpSpec& mdp, std::size_t steps, std::size_t num_banks) {
    RegisterLayout layout;
    layout.format = RecordFormat::for_mdp(mdp, steps);
    layout.num_states = mdp.num_states();
    layout.num_actions = mdp.num_actions();
    Qubit next = 0;
    for (std::size_t b = 0; b < num_banks; ++b) {
        layout.banks.push_back(make_bank(layout.format, next));
        next += layout.format.group_bits();
    }
    for (std::size_t j = 0; j < layout.format.return_bits; ++j) layout.return_qubits.push_back(next++);
    layout.num_qubits = next;
    return layout;
}

inline std::vector<Control> code_controls(const std::vector<Qubit>& qubits, std::uint64_t code) {
    std::vector<Control> out;
    for (std::size_t j = 0; j < qubits.size(); ++j) out.push_back({qubits[j], ((code >> j) & 1u) != 0});
    return out;
}

inline std::vector<Control> concat(std::vector<Control> a, const std::vector<Control>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

// Binary-splitting amplitude loader: prepares sum_c sqrt(probs[c]) |c> on
// `target` (LSB first) under the extra `controls`. The high bit is rotated
// by its marginal, each lower bit by its conditional given the bits above.
inline void append_loader(InstructionList& out, const std::vector<Qubit>& target, const std::vector<double>& probs,
                          const std::vector<Control>& controls) {
    constexpr double kEps = 1e-12;
    const std::size_t nbits = target.size();
    if (nbits == 0) return;
    auto mass = [&](std::uint64_t prefix, std::size_t low_bits) {
        double m = 0.0;
        const std::uint64_t span = std::uint64_t{1} << low_bits;
        for (std::uint64_t c = prefix * span; c < (prefix + 1) * span && c < probs.size(); ++c) m += probs[c];
        return m;
    };
    // prefix holds the already-decided bits above `bit`.
    auto recurse = [&](auto&& self, std::size_t bit_plus_one, std::uint64_t prefix) -> void {
        if (bit_plus_one == 0) return;
        const std::size_t bit = bit_plus_one - 1;
        const double total = mass(prefix, bit + 1);
        if (total <= kEps) return;
        const double q = mass(prefix * 2 + 1, bit) / total;
        std::vector<Control> ctl = controls;
        for (std::size_t h = bit + 1; h < nbits; ++h) {
            ctl.push_back({target[h], ((prefix >> (h - bit - 1)) & 1u) != 0});
        }
        if (q >= 1.0 - kEps) {
            out.push_back(GateOp{Gate::x().with_controls(ctl), target[bit]});
        } else if (q > kEps) {
            out.push_back(GateOp{Gate::ry(2.0 * std::asin(std::sqrt(q))).with_controls(ctl), target[bit]});
        }
        self(self, bit, prefix * 2);
        self(self, bit, prefix * 2 + 1);
    };
    recurse(recurse, nbits, 0);
}

inline void append_uniform(InstructionList& out, const std::vector<Qubit>& qubits, std::size_t count) {
    if (count == (std::size_t{1} << qubits.size())) {
        for (Qubit q : qubits) out.push_back(GateOp{Gate::h(), q});
        return;
    }
    std::vector<double> probs(std::size_t{1} << qubits.size(), 0.0);
    for (std::size_t c = 0; c < count; ++c) probs[c] = 1.0 / static_cast<double>(count);
    append_loader(out, qubits, probs, {});
}

inline void append_measure(InstructionList& out, const std::vector<Qubit>& qubits,
                           const std::vector<std::size_t>& cbits) {
    for (std::size_t j = 0; j < qubits.size(); ++j) out.push_back(MeasureOp{qubits[j], cbits[j]});
}

inline void append_reset(InstructionList& out, const std::vector<Qubit>& qubits) {
    for (Qubit q : qubits) out.push_back(ResetOp{q});
}

}  // namespace detail

inline RegisterLayout dynamic_layout(const MdpSpec& mdp, std::size_t steps) {
    return detail::make_layout(mdp, steps, 1);
}

inline RegisterLayout static_layout(const MdpSpec& mdp, std::size_t steps) {
    return detail::make_layout(mdp, steps, steps);
}

// Uniform superposition over the valid state and action codes of step 0.
inline InstructionList build_init_block(const RegisterLayout& layout) {
    InstructionList out;
    detail::append_uniform(out, layout.bank(0).state, layout.num_states);
    detail::append_uniform(out, layout.bank(0).action, layout.num_actions);
    return out;
}

inline InstructionList build_transition_block(const MdpSpec& mdp, const RegisterLayout& layout, std::size_t step = 0) {
    const auto& bank = layout.bank(step);
    InstructionList out;
    std::vector<double> row(std::size_t{1} << bank.next_state.size(), 0.0);
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            std::fill(row.begin(), row.end(), 0.0);
            for (std::size_t n = 0; n < mdp.num_states(); ++n) row[n] = mdp.probability(s, a, n);
            const auto controls =
                detail::concat(detail::code_controls(bank.state, s), detail::code_controls(bank.action, a));
            detail::append_loader(out, bank.next_state, row, controls);
        }
    }
    return out;
}

// reward := next state, one CNOT per bit. Only valid for the identity reward map.
inline InstructionList build_reward_block(const MdpSpec& mdp, const RegisterLayout& layout, std::size_t step = 0) {
    const auto& bank = layout.bank(step);
    if (!mdp.identity_rewards() || bank.reward.size() < bank.next_state.size()) {
        throw ValidationError("non-copy reward: reward map is not expressible as next-state bit copies");
    }
    InstructionList out;
    for (std::size_t j = 0; j < bank.next_state.size(); ++j) {
        out.push_back(GateOp{Gate::x().with_controls({{bank.next_state[j], true}}), bank.reward[j]});
    }
    return out;
}

// reward := code of reward(next), via multi-controlled X keyed on the full
// next-state code.
inline InstructionList build_reward_block_general(const MdpSpec& mdp, const RegisterLayout& layout,
                                                  std::size_t step = 0) {
    const auto& bank = layout.bank(step);
    InstructionList out;
    for (std::size_t n = 0; n < mdp.num_states(); ++n) {
        const auto value = static_cast<std::uint64_t>(mdp.reward(n));
        if (bank.reward.size() < 64 && value >= (std::uint64_t{1} << bank.reward.size())) {
            throw ValidationError("width overflow: reward " + std::to_string(value) + " for s" + std::to_string(n));
        }
        const auto controls = detail::code_controls(bank.next_state, n);
        for (std::size_t j = 0; j < bank.reward.size(); ++j) {
            if ((value >> j) & 1u) out.push_back(GateOp{Gate::x().with_controls(controls), bank.reward[j]});
        }
    }
    return out;
}

inline InstructionList build_reward_for(const MdpSpec& mdp, const RegisterLayout& layout, std::size_t step) {
    const auto& bank = layout.bank(step);
    if (mdp.identity_rewards() && bank.reward.size() >= bank.next_state.size()) {
        return build_reward_block(mdp, layout, step);
    }
    return build_reward_block_general(mdp, layout, step);
}

// return += reward (mod 2^width). Each reward bit i performs a controlled
// increment of the return register starting at bit i; the increment runs
// from the top bit down so every carry condition reads pre-update bits.
inline InstructionList build_return_accumulate_block(const RegisterLayout& layout, std::size_t step) {
    const auto& reward = layout.bank(step).reward;
    const auto& ret = layout.return_qubits;
    InstructionList out;
    for (std::size_t i = 0; i < reward.size() && i < ret.size(); ++i) {
        for (std::size_t j = ret.size(); j-- > i;) {
            std::vector<Control> controls{{reward[i], true}};
            for (std::size_t c = i; c < j; ++c) controls.push_back({ret[c], true});
            out.push_back(GateOp{Gate::x().with_controls(std::move(controls)), ret[j]});
        }
    }
    return out;
}

// state(step + 1) ^= next_state(step). In the dynamic layout both refer to
// the same bank.
inline InstructionList build_state_propagation_block(const RegisterLayout& layout, std::size_t step = 0) {
    const auto& from = layout.bank(step).next_state;
    const auto& to = layout.bank(layout.banks.size() == 1 ? 0 : step + 1).state;
    InstructionList out;
    for (std::size_t j = 0; j < from.size(); ++j) {
        out.push_back(GateOp{Gate::x().with_controls({{from[j], true}}), to[j]});
    }
    return out;
}

struct BuildReport {
    std::size_t interaction_qubit_count = 0;
    std::size_t total_qubit_count = 0;
    std::map<std::string, std::size_t> gate_counts;
    std::size_t measure_count = 0;
    std::size_t reset_count = 0;

    std::string to_text() const {
        std::ostringstream os;
        os << "interaction_qubits " << interaction_qubit_count << '\n'
           << "total_qubits " << total_qubit_count << '\n';
        for (const auto& [k, v] : gate_counts) os << "gate " << k << ' ' << v << '\n';
        os << "measure " << measure_count << '\n' << "reset " << reset_count << '\n';
        return os.str();
    }

    nlohmann::json to_json() const {
        return {{"interaction_qubits", interaction_qubit_count},
                {"total_qubits", total_qubit_count},
                {"gates", gate_counts},
                {"measure", measure_count},
                {"reset", reset_count}};
    }
};

// X/CX/CCX/MCX style names: the base gate prefixed by its control arity.
inline std::string gate_kind_label(const Gate& g) {
    const std::string base = gate_name(g.type);
    switch (g.controls.size()) {
        case 0: return base;
        case 1: return "C" + base;
        case 2: return "CC" + base;
        default: return "MC" + base;
    }
}

inline BuildReport make_report(const CircuitProgram& program, const RegisterLayout& layout) {
    BuildReport r;
    r.interaction_qubit_count = layout.interaction_qubits();
    r.total_qubit_count = layout.num_qubits;
    for (const auto& inst : program.instructions()) {
        if (const auto* g = std::get_if<GateOp>(&inst)) {
            ++r.gate_counts[gate_kind_label(g->gate)];
        } else if (std::holds_alternative<MeasureOp>(inst)) {
            ++r.measure_count;
        } else if (std::holds_alternative<ResetOp>(inst)) {
            ++r.reset_count;
        }
    }
    return r;
}

struct BuiltProgram {
    CircuitProgram program;
    RegisterLayout layout;
    BuildReport report;
};

namespace detail {

inline void append(InstructionList& out, const InstructionList& block) { out.insert(out.end(), block.begin(), block.end()); }

inline void append_step_readout(InstructionList& out, const RegisterLayout& layout, std::size_t step) {
    const auto& bank = layout.bank(step);
    append_measure(out, bank.reward, layout.cbits(step, Role::Reward));
    append_measure(out, bank.next_state, layout.cbits(step, Role::NextState));
    append_measure(out, bank.action, layout.cbits(step, Role::Action));
    append_measure(out, bank.state, layout.cbits(step, Role::State));
}

inline void check_capacity(const RegisterLayout& layout) {
    if (layout.num_qubits > StateVector::kMaxQubits) {
        throw CapacityError("circuit needs " + std::to_string(layout.num_qubits) + " qubits, ceiling is " +
                            std::to_string(StateVector::kMaxQubits));
    }
    if (layout.format.width() > CircuitProgram::kMaxClassicalBits) {
        throw CapacityError("classical record of " + std::to_string(layout.format.width()) + " bits exceeds 64");
    }
}

}  // namespace detail

// One 7-qubit bank (for the four-state MDP) reused across all steps through
// mid-circuit measurement and reset; the return register persists and is
// read once after the final step.
inline BuiltProgram build_dynamic_program(const MdpSpec& mdp, std::size_t steps) {
    if (steps == 0) throw ValidationError("number of steps must be >= 1");
    mdp.validate();
    auto layout = dynamic_layout(mdp, steps);
    detail::check_capacity(layout);
    const auto& bank = layout.bank(0);
    InstructionList insts = build_init_block(layout);
    for (std::size_t t = 0; t < steps; ++t) {
        insts.push_back(BarrierOp{"step " + std::to_string(t)});
        detail::append(insts, build_transition_block(mdp, layout, t));
        detail::append(insts, build_reward_for(mdp, layout, t));
        detail::append(insts, build_return_accumulate_block(layout, t));
        detail::append_step_readout(insts, layout, t);
        if (t + 1 == steps) break;
        detail::append_reset(insts, bank.state);
        detail::append(insts, build_state_propagation_block(layout, t));
        detail::append_reset(insts, bank.next_state);
        detail::append_reset(insts, bank.action);
        detail::append_reset(insts, bank.reward);
        detail::append_uniform(insts, bank.action, layout.num_actions);
    }
    detail::append_measure(insts, layout.return_qubits, layout.return_cbits());
    CircuitProgram program(layout.num_qubits, layout.format.width(), std::move(insts));
    auto report = make_report(program, layout);
    return {std::move(program), std::move(layout), std::move(report)};
}

// One bank per step. Without measurement the program is the gate-only
// preparation used by amplitude amplification.
inline BuiltProgram build_static_program(const MdpSpec& mdp, std::size_t steps, bool with_measurement) {
    if (steps == 0) throw ValidationError("number of steps must be >= 1");
    mdp.validate();
    auto layout = static_layout(mdp, steps);
    detail::check_capacity(layout);
    InstructionList insts = build_init_block(layout);
    for (std::size_t t = 0; t < steps; ++t) {
        insts.push_back(BarrierOp{"step " + std::to_string(t)});
        if (t > 0) {
            detail::append(insts, build_state_propagation_block(layout, t - 1));
            detail::append_uniform(insts, layout.bank(t).action, layout.num_actions);
        }
        detail::append(insts, build_transition_block(mdp, layout, t));
        detail::append(insts, build_reward_for(mdp, layout, t));
        detail::append(insts, build_return_accumulate_block(layout, t));
    }
    if (with_measurement) {
        for (std::size_t t = 0; t < steps; ++t) detail::append_step_readout(insts, layout, t);
        detail::append_measure(insts, layout.return_qubits, layout.return_cbits());
    }
    CircuitProgram program(layout.num_qubits, layout.format.width(), std::move(insts));
    auto report = make_report(program, layout);
    return {std::move(program), std::move(layout), std::move(report)};
}

}  // namespace qmdp
