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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "qmdp/distribution.hpp"
#include "qmdp/errors.hpp"
#include "qmdp/random.hpp"
#include "qmdp/statevector.hpp"

namespace qmdp {

struct GateOp {
    Gate gate;
    Qubit target = 0;
    friend bool operator==(const GateOp&, const GateOp&) = default;
};

struct MeasureOp {
    Qubit qubit = 0;
    std::size_t cbit = 0;
    friend bool operator==(const MeasureOp&, const MeasureOp&) = default;
};

struct ResetOp {
    Qubit qubit = 0;
    friend bool operator==(const ResetOp&, const ResetOp&) = default;
};

struct BarrierOp {
    std::string label;
    friend bool operator==(const BarrierOp&, const BarrierOp&) = default;
};

using Instruction = std::variant<GateOp, MeasureOp, ResetOp, BarrierOp>;
using InstructionList = std::vector<Instruction>;

inline Instruction gate_op(Gate g, Qubit target) { return GateOp{std::move(g), target}; }

class CircuitProgram {
public:
    static constexpr std::size_t kMaxClassicalBits = 64;

    CircuitProgram(std::size_t num_qubits, std::size_t num_classical_bits,
                   InstructionList instructions = {})
        : num_qubits_(num_qubits),
          num_cbits_(num_classical_bits),
          instructions_(std::move(instructions)) {
        validate();
    }

    std::size_t num_qubits() const noexcept { return num_qubits_; }
    std::size_t num_classical_bits() const noexcept { return num_cbits_; }
    const InstructionList& instructions() const noexcept { return instructions_; }

    std::size_t measure_count() const {
        return static_cast<std::size_t>(std::count_if(instructions_.begin(), instructions_.end(), [](const auto& i) {
            return std::holds_alternative<MeasureOp>(i);
        }));
    }

private:
    std::size_t num_qubits_;
    std::size_t num_cbits_;
    InstructionList instructions_;

    void check_qubit(Qubit q) const {
        if (q >= num_qubits_) {
            throw ValidationError("invalid program: qubit " + std::to_string(q) + " >= " +
                                  std::to_string(num_qubits_));
        }
    }

    void validate() const {
        if (num_cbits_ > kMaxClassicalBits) {
            throw CapacityError("classical width " + std::to_string(num_cbits_) + " exceeds 64 bits");
        }
        std::vector<bool> written(num_cbits_, false);
        for (const auto& inst : instructions_) {
            if (const auto* g = std::get_if<GateOp>(&inst)) {
                check_qubit(g->target);
                std::vector<Qubit> used{g->target};
                for (const auto& c : g->gate.controls) {
                    check_qubit(c.qubit);
                    if (std::find(used.begin(), used.end(), c.qubit) != used.end()) {
                        throw ValidationError("invalid program: control " + std::to_string(c.qubit) +
                                              " overlaps another control or the target");
                    }
                    used.push_back(c.qubit);
                }
            } else if (const auto* m = std::get_if<MeasureOp>(&inst)) {
                check_qubit(m->qubit);
                if (m->cbit >= num_cbits_) {
                    throw ValidationError("invalid program: classical bit " + std::to_string(m->cbit) +
                                          " >= " + std::to_string(num_cbits_));
                }
                if (written[m->cbit]) {
                    throw ValidationError("invalid program: classical bit " + std::to_string(m->cbit) +
                                          " written by more than one measurement");
                }
                written[m->cbit] = true;
            } else if (const auto* r = std::get_if<ResetOp>(&inst)) {
                check_qubit(r->qubit);
            }
        }
    }
};

struct ShotRecord {
    std::size_t num_bits = 0;
    std::uint64_t bits = 0;  // unwritten bits stay 0

    int bit(std::size_t c) const { return static_cast<int>((bits >> c) & 1u); }
    std::string to_string() const { return to_bitstring(bits, num_bits); }
    friend bool operator==(const ShotRecord&, const ShotRecord&) = default;
};

inline ShotRecord run_shot(const CircuitProgram& program, std::uint64_t seed, std::uint64_t shot_index) {
    StateVector state(program.num_qubits());
    ShotRecord record{program.num_classical_bits(), 0};
    std::uint64_t ordinal = 0;
    for (const auto& inst : program.instructions()) {
        if (const auto* g = std::get_if<GateOp>(&inst)) {
            state.apply(g->gate, g->target);
        } else if (const auto* m = std::get_if<MeasureOp>(&inst)) {
            const auto outcome = state.measure(m->qubit, counter_uniform(seed, shot_index, ordinal++));
            if (outcome.bit) record.bits |= std::uint64_t{1} << m->cbit;
        } else if (const auto* r = std::get_if<ResetOp>(&inst)) {
            state.reset(r->qubit, counter_uniform(seed, shot_index, ordinal++));
        }
    }
    return record;
}

inline OutcomeDistribution sample(const CircuitProgram& program, std::uint64_t shots, std::uint64_t seed) {
    if (shots == 0) throw ValidationError("shots must be >= 1");
    OutcomeDistribution dist{program.num_classical_bits(), {}, shots};
    for (std::uint64_t s = 0; s < shots; ++s) dist.values[run_shot(program, seed, s).bits] += 1.0;
    return dist;
}

namespace detail {

inline bool touches(const Instruction& inst, Qubit q) {
    if (const auto* g = std::get_if<GateOp>(&inst)) {
        if (g->target == q) return true;
        return std::any_of(g->gate.controls.begin(), g->gate.controls.end(),
                           [q](const Control& c) { return c.qubit == q; });
    }
    if (const auto* m = std::get_if<MeasureOp>(&inst)) return m->qubit == q;
    if (const auto* r = std::get_if<ResetOp>(&inst)) return r->qubit == q;
    return false;
}

class ExactEvaluator {
public:
    static constexpr double kPrune = 1e-12;

    explicit ExactEvaluator(const CircuitProgram& program) : program_(program) {
        const auto& insts = program.instructions();
        terminal_.assign(insts.size(), false);
        for (std::size_t i = 0; i < insts.size(); ++i) {
            const auto* m = std::get_if<MeasureOp>(&insts[i]);
            if (!m) continue;
            bool later = false;
            for (std::size_t j = i + 1; j < insts.size() && !later; ++j) later = touches(insts[j], m->qubit);
            terminal_[i] = !later;
        }
    }

    OutcomeDistribution run() {
        result_ = OutcomeDistribution{program_.num_classical_bits(), {}, std::nullopt};
        explore(0, StateVector(program_.num_qubits()), 1.0, 0, {});
        return std::move(result_);
    }

private:
    using Deferred = std::vector<std::pair<Qubit, std::size_t>>;

    const CircuitProgram& program_;
    std::vector<bool> terminal_;
    OutcomeDistribution result_;

    void explore(std::size_t pc, StateVector state, double weight, std::uint64_t bits, Deferred deferred) {
        const auto& insts = program_.instructions();
        for (; pc < insts.size(); ++pc) {
            const auto& inst = insts[pc];
            if (const auto* g = std::get_if<GateOp>(&inst)) {
                state.apply(g->gate, g->target);
                continue;
            }
            const auto* m = std::get_if<MeasureOp>(&inst);
            const auto* r = std::get_if<ResetOp>(&inst);
            if (!m && !r) continue;
            if (m && terminal_[pc]) {
                deferred.emplace_back(m->qubit, m->cbit);
                continue;
            }
            const Qubit q = m ? m->qubit : r->qubit;
            auto [p0, p1] = state.branch_probabilities(q);
            const double total = p0 + p1;
            if (p0 < StateVector::kDegenerateEps && p1 < StateVector::kDegenerateEps) {
                throw DegenerateStateError("degenerate branch at instruction " + std::to_string(pc));
            }
            p0 /= total;
            p1 /= total;
            const bool keep0 = p0 >= kPrune;
            const bool keep1 = p1 >= kPrune;
            const std::uint64_t bit1 = m ? (std::uint64_t{1} << m->cbit) : 0;
            if (keep0 && keep1) {
                StateVector other = state;
                other.project(q, 1, p1 * total);
                if (r) other.apply(Gate::x(), q);
                explore(pc + 1, std::move(other), weight * p1, bits | bit1, deferred);
            }
            if (keep0) {
                state.project(q, 0, p0 * total);
                weight *= p0;
            } else {
                state.project(q, 1, p1 * total);
                if (r) state.apply(Gate::x(), q);
                weight *= p1;
                bits |= bit1;
            }
        }
        finish(state, weight, bits, deferred);
    }

    void finish(const StateVector& state, double weight, std::uint64_t bits, const Deferred& deferred) {
        if (deferred.empty()) {
            result_.values[bits] += weight;
            return;
        }
        std::unordered_map<std::uint64_t, double> local;
        const auto amps = state.amplitudes();
        for (std::uint64_t i = 0; i < amps.size(); ++i) {
            const double p = std::norm(amps[i]);
            if (p == 0.0) continue;
            std::uint64_t rec = 0;
            for (const auto& [q, c] : deferred) rec |= ((i >> q) & 1u) << c;
            local[rec] += p;
        }
        for (const auto& [rec, p] : local) {
            if (p >= kPrune) result_.values[bits | rec] += weight * p;
        }
    }
};

}  // namespace detail

// Exact outcome distribution of a dynamic circuit. Each mid-circuit Measure
// or Reset splits the computation into its surviving outcomes (branches below
// 1e-12 are pruned); measurements never followed by another operation on
// their qubit are read from the final state without branching.
inline OutcomeDistribution exact_distribution(const CircuitProgram& program) {
    constexpr std::size_t kMaxMeasurements = 32;
    if (program.measure_count() > kMaxMeasurements) {
        throw CapacityError("branch explosion: " + std::to_string(program.measure_count()) +
                            " measurements exceed the limit of " + std::to_string(kMaxMeasurements));
    }
    return detail::ExactEvaluator(program).run();
}

inline InstructionList invert_segment(const InstructionList& segment) {
    InstructionList out;
    out.reserve(segment.size());
    for (auto it = segment.rbegin(); it != segment.rend(); ++it) {
        if (const auto* g = std::get_if<GateOp>(&*it)) {
            out.push_back(GateOp{g->gate.inverse(), g->target});
        } else if (std::holds_alternative<BarrierOp>(*it)) {
            out.push_back(*it);
        } else {
            throw ValidationError("non-unitary segment: cannot invert a measurement or reset");
        }
    }
    return out;
}

inline void apply_segment(StateVector& state, const InstructionList& segment) {
    for (const auto& inst : segment) {
        if (const auto* g = std::get_if<GateOp>(&inst)) {
            state.apply(g->gate, g->target);
        } else if (!std::holds_alternative<BarrierOp>(inst)) {
            throw ValidationError("non-unitary segment: measurement or reset in a gate-only context");
        }
    }
}

// Draws `shots` terminal measurements of `state` mapping qubit -> classical
// bit, one counter-based draw per shot.
inline OutcomeDistribution sample_terminal(const StateVector& state,
                                           const std::vector<std::pair<Qubit, std::size_t>>& readout,
                                           std::size_t num_bits, std::uint64_t shots, std::uint64_t seed) {
    if (shots == 0) throw ValidationError("shots must be >= 1");
    std::vector<std::uint64_t> index;
    std::vector<double> cdf;
    double acc = 0.0;
    const auto amps = state.amplitudes();
    for (std::uint64_t i = 0; i < amps.size(); ++i) {
        const double p = std::norm(amps[i]);
        if (p < 1e-15) continue;
        acc += p;
        index.push_back(i);
        cdf.push_back(acc);
    }
    OutcomeDistribution dist{num_bits, {}, shots};
    for (std::uint64_t s = 0; s < shots; ++s) {
        const double u = counter_uniform(seed, s, 0) * acc;
        auto pos = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        pos = std::min(pos, cdf.size() - 1);
        std::uint64_t rec = 0;
        for (const auto& [q, c] : readout) rec |= ((index[pos] >> q) & 1u) << c;
        dist.values[rec] += 1.0;
    }
    return dist;
}

// Line-oriented debug dump: `GATE name params target controls polarities`,
// `MEASURE q c`, `RESET q`, `BARRIER label`. Empty fields print as '-'.
inline std::string dump_program(const CircuitProgram& program) {
    std::ostringstream os;
    for (const auto& inst : program.instructions()) {
        if (const auto* g = std::get_if<GateOp>(&inst)) {
            os << "GATE " << gate_name(g->gate.type) << ' '
               << (g->gate.type == GateType::Ry ? format_value(g->gate.angle) : std::string("-")) << ' '
               << g->target << ' ';
            if (g->gate.controls.empty()) {
                os << "- -";
            } else {
                std::string qs;
                std::string ps;
                for (const auto& c : g->gate.controls) {
                    if (!qs.empty()) {
                        qs += ',';
                        ps += ',';
                    }
                    qs += std::to_string(c.qubit);
                    ps += c.on_one ? '1' : '0';
                }
                os << qs << ' ' << ps;
            }
        } else if (const auto* m = std::get_if<MeasureOp>(&inst)) {
            os << "MEASURE " << m->qubit << ' ' << m->cbit;
        } else if (const auto* r = std::get_if<ResetOp>(&inst)) {
            os << "RESET " << r->qubit;
        } else {
            const auto& b = std::get<BarrierOp>(inst);
            os << "BARRIER " << (b.label.empty() ? std::string("-") : b.label);
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace qmdp
