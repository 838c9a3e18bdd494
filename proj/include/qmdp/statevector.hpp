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

// Dense state-vector kernel. Basis index bit q holds qubit q (qubit 0 is the
// least-significant bit); this ordering is used throughout the library.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qmdp/errors.hpp"

namespace qmdp {

using Qubit = std::size_t;

enum class GateType { Hadamard, PauliX, PauliZ, Ry };

struct Control {
    Qubit qubit;
    bool on_one = true;  // false: the gate fires when this qubit is |0>

    friend bool operator==(const Control&, const Control&) = default;
};

// A single-target gate with an optional control pattern.
struct Gate {
    GateType type = GateType::PauliX;
    double angle = 0.0;  // radians, Ry only
    std::vector<Control> controls;

    static Gate h() { return {GateType::Hadamard, 0.0, {}}; }
    static Gate x() { return {GateType::PauliX, 0.0, {}}; }
    static Gate z() { return {GateType::PauliZ, 0.0, {}}; }
    static Gate ry(double theta) { return {GateType::Ry, theta, {}}; }

    Gate with_controls(std::vector<Control> c) const {
        Gate g = *this;
        g.controls = std::move(c);
        return g;
    }

    Gate inverse() const {
        Gate g = *this;
        if (g.type == GateType::Ry) g.angle = -g.angle;
        return g;
    }

    friend bool operator==(const Gate&, const Gate&) = default;
};

inline std::string gate_name(GateType t) {
    switch (t) {
        case GateType::Hadamard: return "H";
        case GateType::PauliX: return "X";
        case GateType::PauliZ: return "Z";
        case GateType::Ry: return "RY";
    }
    return "?";
}

struct MeasurementOutcome {
    int bit = 0;
    double probability = 0.0;  // pre-collapse probability of `bit`
};

template <typename Real>
class BasicStateVector {
public:
    using Amplitude = std::complex<Real>;

    // 2^28 amplitudes is the configured memory ceiling.
    static constexpr std::size_t kMaxQubits = 28;
    static constexpr double kDegenerateEps = 1e-12;

    explicit BasicStateVector(std::size_t num_qubits) : num_qubits_(num_qubits) {
        if (num_qubits == 0) throw ValidationError("state vector needs at least one qubit");
        if (num_qubits > kMaxQubits) {
            throw CapacityError("width exceeds ceiling: " + std::to_string(num_qubits) +
                                " qubits requested, at most " + std::to_string(kMaxQubits) +
                                " supported");
        }
        amps_.assign(std::size_t{1} << num_qubits, Amplitude{0});
        amps_[0] = Amplitude{1};
    }

    static BasicStateVector basis(std::size_t num_qubits, std::uint64_t index) {
        BasicStateVector s(num_qubits);
        if (index >= s.size()) throw ValidationError("basis index out of range");
        s.amps_[0] = Amplitude{0};
        s.amps_[index] = Amplitude{1};
        return s;
    }

    std::size_t num_qubits() const noexcept { return num_qubits_; }
    std::size_t size() const noexcept { return amps_.size(); }

    std::span<const Amplitude> amplitudes() const noexcept { return amps_; }
    std::span<Amplitude> amplitudes() noexcept { return amps_; }
    const Amplitude& operator[](std::size_t i) const { return amps_[i]; }
    Amplitude& operator[](std::size_t i) { return amps_[i]; }

    double norm() const {
        double acc = 0.0;
        for (const auto& a : amps_) acc += std::norm(a);
        return std::sqrt(acc);
    }

    void apply(const Gate& gate, Qubit target) {
        check_gate(gate, target);
        const std::uint64_t tbit = std::uint64_t{1} << target;
        std::uint64_t cmask = 0;
        std::uint64_t cval = 0;
        for (const auto& c : gate.controls) {
            cmask |= std::uint64_t{1} << c.qubit;
            if (c.on_one) cval |= std::uint64_t{1} << c.qubit;
        }
        switch (gate.type) {
            case GateType::PauliX:
                for_each_pair(tbit, cmask, cval, [&](std::uint64_t i0, std::uint64_t i1) {
                    std::swap(amps_[i0], amps_[i1]);
                });
                break;
            case GateType::PauliZ:
                for_each_pair(tbit, cmask, cval,
                              [&](std::uint64_t, std::uint64_t i1) { amps_[i1] = -amps_[i1]; });
                break;
            case GateType::Hadamard: {
                const Real r = static_cast<Real>(std::numbers::sqrt2 / 2.0);
                for_each_pair(tbit, cmask, cval, [&](std::uint64_t i0, std::uint64_t i1) {
                    const Amplitude a = amps_[i0];
                    const Amplitude b = amps_[i1];
                    amps_[i0] = r * (a + b);
                    amps_[i1] = r * (a - b);
                });
                break;
            }
            case GateType::Ry: {
                const Real c = static_cast<Real>(std::cos(gate.angle / 2.0));
                const Real s = static_cast<Real>(std::sin(gate.angle / 2.0));
                for_each_pair(tbit, cmask, cval, [&](std::uint64_t i0, std::uint64_t i1) {
                    const Amplitude a = amps_[i0];
                    const Amplitude b = amps_[i1];
                    amps_[i0] = c * a - s * b;
                    amps_[i1] = s * a + c * b;
                });
                break;
            }
        }
    }

    double probability_of_one(Qubit qubit) const {
        check_qubit(qubit);
        auto [p0, p1] = branch_probabilities(qubit);
        return p1 / (p0 + p1);
    }

    // Projective measurement. Outcome 0 is selected when draw < P(0).
    MeasurementOutcome measure(Qubit qubit, double draw) {
        check_qubit(qubit);
        if (!(draw >= 0.0 && draw < 1.0)) throw ValidationError("random draw must lie in [0, 1)");
        auto [p0, p1] = branch_probabilities(qubit);
        if (p0 < kDegenerateEps && p1 < kDegenerateEps) {
            throw DegenerateStateError("both outcomes of qubit " + std::to_string(qubit) +
                                       " have vanishing probability");
        }
        const double total = p0 + p1;
        p0 /= total;
        p1 /= total;
        int bit = draw < p0 ? 0 : 1;
        if (bit == 0 && p0 < kDegenerateEps) bit = 1;
        if (bit == 1 && p1 < kDegenerateEps) bit = 0;
        const double p = bit == 0 ? p0 : p1;
        project(qubit, bit, p * total);
        return {bit, p};
    }

    // Collapse onto `bit` without sampling; `probability` is the branch weight
    // used for renormalization.
    void project(Qubit qubit, int bit, double probability) {
        check_qubit(qubit);
        const std::uint64_t tbit = std::uint64_t{1} << qubit;
        const Real scale = static_cast<Real>(1.0 / std::sqrt(probability));
        for (std::uint64_t i = 0; i < amps_.size(); ++i) {
            const bool one = (i & tbit) != 0;
            if (one == (bit == 1)) {
                amps_[i] *= scale;
            } else {
                amps_[i] = Amplitude{0};
            }
        }
    }

    void reset(Qubit qubit, double draw) {
        if (measure(qubit, draw).bit == 1) apply(Gate::x(), qubit);
    }

    // Unnormalized (P(0), P(1)) for one qubit.
    std::pair<double, double> branch_probabilities(Qubit qubit) const {
        const std::uint64_t tbit = std::uint64_t{1} << qubit;
        double p0 = 0.0;
        double p1 = 0.0;
        for (std::uint64_t i = 0; i < amps_.size(); ++i) {
            if (i & tbit) {
                p1 += std::norm(amps_[i]);
            } else {
                p0 += std::norm(amps_[i]);
            }
        }
        return {p0, p1};
    }

private:
    std::size_t num_qubits_;
    std::vector<Amplitude> amps_;

    void check_qubit(Qubit q) const {
        if (q >= num_qubits_) {
            throw ValidationError("qubit index " + std::to_string(q) + " out of range for " +
                                  std::to_string(num_qubits_) + " qubits");
        }
    }

    void check_gate(const Gate& gate, Qubit target) const {
        check_qubit(target);
        std::uint64_t seen = std::uint64_t{1} << target;
        for (const auto& c : gate.controls) {
            check_qubit(c.qubit);
            const std::uint64_t bit = std::uint64_t{1} << c.qubit;
            if (seen & bit) {
                throw ValidationError("control qubit " + std::to_string(c.qubit) +
                                      " overlaps another control or the target");
            }
            seen |= bit;
        }
    }

    // Visits every index pair (i0, i1 = i0 | tbit) whose control bits match
    // `cval`, enumerating only the free bits. Unmatched amplitudes are never
    // touched.
    template <typename Fn>
    void for_each_pair(std::uint64_t tbit, std::uint64_t cmask, std::uint64_t cval, Fn&& fn) {
        const std::uint64_t free = (amps_.size() - 1) & ~(tbit | cmask);
        std::uint64_t sub = 0;
        while (true) {
            const std::uint64_t i0 = sub | cval;
            fn(i0, i0 | tbit);
            if (sub == free) break;
            sub = (sub - free) & free;
        }
    }
};

using StateVector = BasicStateVector<double>;
using StateVectorF = BasicStateVector<float>;

inline StateVector init_zero(std::size_t num_qubits) { return StateVector(num_qubits); }

inline void apply_gate(StateVector& state, const Gate& gate, Qubit target) {
    state.apply(gate, target);
}

inline MeasurementOutcome measure_qubit(StateVector& state, Qubit qubit, double draw) {
    return state.measure(qubit, draw);
}

inline void reset_qubit(StateVector& state, Qubit qubit, double draw) { state.reset(qubit, draw); }

// Probability table over the listed qubits. qubits[0] is the most-significant
// bit of the pattern index, so qubits={1,0} on |10> puts all weight on 0b10.
template <typename Real>
std::vector<double> marginal_probabilities(const BasicStateVector<Real>& state,
                                           std::span<const Qubit> qubits) {
    const std::size_t k = qubits.size();
    std::uint64_t seen = 0;
    for (Qubit q : qubits) {
        if (q >= state.num_qubits()) {
            throw ValidationError("qubit index " + std::to_string(q) + " out of range");
        }
        if (seen & (std::uint64_t{1} << q)) throw ValidationError("marginal qubits must be distinct");
        seen |= std::uint64_t{1} << q;
    }
    std::vector<double> table(std::size_t{1} << k, 0.0);
    const auto amps = state.amplitudes();
    for (std::uint64_t i = 0; i < amps.size(); ++i) {
        const double p = std::norm(amps[i]);
        if (p == 0.0) continue;
        std::uint64_t pattern = 0;
        for (std::size_t j = 0; j < k; ++j) {
            pattern = (pattern << 1) | ((i >> qubits[j]) & 1u);
        }
        table[pattern] += p;
    }
    return table;
}

template <typename Real>
std::vector<double> marginal_probabilities(const BasicStateVector<Real>& state,
                                           std::initializer_list<Qubit> qubits) {
    const std::vector<Qubit> q(qubits);
    return marginal_probabilities(state, std::span<const Qubit>(q));
}

template <typename Real>
std::complex<double> inner_product(const BasicStateVector<Real>& a, const BasicStateVector<Real>& b) {
    if (a.size() != b.size()) throw ValidationError("inner product of states with different widths");
    std::complex<double> acc{0.0, 0.0};
    const auto x = a.amplitudes();
    const auto y = b.amplitudes();
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += std::conj(std::complex<double>(x[i])) * std::complex<double>(y[i]);
    }
    return acc;
}

}  // namespace qmdp
