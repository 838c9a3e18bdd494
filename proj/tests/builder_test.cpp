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

#include <cmath>
#include <map>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "support/oracle.hpp"
#include "qmdp/builder.hpp"
#include "qmdp/circuit.hpp"

namespace qmdp {
namespace {

std::uint64_t place_bits(const std::vector<Qubit>& qs, std::uint64_t v) {
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        if ((v >> i) & 1u) idx |= std::uint64_t{1} << qs[i];
    }
    return idx;
}

std::uint64_t read_bits(const std::vector<Qubit>& qs, std::uint64_t idx) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < qs.size(); ++i) v |= ((idx >> qs[i]) & 1u) << i;
    return v;
}

// Register value -> probability, with the register's qubits read LSB first.
std::map<std::uint64_t, double> register_marginal(const StateVector& s, const std::vector<Qubit>& qs) {
    std::map<std::uint64_t, double> out;
    const auto amps = s.amplitudes();
    for (std::uint64_t i = 0; i < amps.size(); ++i) {
        const double p = std::norm(amps[i]);
        if (p > 1e-15) out[read_bits(qs, i)] += p;
    }
    return out;
}

std::uint64_t single_basis(const StateVector& s) {
    const auto amps = s.amplitudes();
    for (std::uint64_t i = 0; i < amps.size(); ++i) {
        if (std::norm(amps[i]) > 0.5) return i;
    }
    ADD_FAILURE() << "state is not a basis state";
    return 0;
}

MdpSpec deterministic_mdp() {
    MdpSpec m(4, 2);
    const std::size_t next[4][2] = {{2, 1}, {3, 0}, {3, 2}, {3, 3}};
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t a = 0; a < 2; ++a) m.set_probability(s, a, next[s][a], 1.0);
    }
    return m;
}

MdpSpec dense_mdp() {
    MdpSpec m(4, 2);
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t a = 0; a < 2; ++a) {
            double w[4];
            double total = 0.0;
            for (std::size_t n = 0; n < 4; ++n) total += w[n] = 1.0 + static_cast<double>((3 * s + 5 * a + 7 * n) % 11);
            for (std::size_t n = 0; n < 4; ++n) m.set_probability(s, a, n, w[n] / total);
        }
    }
    return m;
}

// Three states (a non-power-of-two start register), two actions.
MdpSpec three_state_mdp() {
    MdpSpec m(3, 2);
    m.set_probability(0, 0, 1, 0.7);
    m.set_probability(0, 0, 2, 0.3);
    m.set_probability(0, 1, 0, 1.0);
    m.set_probability(1, 0, 0, 0.25);
    m.set_probability(1, 0, 1, 0.25);
    m.set_probability(1, 0, 2, 0.5);
    m.set_probability(1, 1, 2, 1.0);
    m.set_probability(2, 0, 2, 1.0);
    m.set_probability(2, 1, 0, 0.6);
    m.set_probability(2, 1, 1, 0.4);
    m.validate();
    return m;
}

TEST(InitBlock, ThreeHadamards) {
    const auto layout = dynamic_layout(paper_mdp(), 3);
    const auto block = build_init_block(layout);
    ASSERT_EQ(block.size(), 3u);
    for (const auto& inst : block) EXPECT_EQ(std::get<GateOp>(inst).gate.type, GateType::Hadamard);
    StateVector s(layout.num_qubits);
    apply_segment(s, block);
    const auto& bank = layout.bank(0);
    const auto m = marginal_probabilities(s, {bank.state[0], bank.state[1], bank.action[0]});
    ASSERT_EQ(m.size(), 8u);
    for (double p : m) EXPECT_NEAR(p, 0.125, 1e-12);
}

TEST(InitBlock, DegenerateMdpIsEmpty) {
    MdpSpec one(1, 1);
    one.set_probability(0, 0, 0, 1.0);
    EXPECT_TRUE(build_init_block(dynamic_layout(one, 1)).empty());
}

TEST(InitBlock, NonPowerOfTwoStatesUniform) {
    const auto mdp = three_state_mdp();
    const auto layout = dynamic_layout(mdp, 1);
    StateVector s(layout.num_qubits);
    apply_segment(s, build_init_block(layout));
    const auto m = register_marginal(s, layout.bank(0).state);
    ASSERT_EQ(m.size(), 3u);
    for (const auto& [v, p] : m) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
}

// Prepares |s, a> directly and compares the next-state register with the row.
void expect_rows_loaded(const MdpSpec& mdp) {
    const auto layout = dynamic_layout(mdp, 1);
    const auto& bank = layout.bank(0);
    const auto block = build_transition_block(mdp, layout);
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            auto state = StateVector::basis(layout.num_qubits, place_bits(bank.state, s) | place_bits(bank.action, a));
            apply_segment(state, block);
            const auto m = register_marginal(state, bank.next_state);
            for (std::size_t n = 0; n < mdp.num_states(); ++n) {
                const double got = m.count(n) ? m.at(n) : 0.0;
                EXPECT_NEAR(got, mdp.probability(s, a, n), 1e-9) << "s" << s << " a" << a << " n" << n;
            }
            EXPECT_NEAR(register_marginal(state, bank.state).at(s), 1.0, 1e-12);
        }
    }
}

TEST(TransitionBlock, S0A0Row) {
    const auto mdp = paper_mdp();
    const auto layout = dynamic_layout(mdp, 1);
    const auto& bank = layout.bank(0);
    auto state = StateVector::basis(layout.num_qubits, 0);
    apply_segment(state, build_transition_block(mdp, layout));
    const auto m = marginal_probabilities(state, {bank.next_state[1], bank.next_state[0]});
    EXPECT_NEAR(m[0b01], 0.6, 1e-9);
    EXPECT_NEAR(m[0b10], 0.4, 1e-9);
    EXPECT_NEAR(m[0b00] + m[0b11], 0.0, 1e-12);
}

TEST(TransitionBlock, AllRowsPaper) { expect_rows_loaded(paper_mdp()); }
TEST(TransitionBlock, AllRowsDense) { expect_rows_loaded(dense_mdp()); }
TEST(TransitionBlock, AllRowsThreeStates) { expect_rows_loaded(three_state_mdp()); }

TEST(TransitionBlock, DeterministicRowsUseMultiControlledX) {
    const auto mdp = deterministic_mdp();
    const auto layout = dynamic_layout(mdp, 1);
    const auto block = build_transition_block(mdp, layout);
    std::size_t ones = 0;
    for (std::size_t s = 0; s < 4; ++s) {
        for (std::size_t a = 0; a < 2; ++a) {
            for (std::size_t n = 0; n < 4; ++n) {
                if (mdp.probability(s, a, n) == 1.0) ones += static_cast<std::size_t>(std::popcount(n));
            }
        }
    }
    ASSERT_EQ(block.size(), ones);
    for (const auto& inst : block) {
        const auto& g = std::get<GateOp>(inst).gate;
        EXPECT_EQ(g.type, GateType::PauliX);
        EXPECT_GE(g.controls.size(), 3u);
    }
    expect_rows_loaded(mdp);
    // (s3, a1) -> s3 loads |11>.
    const auto& bank = layout.bank(0);
    auto state = StateVector::basis(layout.num_qubits, place_bits(bank.state, 3) | place_bits(bank.action, 1));
    apply_segment(state, block);
    EXPECT_EQ(read_bits(bank.next_state, single_basis(state)), 3u);
}

TEST(RewardBlock, Examples) {
    const auto layout = dynamic_layout(paper_mdp(), 1);
    const auto& bank = layout.bank(0);
    const auto block = build_reward_block(paper_mdp(), layout);
    for (std::uint64_t n = 0; n < 4; ++n) {
        auto s = StateVector::basis(layout.num_qubits, place_bits(bank.next_state, n));
        apply_segment(s, block);
        const auto idx = single_basis(s);
        EXPECT_EQ(read_bits(bank.reward, idx), n);
        EXPECT_EQ(read_bits(bank.next_state, idx), n);
    }
}

TEST(RewardBlock, RejectsNonIdentityMap) {
    auto mdp = paper_mdp();
    mdp.set_reward(1, 0);
    EXPECT_THROW(build_reward_block(mdp, dynamic_layout(mdp, 1)), ValidationError);
}

TEST(RewardBlockGeneral, IdentityMatchesCopy) {
    const auto mdp = paper_mdp();
    const auto layout = dynamic_layout(mdp, 1);
    const auto copy = build_reward_block(mdp, layout);
    const auto general = build_reward_block_general(mdp, layout);
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << layout.num_qubits); i += 3) {
        auto a = StateVector::basis(layout.num_qubits, i);
        auto b = a;
        apply_segment(a, copy);
        apply_segment(b, general);
        for (std::uint64_t k = 0; k < a.size(); ++k) ASSERT_NEAR(std::abs(a.amplitudes()[k] - b.amplitudes()[k]), 0.0, 1e-12);
    }
}

void expect_reward_map(const std::vector<int>& map) {
    auto mdp = paper_mdp();
    for (std::size_t n = 0; n < 4; ++n) mdp.set_reward(n, map[n]);
    mdp.set_widths(std::nullopt, std::nullopt, 2);
    const auto layout = dynamic_layout(mdp, 1);
    const auto& bank = layout.bank(0);
    const auto block = build_reward_for(mdp, layout, 0);
    for (std::uint64_t n = 0; n < 4; ++n) {
        auto s = StateVector::basis(layout.num_qubits, place_bits(bank.next_state, n));
        apply_segment(s, block);
        EXPECT_EQ(read_bits(bank.reward, single_basis(s)), static_cast<std::uint64_t>(map[n])) << "next " << n;
    }
}

TEST(RewardBlockGeneral, SingleBranchMap) { expect_reward_map({0, 0, 0, 3}); }

TEST(RewardBlockGeneral, ArbitraryMaps) {
    expect_reward_map({2, 0, 3, 1});
    expect_reward_map({1, 1, 1, 1});
    expect_reward_map({3, 2, 0, 0});
}

TEST(ReturnAccumulate, Examples) {
    const auto layout = dynamic_layout(paper_mdp(), 3);
    const auto& bank = layout.bank(0);
    const auto block = build_return_accumulate_block(layout, 0);
    auto run = [&](std::uint64_t g, std::uint64_t r) {
        auto s = StateVector::basis(layout.num_qubits, place_bits(layout.return_qubits, g) | place_bits(bank.reward, r));
        apply_segment(s, block);
        return read_bits(layout.return_qubits, single_basis(s));
    };
    EXPECT_EQ(run(0b0000, 0b10), 0b0010u);
    EXPECT_EQ(run(0b0101, 0b11), 0b1000u);
    for (std::uint64_t g = 0; g < 16; ++g) {
        for (std::uint64_t r = 0; r < 4; ++r) EXPECT_EQ(run(g, r), (g + r) % 16) << g << "+" << r;
    }
}

TEST(Propagation, CopiesNextState) {
    const auto layout = dynamic_layout(paper_mdp(), 3);
    const auto& bank = layout.bank(0);
    const auto block = build_state_propagation_block(layout, 0);
    auto s = StateVector::basis(layout.num_qubits, place_bits(bank.next_state, 3));
    apply_segment(s, block);
    EXPECT_EQ(read_bits(bank.state, single_basis(s)), 3u);
    auto z = StateVector::basis(layout.num_qubits, 0);
    apply_segment(z, block);
    EXPECT_EQ(single_basis(z), 0u);
}

TEST(Propagation, SuperpositionBecomesCorrelated) {
    const auto layout = dynamic_layout(paper_mdp(), 3);
    const auto& bank = layout.bank(0);
    StateVector s(layout.num_qubits);
    for (auto q : bank.next_state) s.apply(Gate::h(), q);
    apply_segment(s, build_state_propagation_block(layout, 0));
    for (std::uint64_t n = 0; n < 4; ++n) {
        const auto idx = place_bits(bank.next_state, n) | place_bits(bank.state, n);
        EXPECT_NEAR(s.amplitudes()[idx].real(), 0.5, 1e-12);
    }
    EXPECT_NEAR(s.norm(), 1.0, 1e-12);
}

TEST(DynamicProgram, PaperShape) {
    const auto b = build_dynamic_program(paper_mdp(), 3);
    EXPECT_EQ(b.report.interaction_qubit_count, 7u);
    EXPECT_EQ(b.report.total_qubit_count, 11u);
    EXPECT_EQ(b.program.num_classical_bits(), 25u);
    EXPECT_EQ(b.report.measure_count, 25u);
}

TEST(DynamicProgram, ReportText) {
    const auto b = build_dynamic_program(paper_mdp(), 3);
    EXPECT_EQ(b.report.to_text(),
              "interaction_qubits 7\n"
              "total_qubits 11\n"
              "gate CCX 6\n"
              "gate CX 16\n"
              "gate H 5\n"
              "gate MCRY 21\n"
              "gate MCX 30\n"
              "measure 25\n"
              "reset 14\n");
}

TEST(DynamicProgram, SingleStepSupport) {
    const auto b = build_dynamic_program(paper_mdp(), 1);
    const auto d = exact_distribution(b.program);
    std::set<std::string> groups;
    for (const auto& [k, p] : d.values) groups.insert(to_bitstring(k, d.num_bits).substr(2));
    const std::set<std::string> table = {"0000100", "1010000", "0101000", "0101100", "0000001",
                                         "1010101", "0101001", "1111101", "0000010", "1010010",
                                         "0101110", "1111110", "1010011", "1111011", "1111111"};
    EXPECT_EQ(groups, table);
}

void expect_matches_reference(const OutcomeDistribution& d, const MdpSpec& mdp, std::size_t T) {
    const auto fmt = RecordFormat::for_mdp(mdp, T);
    const auto ref = to_distribution(classical_enumerate(mdp, T, uniform_start(mdp)), fmt);
    ASSERT_EQ(d.values.size(), ref.values.size());
    for (const auto& [k, p] : ref.values) EXPECT_NEAR(d.probability(k), p, 1e-9) << to_bitstring(k, fmt.width());
}

TEST(DynamicProgram, DeterministicMdpTwoSteps) {
    const auto mdp = deterministic_mdp();
    const auto d = exact_distribution(build_dynamic_program(mdp, 2).program);
    EXPECT_EQ(d.values.size(), 16u);  // 4 starts x 2 x 2 action choices
    for (const auto& [k, p] : d.values) EXPECT_NEAR(p, 1.0 / 16.0, 1e-12);
    expect_matches_reference(d, mdp, 2);
}

TEST(StaticProgram, PaperShape) {
    const auto b = build_static_program(paper_mdp(), 3, true);
    EXPECT_EQ(b.report.interaction_qubit_count, 21u);
    EXPECT_EQ(b.report.total_qubit_count, 25u);
    EXPECT_EQ(b.report.reset_count, 0u);
    EXPECT_THROW(build_static_program(paper_mdp(), 4, true), CapacityError);
}

TEST(WidthLaw, DynamicConstantStaticLinear) {
    for (std::size_t T = 1; T <= 6; ++T) {
        EXPECT_EQ(dynamic_layout(paper_mdp(), T).interaction_qubits(), 7u);
        EXPECT_EQ(static_layout(paper_mdp(), T).interaction_qubits(), 7u * T);
    }
}

TEST(Equivalence, StaticEqualsDynamicAtOneStep) {
    for (const auto& mdp : {paper_mdp(), dense_mdp(), three_state_mdp()}) {
        const auto a = exact_distribution(build_static_program(mdp, 1, true).program);
        const auto b = exact_distribution(build_dynamic_program(mdp, 1).program);
        ASSERT_EQ(a.values.size(), b.values.size());
        for (const auto& [k, p] : a.values) EXPECT_NEAR(p, b.probability(k), 1e-12);
    }
}

TEST(Equivalence, StaticEqualsDynamicAndReference) {
    for (const auto& mdp : {paper_mdp(), dense_mdp(), three_state_mdp(), deterministic_mdp()}) {
        for (std::size_t T : {1, 2}) {
            const auto a = exact_distribution(build_static_program(mdp, T, true).program);
            const auto b = exact_distribution(build_dynamic_program(mdp, T).program);
            expect_matches_reference(a, mdp, T);
            expect_matches_reference(b, mdp, T);
        }
    }
}

TEST(Equivalence, PaperThreeSteps) {
    const auto mdp = paper_mdp();
    const auto a = exact_distribution(build_static_program(mdp, 3, true).program);
    const auto b = exact_distribution(build_dynamic_program(mdp, 3).program);
    EXPECT_EQ(a.values.size(), 208u);
    EXPECT_LE(total_variation_distance(a, b), 1e-9);
    expect_matches_reference(b, mdp, 3);
}

TEST(Equivalence, DenseThreeStepsDynamic) {
    const auto mdp = dense_mdp();
    expect_matches_reference(exact_distribution(build_dynamic_program(mdp, 3).program), mdp, 3);
}

// Amplitude, reward-copy and return laws on the measurement-free static state.
void expect_static_laws(const MdpSpec& mdp, std::size_t T) {
    const auto b = build_static_program(mdp, T, false);
    StateVector s(b.layout.num_qubits);
    apply_segment(s, b.program.instructions());
    const auto fmt = b.layout.format;
    const auto ref = to_distribution(classical_enumerate(mdp, T, uniform_start(mdp)), fmt);
    const auto readout = b.layout.terminal_readout();
    const auto amps = s.amplitudes();
    std::size_t nonzero = 0;
    for (std::uint64_t i = 0; i < amps.size(); ++i) {
        const double p = std::norm(amps[i]);
        if (p < 1e-14) continue;
        ++nonzero;
        std::uint64_t rec = 0;
        for (const auto& [q, c] : readout) rec |= ((i >> q) & 1u) << c;
        EXPECT_NEAR(p, ref.probability(rec), 1e-9);
        const auto tr = decode_trajectory(rec, fmt);
        int sum = 0;
        for (const auto& st : tr.steps) {
            EXPECT_EQ(st.reward, mdp.reward(st.next_state));
            sum += st.reward;
        }
        EXPECT_EQ(tr.return_value, sum % (1 << fmt.return_bits));
    }
    EXPECT_EQ(nonzero, ref.values.size());
}

TEST(StaticLaws, Paper) {
    for (std::size_t T : {1, 2, 3}) expect_static_laws(paper_mdp(), T);
}

TEST(StaticLaws, OtherMdps) {
    expect_static_laws(dense_mdp(), 2);
    expect_static_laws(three_state_mdp(), 2);
    auto rewarded = paper_mdp();
    rewarded.set_reward(0, 1);
    rewarded.set_reward(1, 3);
    rewarded.set_reward(2, 0);
    rewarded.set_reward(3, 2);
    expect_static_laws(rewarded, 2);
}

TEST(Reference, EnumerationAgreesWithStringOracle) {
    const auto mdp = paper_mdp();
    const auto fmt = RecordFormat::for_mdp(mdp, 3);
    const auto d = exact_distribution(build_dynamic_program(mdp, 3).program);
    const auto ref = oracle::enumerate(oracle::example_transitions(), 3, oracle::uniform(4), 4);
    ASSERT_EQ(d.values.size(), ref.size());
    for (const auto& [bits, p] : ref) EXPECT_NEAR(d.probability(parse_bitstring(bits)), p, 1e-12) << bits;
}

}  // namespace
}  // namespace qmdp
