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

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "support/oracle.hpp"
#include "qmdp/report.hpp"
#include "qmdp/trajectory.hpp"

namespace qmdp {
namespace {

const std::string kCorpusPath = std::string(QMDP_DATA_DIR) + "/trajectories_t3.csv";

Corpus appendix_corpus() { return parse_corpus_csv(read_file(kCorpusPath)); }

RecordFormat t3() { return RecordFormat::for_mdp(paper_mdp(), 3); }

std::map<std::string, double> as_strings(const std::vector<TrajectoryRecord>& recs, const RecordFormat& fmt) {
    std::map<std::string, double> out;
    for (const auto& r : recs) out[to_bitstring(encode_trajectory(r, fmt), fmt.width())] += r.probability;
    return out;
}

TEST(RecordFormat, PaperWidths) {
    const auto f = t3();
    EXPECT_EQ(f.group_bits(), 7u);
    EXPECT_EQ(f.return_bits, 4u);
    EXPECT_EQ(f.width(), 25u);
    EXPECT_EQ(RecordFormat::for_mdp(paper_mdp(), 1).return_bits, 2u);
}

TEST(Codec, DecodesT151) {
    const auto rec = decode_trajectory(parse_bitstring("1000111111111111101010000"), t3());
    EXPECT_EQ(rec.return_value, 8);
    ASSERT_EQ(rec.steps.size(), 3u);
    EXPECT_EQ(rec.steps[0], (Step{0, 0, 2, 2}));
    EXPECT_EQ(rec.steps[1], (Step{2, 1, 3, 3}));
    EXPECT_EQ(rec.steps[2], (Step{3, 1, 3, 3}));
    EXPECT_EQ(format_step(rec.steps[0]), "s0/a0/s2/r2");
}

TEST(Codec, RoundTripsWholeCorpus) {
    const auto fmt = t3();
    for (const auto& e : appendix_corpus().entries) {
        const auto rec = decode_trajectory(parse_bitstring(e.bits), fmt);
        EXPECT_EQ(to_bitstring(encode_trajectory(rec, fmt), fmt.width()), e.bits) << e.id;
        for (unsigned t = 0; t < 3; ++t) {
            const auto f = oracle::step(e.bits, 3, t, 4);
            EXPECT_EQ(rec.steps[t], (Step{f.state, f.action, f.next, static_cast<int>(f.reward)})) << e.id;
        }
    }
}

TEST(Enumerate, SingleStepFromS0) {
    const auto mdp = paper_mdp();
    const auto recs = classical_enumerate(mdp, 1, point_start(mdp, 0));
    ASSERT_EQ(recs.size(), 4u);
    std::map<std::tuple<std::size_t, std::size_t, std::size_t, int>, double> got;
    for (const auto& r : recs) {
        got[{r.steps[0].state, r.steps[0].action, r.steps[0].next_state, r.steps[0].reward}] = r.probability;
    }
    EXPECT_NEAR((got[{0, 0, 1, 1}]), 0.3, 1e-12);
    EXPECT_NEAR((got[{0, 0, 2, 2}]), 0.2, 1e-12);
    EXPECT_NEAR((got[{0, 1, 0, 0}]), 0.05, 1e-12);
    EXPECT_NEAR((got[{0, 1, 1, 1}]), 0.45, 1e-12);
}

TEST(Enumerate, MatchesReference) {
    const auto mdp = paper_mdp();
    for (std::size_t T : {1, 2, 3, 4}) {
        const auto fmt = RecordFormat::for_mdp(mdp, T);
        const auto got = as_strings(classical_enumerate(mdp, T, uniform_start(mdp)), fmt);
        const auto want = oracle::enumerate(oracle::example_transitions(), static_cast<unsigned>(T), oracle::uniform(4),
                                            static_cast<unsigned>(fmt.return_bits));
        ASSERT_EQ(got.size(), want.size()) << "T=" << T;
        for (const auto& [bits, p] : want) EXPECT_NEAR(got.at(bits), p, 1e-12) << bits;
    }
}

TEST(Enumerate, ProbabilityConservationAndReturnBound) {
    const auto mdp = paper_mdp();
    for (std::size_t T = 1; T <= 5; ++T) {
        double total = 0.0;
        for (const auto& r : classical_enumerate(mdp, T, uniform_start(mdp))) {
            total += r.probability;
            EXPECT_LE(r.return_value, static_cast<int>(T) * mdp.max_reward());
        }
        EXPECT_NEAR(total, 1.0, 1e-9) << "T=" << T;
    }
    int top = 0;
    for (const auto& r : classical_enumerate(mdp, 3, uniform_start(mdp))) top = std::max(top, r.return_value);
    EXPECT_EQ(top, 9);
}

TEST(Enumerate, OracleClosure) {
    const auto fmt = t3();
    Corpus c;
    int i = 0;
    for (const auto& [bits, p] : as_strings(classical_enumerate(paper_mdp(), 3, uniform_start(paper_mdp())), fmt)) {
        c.entries.push_back({"E-" + std::to_string(++i), bits});
    }
    EXPECT_TRUE(analyze_corpus(c, fmt).consistent());
}

TEST(Enumerate, CorpusIsSubsetOfSupportClosure) {
    const auto fmt = t3();
    const auto corpus = appendix_corpus();
    const auto rep = extract_support_from_corpus(corpus, fmt);
    const auto mdp = mdp_from_support(4, 2, rep.support);
    const auto all = as_strings(classical_enumerate(mdp, 3, uniform_start(mdp)), fmt);
    for (const auto& e : corpus.entries) EXPECT_TRUE(all.count(e.bits)) << e.id;
    // Markov closure of the corpus support also admits 38 chains the corpus omits.
    EXPECT_EQ(all.size(), 208u);
}

TEST(Corpus, ParsesAppendix) {
    const auto c = appendix_corpus();
    ASSERT_EQ(c.entries.size(), 170u);
    EXPECT_EQ(c.entries.front().id, "T-1");
    EXPECT_EQ(c.id_of("1000111111111111101010000"), "T-151");
    EXPECT_EQ(c.id_of("1000111101111111101010000"), "T-143");
    EXPECT_FALSE(c.id_of("0000000000000000000000000").has_value());
    EXPECT_EQ(parse_corpus_csv(corpus_to_csv(c)).entries.size(), 170u);
}

TEST(Corpus, MalformedInputs) {
    EXPECT_THROW(parse_corpus_csv(""), ValidationError);
    EXPECT_THROW(parse_corpus_csv("id,bits\n"), ValidationError);
    EXPECT_THROW(parse_corpus_csv("id,bits\nT-1\n"), ValidationError);
    EXPECT_THROW(parse_corpus_csv("id,bits\nT-1,01x1\n"), ValidationError);
    EXPECT_THROW(parse_corpus_csv("id,bits\nT-1,0101\nT-2,011\n"), ValidationError);
    EXPECT_THROW(parse_corpus_csv("id,bits\nT-1,0101\nT-1,0111\n"), ValidationError);
    try {
        parse_corpus_csv("id,bits\n");
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("empty corpus"), std::string::npos);
    }
}

TEST(Support, SingleTrajectory) {
    Corpus c{{{"T-151", "1000111111111111101010000"}}};
    const auto rep = extract_support_from_corpus(c, t3());
    const std::set<Transition> want{{0, 0, 2}, {2, 1, 3}, {3, 1, 3}};
    EXPECT_EQ(rep.support, want);
}

TEST(Support, CorruptedReturnPrefix) {
    auto c = appendix_corpus();
    auto& e = c.entries[42];
    e.bits[3] = e.bits[3] == '0' ? '1' : '0';
    const auto rep = analyze_corpus(c, t3());
    ASSERT_EQ(rep.violations.size(), 1u);
    EXPECT_EQ(rep.violations[0].id, e.id);
    EXPECT_EQ(rep.violations[0].kind, "return");
    EXPECT_THROW(extract_support_from_corpus(c, t3()), ValidationError);
}

TEST(Support, ChainingAndRewardViolations) {
    // T-151 with the t=1 state changed from s2 to s1.
    Corpus chain{{{"X-1", "1000111111111111101010000"}}};
    chain.entries[0].bits[16] = '0';
    chain.entries[0].bits[17] = '1';
    const auto rep = analyze_corpus(chain, t3());
    ASSERT_EQ(rep.violations.size(), 1u);
    EXPECT_EQ(rep.violations[0].kind, "chaining");
    EXPECT_EQ(rep.violations[0].step, 1u);

    Corpus reward{{{"X-2", "1000111111111111101010000"}}};
    reward.entries[0].bits[4] = '0';  // t=2 reward 11 -> 01
    const auto rep2 = analyze_corpus(reward, t3());
    std::set<std::string> kinds;
    for (const auto& v : rep2.violations) kinds.insert(v.kind);
    EXPECT_TRUE(kinds.count("reward"));
    EXPECT_TRUE(kinds.count("return"));
}

TEST(Support, InitialStateS0MatchesTabulatedSamples) {
    const auto rep = extract_support_from_corpus(appendix_corpus(), t3());
    std::set<std::string> groups;
    for (const auto& tr : rep.support_by_step[0]) {
        if (tr.state == 0) groups.insert(oracle::group(0, static_cast<unsigned>(tr.action), static_cast<unsigned>(tr.next_state)));
    }
    const std::set<std::string> table{"0000100", "1010000", "0101000", "0101100"};
    EXPECT_EQ(groups, table);
}

TEST(Support, SameAtEveryStep) {
    const auto rep = extract_support_from_corpus(appendix_corpus(), t3());
    EXPECT_EQ(rep.support.size(), 15u);
    for (const auto& s : rep.support_by_step) EXPECT_EQ(s, rep.support);
}

TEST(Reports, GroupsDescendAndConserveMass) {
    const auto mdp = paper_mdp();
    const auto fmt = t3();
    const auto dist = to_distribution(classical_enumerate(mdp, 3, uniform_start(mdp)), fmt);
    const auto corpus = appendix_corpus();
    const auto entries = decode_distribution(dist, fmt, &corpus);
    const auto groups = group_by_return(entries);
    EXPECT_NEAR(groups.total(), dist.total(), 1e-9);
    std::vector<int> order;
    std::size_t members = 0;
    for (const auto& [g, list] : groups.groups) {
        order.push_back(g);
        members += list.size();
        for (const auto& e : list) EXPECT_EQ(e.record.return_value, g);
    }
    EXPECT_EQ(members, entries.size());
    EXPECT_TRUE(std::is_sorted(order.rbegin(), order.rend()));
    EXPECT_EQ(order.front(), 9);
    EXPECT_EQ(order.back(), 0);
    const auto t151 = std::find_if(entries.begin(), entries.end(), [](const ReportEntry& e) { return e.id == "T-151"; });
    ASSERT_NE(t151, entries.end());
    EXPECT_EQ(t151->bits, "1000111111111111101010000");
}

TEST(Reports, TableHeaders) {
    const auto mdp = paper_mdp();
    const auto fmt = t3();
    const auto dist = to_distribution(classical_enumerate(mdp, 3, point_start(mdp, 0)), fmt);
    const auto entries = decode_distribution(dist, fmt);
    const auto csv = trajectory_table(entries, fmt).to_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,bits,return,step0,step1,step2,probability");
    const auto vis = visitation_table(entries, fmt).to_csv();
    EXPECT_EQ(vis.substr(0, vis.find('\n')), "id,bits,return,t0,t1,t2");
    EXPECT_NE(vis.find("1000111111111111101010000,1000,s0,s2,s3"), std::string::npos);
    const auto json = nlohmann::json::parse(trajectory_table(entries, fmt).to_json());
    EXPECT_EQ(json.size(), entries.size());
}

}  // namespace
}  // namespace qmdp
