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

// The `qmdp` command-line front end. Each subcommand reads a manifest built
// from flags and writes its reports into the output directory.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qmdp/builder.hpp"
#include "qmdp/circuit.hpp"
#include "qmdp/distribution.hpp"
#include "qmdp/errors.hpp"
#include "qmdp/grover.hpp"
#include "qmdp/mdp.hpp"
#include "qmdp/report.hpp"
#include "qmdp/trajectory.hpp"

namespace qmdp {

struct RunManifest {
    std::string command;  // run | grover | enumerate | ingest | compare
    std::string mode = "dynamic";
    std::optional<std::string> mdp_path;
    std::optional<std::string> corpus_path;
    std::size_t steps = 3;
    std::optional<std::uint64_t> shots;
    std::uint64_t seed = 0;
    bool analytic = false;
    std::optional<std::string> return_bits;
    std::optional<std::string> start_bits;
    std::optional<std::string> end_bits;
    std::optional<std::size_t> iterations;
    std::optional<std::string> out;
    OutputFormat format = OutputFormat::Csv;
    std::vector<std::string> inputs;
};

namespace cli {

inline constexpr std::uint64_t kDefaultGroverShots = 32768;

inline MdpSpec load_mdp(const RunManifest& m) {
    if (!m.mdp_path) return paper_mdp();
    return parse_mdp_config(read_file(*m.mdp_path));
}

inline std::optional<Corpus> load_corpus(const RunManifest& m) {
    if (!m.corpus_path) return std::nullopt;
    return parse_corpus_csv(read_file(*m.corpus_path));
}

inline std::uint64_t parse_field(const std::string& bits, std::size_t width, const char* flag) {
    if (bits.size() != width) {
        throw ValidationError(std::string(flag) + " expects " + std::to_string(width) + " bits, got '" + bits + "'");
    }
    return parse_bitstring(bits);
}

inline void validate_manifest(const RunManifest& m) {
    if (m.steps == 0) throw ValidationError("--steps must be at least 1");
    if (m.shots && *m.shots == 0) throw ValidationError("--shots must be at least 1");
    if (m.mode != "dynamic" && m.mode != "static") throw ValidationError("--mode must be dynamic or static");
    auto require = [](const std::optional<std::string>& p, const char* what) {
        if (p && !std::filesystem::exists(*p)) throw ValidationError(std::string(what) + " not found: " + *p);
    };
    require(m.mdp_path, "MDP config");
    require(m.corpus_path, "corpus");
    for (const auto& in : m.inputs) require(in, "input");
}

class Writer {
  public:
    Writer(const RunManifest& m, std::ostream& log) : dir_(m.out), format_(m.format), log_(log) {}

    void table(const std::string& stem, const Table& t) { write(stem + extension(format_), t.render(format_)); }

    void distribution(const std::string& stem, const OutcomeDistribution& d) {
        write(stem + extension(format_),
              format_ == OutputFormat::Csv ? distribution_to_csv(d) : distribution_to_json(d).dump(2) + "\n");
    }

    void write(const std::string& name, const std::string& content) {
        if (!dir_) return;
        const auto path = std::filesystem::path(*dir_) / name;
        write_file_atomic(path, content);
        log_ << "wrote " << path.string() << '\n';
    }

  private:
    std::optional<std::string> dir_;
    OutputFormat format_;
    std::ostream& log_;
};

inline void print_groups(const ReturnGroupReport& groups, const RecordFormat& fmt, std::ostream& out) {
    for (const auto& [g, members] : groups.groups) {
        double mass = 0.0;
        for (const auto& e : members) mass += e.value;
        out << "group " << to_bitstring(static_cast<std::uint64_t>(g), fmt.return_bits) << ": " << members.size()
            << " trajectories, mass " << format_value(mass) << '\n';
    }
}

inline void write_trajectory_reports(Writer& w, const OutcomeDistribution& dist, const RecordFormat& fmt,
                                     const std::optional<Corpus>& corpus, std::ostream& out) {
    const auto entries = decode_distribution(dist, fmt, corpus ? &*corpus : nullptr);
    const auto groups = group_by_return(entries);
    out << "trajectories " << entries.size() << " total " << format_value(groups.total()) << '\n';
    print_groups(groups, fmt, out);
    w.distribution("distribution", dist);
    w.table("trajectories", trajectory_table(entries, fmt));
    w.table("groups", group_table(groups, fmt));
    w.table("visitation", visitation_table(entries, fmt));
}

inline int cmd_run(const RunManifest& m, std::ostream& out) {
    const auto mdp = load_mdp(m);
    const auto corpus = load_corpus(m);
    const bool sampling = m.shots.has_value() && !m.analytic;
    const auto built = m.mode == "static" ? build_static_program(mdp, m.steps, true)
                                          : build_dynamic_program(mdp, m.steps);
    const auto dist = sampling ? sample(built.program, *m.shots, m.seed) : exact_distribution(built.program);
    out << "mode " << m.mode << " steps " << m.steps << " qubits " << built.layout.num_qubits << " interaction "
        << built.layout.interaction_qubits() << (sampling ? " shots " + std::to_string(*m.shots) : " analytic")
        << '\n';
    Writer w(m, out);
    write_trajectory_reports(w, dist, built.layout.format, corpus, out);
    w.write(m.format == OutputFormat::Csv ? "build_report.txt" : "build_report.json",
            m.format == OutputFormat::Csv ? built.report.to_text() : built.report.to_json().dump(2) + "\n");
    return 0;
}

inline int cmd_enumerate(const RunManifest& m, std::ostream& out) {
    const auto mdp = load_mdp(m);
    const auto corpus = load_corpus(m);
    const auto fmt = RecordFormat::for_mdp(mdp, m.steps);
    std::vector<double> start = uniform_start(mdp);
    if (m.start_bits) start = point_start(mdp, parse_field(*m.start_bits, fmt.state_bits, "--start"));
    const auto dist = to_distribution(classical_enumerate(mdp, m.steps, start), fmt);
    Writer w(m, out);
    write_trajectory_reports(w, dist, fmt, corpus, out);
    return 0;
}

inline int cmd_ingest(const RunManifest& m, std::ostream& out, std::ostream& err) {
    if (!m.corpus_path) throw ValidationError("ingest requires --corpus");
    const auto mdp = load_mdp(m);
    const auto corpus = parse_corpus_csv(read_file(*m.corpus_path));
    auto fmt = RecordFormat::for_mdp(mdp, m.steps);
    const std::size_t width = corpus.entries.front().bits.size();
    const std::size_t body = fmt.width() - fmt.return_bits;
    if (width != fmt.width() && width > body) fmt.return_bits = width - body;
    const auto rep = analyze_corpus(corpus, fmt);

    Table support;
    support.header = {"step", "state", "action", "next"};
    for (std::size_t t = 0; t < rep.support_by_step.size(); ++t) {
        for (const auto& tr : rep.support_by_step[t]) {
            support.rows.push_back({t, "s" + std::to_string(tr.state), "a" + std::to_string(tr.action),
                                    "s" + std::to_string(tr.next_state)});
        }
    }
    Table verify;
    verify.header = {"id", "bits", "status", "detail"};
    for (const auto& e : corpus.entries) {
        std::string detail;
        for (const auto& v : rep.violations) {
            if (v.id != e.id) continue;
            if (!detail.empty()) detail += "; ";
            detail += v.kind + (v.step ? " at step " + std::to_string(*v.step) : std::string()) + ": " + v.detail;
        }
        verify.rows.push_back({e.id, e.bits, detail.empty() ? "ok" : "violation", detail});
    }
    for (const auto& v : rep.violations) {
        err << v.id << ": " << v.kind << (v.step ? " at step " + std::to_string(*v.step) : std::string()) << ": "
            << v.detail << '\n';
    }
    out << "entries " << rep.entries << " violations " << rep.violations.size() << " transitions "
        << rep.support.size() << '\n';
    Writer w(m, out);
    w.write("corpus.csv", corpus_to_csv(corpus));
    w.table("support", support);
    w.table("verification", verify);
    return rep.consistent() ? 0 : 1;
}

inline int cmd_compare(const RunManifest& m, std::ostream& out) {
    if (m.inputs.size() != 2) throw ValidationError("compare takes exactly two distribution files");
    const auto a = distribution_from_text(read_file(m.inputs[0]));
    const auto b = distribution_from_text(read_file(m.inputs[1]));
    const double tvd = total_variation_distance(a, b);
    const auto pa = a.normalized();
    const auto pb = b.normalized();
    std::vector<std::uint64_t> keys;
    for (const auto& [k, v] : pa.values) keys.push_back(k);
    for (const auto& [k, v] : pb.values) {
        if (!pa.values.contains(k)) keys.push_back(k);
    }
    auto diff = [&](std::uint64_t k) { return std::abs(pa.probability(k) - pb.probability(k)); };
    std::stable_sort(keys.begin(), keys.end(), [&](std::uint64_t x, std::uint64_t y) {
        if (diff(x) != diff(y)) return diff(x) > diff(y);
        return x < y;
    });
    Table t;
    t.header = {"bits", "a", "b", "abs_diff"};
    for (auto k : keys) t.rows.push_back({to_bitstring(k, a.num_bits), pa.probability(k), pb.probability(k), diff(k)});
    out << "tvd " << format_value(tvd) << '\n';
    for (std::size_t i = 0; i < keys.size() && i < 5; ++i) {
        if (diff(keys[i]) == 0.0) break;
        out << "  " << to_bitstring(keys[i], a.num_bits) << ' ' << format_value(diff(keys[i])) << '\n';
    }
    Writer w(m, out);
    w.table("compare", t);
    return 0;
}

inline int cmd_grover(const RunManifest& m, std::ostream& out) {
    const auto mdp = load_mdp(m);
    const auto corpus = load_corpus(m);
    const auto fmt = RecordFormat::for_mdp(mdp, m.steps);
    const std::uint64_t shots = m.shots.value_or(kDefaultGroverShots);
    std::optional<std::size_t> start;
    std::optional<std::size_t> end;
    if (m.start_bits) start = parse_field(*m.start_bits, fmt.state_bits, "--start");
    if (m.end_bits) end = parse_field(*m.end_bits, fmt.state_bits, "--end");

    GroverResult result;
    std::vector<GroverPlan> schedule;
    if (m.return_bits) {
        const MarkPredicate pred{parse_field(*m.return_bits, fmt.return_bits, "--return"), start, end};
        result = run_grover(mdp, m.steps, pred, m.iterations, shots, m.seed);
        schedule.push_back(result.plan);
    } else {
        if (end) throw ValidationError("--end requires --return");
        if (m.iterations) throw ValidationError("--iterations requires --return");
        auto best = find_max_return(mdp, m.steps, start, shots, m.seed);
        schedule = std::move(best.log);
        result = std::move(best.search);
    }

    const auto& plan = result.plan;
    const auto bits_of = [&](std::optional<std::size_t> s) {
        return s ? to_bitstring(*s, fmt.state_bits) : std::string("-");
    };
    Table sched;
    sched.header = {"return", "start", "end", "marked_probability", "iterations"};
    for (const auto& p : schedule) {
        sched.rows.push_back({to_bitstring(p.predicate.target_return, fmt.return_bits), bits_of(p.predicate.start_state),
                              bits_of(p.predicate.end_state), p.marked_probability, p.iterations});
    }
    Table curve;
    curve.header = {"iteration", "analytic", "sampled"};
    for (const auto& pt : result.curve) curve.rows.push_back({pt.iteration, pt.analytic, pt.sampled});

    OutcomeDistribution marked_dist{fmt.width(), {}, std::nullopt};
    for (const auto& r : result.marked) marked_dist.values[encode_trajectory(r, fmt)] = r.probability;
    const auto entries = decode_distribution(marked_dist, fmt, corpus ? &*corpus : nullptr);

    const auto policy = extract_policy(result.marked, fmt);
    Table pol;
    pol.header = {"state", "action"};
    for (const auto& [s, a] : policy.policy) pol.rows.push_back({"s" + std::to_string(s), "a" + std::to_string(a)});
    Table conflicts;
    conflicts.header = {"state", "chosen", "rejected"};
    for (const auto& c : policy.conflicts) {
        conflicts.rows.push_back(
            {"s" + std::to_string(c.state), "a" + std::to_string(c.chosen_action), "a" + std::to_string(c.rejected_action)});
    }

    out << "return " << to_bitstring(plan.predicate.target_return, fmt.return_bits) << " marked probability "
        << format_value(plan.marked_probability) << " iterations " << plan.iterations << '\n';
    for (const auto& e : entries) out << "witness " << e.id << ' ' << e.bits << ' ' << format_value(e.value) << '\n';
    if (!result.curve.empty()) {
        const auto& last = result.curve.back();
        out << "success analytic " << format_value(last.analytic) << " sampled " << format_value(last.sampled) << '\n';
    }
    for (const auto& [s, a] : policy.policy) out << "policy s" << s << " -> a" << a << '\n';
    for (const auto& c : policy.conflicts) {
        out << "conflict s" << c.state << ": a" << c.chosen_action << " kept over a" << c.rejected_action << '\n';
    }

    Writer w(m, out);
    w.table("marked", trajectory_table(entries, fmt));
    w.table("schedule", sched);
    w.table("success_curve", curve);
    w.distribution("distribution", result.sampled);
    w.table("policy", pol);
    w.table("conflicts", conflicts);
    return 0;
}

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const UnsatisfiableError*>(&e)) return 3;
    if (dynamic_cast<const CapacityError*>(&e)) return 2;
    return 1;
}

}  // namespace cli

inline int execute(const RunManifest& m, std::ostream& out, std::ostream& err) {
    try {
        cli::validate_manifest(m);
        if (m.command == "run") return cli::cmd_run(m, out);
        if (m.command == "enumerate") return cli::cmd_enumerate(m, out);
        if (m.command == "ingest") return cli::cmd_ingest(m, out, err);
        if (m.command == "compare") return cli::cmd_compare(m, out);
        if (m.command == "grover") return cli::cmd_grover(m, out);
        throw ValidationError("unknown command '" + m.command + "'");
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return cli::exit_code_for(e);
    }
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantum MDP trajectory simulation and search", "qmdp"};
    app.require_subcommand(1);
    RunManifest m;
    std::string format = "csv";
    std::optional<std::string> iterations;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--mdp", m.mdp_path, "MDP config (JSON); defaults to the built-in 4-state example");
        sub->add_option("--steps", m.steps, "Horizon T")->capture_default_str();
        sub->add_option("--corpus", m.corpus_path, "Trajectory corpus CSV (id,bits) for id lookup");
        sub->add_option("--out", m.out, "Output directory");
        sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    };

    auto* run = app.add_subcommand("run", "Simulate the trajectory circuit");
    common(run);
    run->add_option("--mode", m.mode, "Circuit form")->check(CLI::IsMember({"dynamic", "static"}))->capture_default_str();
    auto* shots_opt = run->add_option("--shots", m.shots, "Sample this many shots");
    run->add_option("--seed", m.seed, "Sampling seed")->capture_default_str();
    run->add_flag("--analytic", m.analytic, "Exact distribution (default when --shots is absent)")->excludes(shots_opt);

    auto* grover = app.add_subcommand("grover", "Amplify trajectories with a target return");
    common(grover);
    grover->add_option("--return", m.return_bits, "Target return bits; omitted = search for the maximum");
    grover->add_option("--start", m.start_bits, "Required start state bits");
    grover->add_option("--end", m.end_bits, "Required final state bits");
    grover->add_option("--iterations", iterations, "Grover iterations (default: optimal)");
    grover->add_option("--shots", m.shots, "Shots per iteration");
    grover->add_option("--seed", m.seed, "Sampling seed")->capture_default_str();

    auto* enumerate = app.add_subcommand("enumerate", "Classical trajectory enumeration");
    common(enumerate);
    enumerate->add_option("--start", m.start_bits, "Start state bits (default: uniform)");

    auto* ingest = app.add_subcommand("ingest", "Check a trajectory corpus and extract its support");
    common(ingest);

    auto* compare = app.add_subcommand("compare", "TVD between two distribution files");
    compare->add_option("files", m.inputs, "Distribution A and B")->expected(2)->required();
    compare->add_option("--out", m.out, "Output directory");
    compare->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }
    m.command = app.get_subcommands().front()->get_name();
    m.format = format == "json" ? OutputFormat::Json : OutputFormat::Csv;
    if (iterations && *iterations != "auto") {
        try {
            std::size_t used = 0;
            const long long k = std::stoll(*iterations, &used);
            if (used != iterations->size() || k < 0) throw std::invalid_argument("");
            m.iterations = static_cast<std::size_t>(k);
        } catch (const std::exception&) {
            err << "error: --iterations must be a non-negative integer or 'auto'\n";
            return 1;
        }
    }
    return execute(m, out, err);
}

}  // namespace qmdp
