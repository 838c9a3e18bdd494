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

// Report tables shared by the command-line front end: trajectory listings,
// return groups, state visitation and atomic file output.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmdp/distribution.hpp"
#include "qmdp/errors.hpp"
#include "qmdp/trajectory.hpp"

namespace qmdp {

enum class OutputFormat { Csv, Json };

// Header plus rows of scalar cells; renders to CSV or to a JSON array of
// objects keyed by the header.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<nlohmann::json>> rows;

    std::string to_csv() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
        os << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                os << (i ? "," : "");
                const auto& cell = row[i];
                if (cell.is_string()) {
                    os << cell.get<std::string>();
                } else if (cell.is_number_float()) {
                    os << format_value(cell.get<double>());
                } else {
                    os << cell.dump();
                }
            }
            os << '\n';
        }
        return os.str();
    }

    std::string to_json() const {
        auto arr = nlohmann::json::array();
        for (const auto& row : rows) {
            nlohmann::json obj = nlohmann::json::object();
            for (std::size_t i = 0; i < row.size() && i < header.size(); ++i) obj[header[i]] = row[i];
            arr.push_back(std::move(obj));
        }
        return arr.dump(2) + "\n";
    }

    std::string render(OutputFormat f) const { return f == OutputFormat::Csv ? to_csv() : to_json(); }
};

inline std::string extension(OutputFormat f) { return f == OutputFormat::Csv ? ".csv" : ".json"; }

// Write-temp-then-rename so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct ReportEntry {
    std::string id;
    std::string bits;
    TrajectoryRecord record;
    double value = 0.0;  // probability, or sampled frequency
};

// Every record of a distribution decoded; ids come from the corpus when the
// string is listed there and default to the bit string otherwise.
inline std::vector<ReportEntry> decode_distribution(const OutcomeDistribution& dist, const RecordFormat& fmt,
                                                    const Corpus* corpus = nullptr) {
    if (dist.num_bits != fmt.width()) {
        throw ValidationError("distribution width " + std::to_string(dist.num_bits) + " does not match record width " +
                              std::to_string(fmt.width()));
    }
    std::map<std::string, std::string> ids;
    if (corpus) {
        for (const auto& e : corpus->entries) ids[e.bits] = e.id;
    }
    std::vector<ReportEntry> out;
    for (const auto& [bits, v] : dist.values) {
        ReportEntry e;
        e.bits = to_bitstring(bits, fmt.width());
        auto it = ids.find(e.bits);
        e.id = it == ids.end() ? e.bits : it->second;
        e.record = decode_trajectory(bits, fmt);
        e.value = dist.probability(bits);
        e.record.probability = e.value;
        if (dist.total_shots) e.record.count = static_cast<std::uint64_t>(v);
        out.push_back(std::move(e));
    }
    return out;
}

struct ReturnGroupReport {
    // Descending return order.
    std::map<int, std::vector<ReportEntry>, std::greater<>> groups;

    double total() const {
        double t = 0.0;
        for (const auto& [g, members] : groups) {
            for (const auto& m : members) t += m.value;
        }
        return t;
    }
};

inline ReturnGroupReport group_by_return(const std::vector<ReportEntry>& entries) {
    ReturnGroupReport rep;
    for (const auto& e : entries) rep.groups[e.record.return_value].push_back(e);
    return rep;
}

inline Table trajectory_table(const std::vector<ReportEntry>& entries, const RecordFormat& fmt) {
    Table t;
    t.header = {"id", "bits", "return"};
    for (std::size_t s = 0; s < fmt.steps; ++s) t.header.push_back("step" + std::to_string(s));
    t.header.push_back("probability");
    for (const auto& e : entries) {
        std::vector<nlohmann::json> row{e.id, e.bits, to_bitstring(static_cast<std::uint64_t>(e.record.return_value), fmt.return_bits)};
        for (const auto& st : e.record.steps) row.emplace_back(format_step(st));
        row.emplace_back(e.value);
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline Table group_table(const ReturnGroupReport& rep, const RecordFormat& fmt) {
    Table t;
    t.header = {"return", "id", "bits", "probability"};
    for (const auto& [g, members] : rep.groups) {
        for (const auto& e : members) {
            t.rows.push_back({to_bitstring(static_cast<std::uint64_t>(g), fmt.return_bits), e.id, e.bits, e.value});
        }
    }
    return t;
}

// Trajectory x time step -> visited state, ordered by ascending return and
// then bit string (one column per trajectory when plotted).
inline Table visitation_table(const std::vector<ReportEntry>& entries, const RecordFormat& fmt) {
    Table t;
    t.header = {"id", "bits", "return"};
    for (std::size_t s = 0; s < fmt.steps; ++s) t.header.push_back("t" + std::to_string(s));
    std::vector<const ReportEntry*> order;
    for (const auto& e : entries) order.push_back(&e);
    std::stable_sort(order.begin(), order.end(), [](const ReportEntry* a, const ReportEntry* b) {
        if (a->record.return_value != b->record.return_value) return a->record.return_value < b->record.return_value;
        return a->bits < b->bits;
    });
    for (const auto* e : order) {
        std::vector<nlohmann::json> row{e->id, e->bits, to_bitstring(static_cast<std::uint64_t>(e->record.return_value), fmt.return_bits)};
        for (const auto& st : e->record.steps) row.emplace_back("s" + std::to_string(st.state));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline Table distribution_table(const OutcomeDistribution& d) {
    Table t;
    t.header = {"bits", "value"};
    for (const auto& [k, v] : d.values) t.rows.push_back({to_bitstring(k, d.num_bits), v});
    return t;
}

}  // namespace qmdp
