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

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "qmdp/errors.hpp"

namespace qmdp {

// Classical records are packed into an integer: classical bit c is bit c of
// the value. Text forms print the most-significant bit first.
inline std::string to_bitstring(std::uint64_t bits, std::size_t width) {
    std::string s(width, '0');
    for (std::size_t i = 0; i < width; ++i) {
        if ((bits >> i) & 1u) s[width - 1 - i] = '1';
    }
    return s;
}

inline std::uint64_t parse_bitstring(std::string_view text) {
    if (text.empty() || text.size() > 64) {
        throw ValidationError("bit string must have 1..64 characters, got " +
                              std::to_string(text.size()));
    }
    std::uint64_t v = 0;
    for (char c : text) {
        if (c != '0' && c != '1') {
            throw ValidationError("bit string contains non-binary character: " + std::string(text));
        }
        v = (v << 1) | static_cast<std::uint64_t>(c - '0');
    }
    return v;
}

// Either exact probabilities (total_shots empty) or sampled counts.
struct OutcomeDistribution {
    std::size_t num_bits = 0;
    std::map<std::uint64_t, double> values;
    std::optional<std::uint64_t> total_shots;

    bool analytic() const noexcept { return !total_shots.has_value(); }

    double total() const {
        double t = 0.0;
        for (const auto& [k, v] : values) t += v;
        return t;
    }

    double probability(std::uint64_t bits) const {
        auto it = values.find(bits);
        if (it == values.end()) return 0.0;
        return total_shots ? it->second / static_cast<double>(*total_shots) : it->second;
    }

    OutcomeDistribution normalized() const {
        OutcomeDistribution out{num_bits, {}, std::nullopt};
        const double t = total();
        if (t <= 0.0) throw ValidationError("distribution has no mass");
        for (const auto& [k, v] : values) out.values[k] = v / t;
        return out;
    }
};

inline double total_variation_distance(const OutcomeDistribution& a, const OutcomeDistribution& b) {
    if (a.num_bits != b.num_bits) {
        throw ValidationError("distributions have different record widths (" +
                              std::to_string(a.num_bits) + " vs " + std::to_string(b.num_bits) + ")");
    }
    const auto pa = a.normalized();
    const auto pb = b.normalized();
    double acc = 0.0;
    for (const auto& [k, v] : pa.values) acc += std::abs(v - pb.probability(k));
    for (const auto& [k, v] : pb.values) {
        if (!pa.values.contains(k)) acc += v;
    }
    return 0.5 * acc;
}

inline std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string distribution_to_csv(const OutcomeDistribution& d) {
    std::ostringstream os;
    os << "bits,value\n";
    for (const auto& [k, v] : d.values) os << to_bitstring(k, d.num_bits) << ',' << format_value(v) << '\n';
    return os.str();
}

inline nlohmann::json distribution_to_json(const OutcomeDistribution& d) {
    nlohmann::json j;
    j["num_bits"] = d.num_bits;
    j["total_shots"] = d.total_shots ? nlohmann::json(*d.total_shots) : nlohmann::json(nullptr);
    auto& entries = j["entries"] = nlohmann::json::array();
    for (const auto& [k, v] : d.values) entries.push_back({{"bits", to_bitstring(k, d.num_bits)}, {"value", v}});
    return j;
}

// Reads `bits,value` CSV. Whether the values are counts or probabilities is
// not recorded in the file; callers compare normalized forms.
inline OutcomeDistribution distribution_from_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("distribution file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "bits,value") throw ValidationError("distribution header must be 'bits,value', got '" + line + "'");
    OutcomeDistribution d;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ValidationError("line " + std::to_string(lineno) + ": expected 'bits,value'");
        }
        const std::string bits = line.substr(0, comma);
        if (d.values.empty()) {
            d.num_bits = bits.size();
        } else if (bits.size() != d.num_bits) {
            throw ValidationError("line " + std::to_string(lineno) + ": inconsistent record width");
        }
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(line.substr(comma + 1), &used);
        } catch (const std::exception&) {
            throw ValidationError("line " + std::to_string(lineno) + ": value is not a number");
        }
        if (v < 0.0) throw ValidationError("line " + std::to_string(lineno) + ": negative value");
        d.values[parse_bitstring(bits)] += v;
    }
    if (d.values.empty()) throw ValidationError("distribution file has no entries");
    return d;
}

// Accepts the object written by distribution_to_json or a bare array of
// {"bits", "value"} objects.
inline OutcomeDistribution distribution_from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("distribution JSON does not parse: ") + e.what());
    }
    OutcomeDistribution d;
    const nlohmann::json* entries = &doc;
    if (doc.is_object()) {
        if (!doc.contains("entries")) throw ValidationError("distribution JSON lacks 'entries'");
        entries = &doc["entries"];
        if (doc.contains("total_shots") && doc["total_shots"].is_number_unsigned()) {
            d.total_shots = doc["total_shots"].get<std::uint64_t>();
        }
    }
    if (!entries->is_array()) throw ValidationError("distribution entries must be an array");
    std::size_t index = 0;
    for (const auto& e : *entries) {
        const std::string where = "entry " + std::to_string(index++);
        if (!e.is_object() || !e.contains("bits") || !e["bits"].is_string() || !e.contains("value") ||
            !e["value"].is_number()) {
            throw ValidationError(where + ": expected {\"bits\": string, \"value\": number}");
        }
        const auto bits = e["bits"].get<std::string>();
        if (d.values.empty()) {
            d.num_bits = bits.size();
        } else if (bits.size() != d.num_bits) {
            throw ValidationError(where + ": inconsistent record width");
        }
        const double v = e["value"].get<double>();
        if (v < 0.0) throw ValidationError(where + ": negative value");
        d.values[parse_bitstring(bits)] += v;
    }
    if (d.values.empty()) throw ValidationError("distribution file has no entries");
    return d;
}

inline OutcomeDistribution distribution_from_text(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && (text[first] == '{' || text[first] == '[')) {
        return distribution_from_json(text);
    }
    return distribution_from_csv(text);
}

}  // namespace qmdp
