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

#include <array>
#include <cstdint>

namespace qmdp {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Each output
// block is a pure function of (key, counter).
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Block generate(Block counter, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            counter = single_round(counter, key);
            key[0] += kWeylA;
            key[1] += kWeylB;
        }
        return counter;
    }

private:
    static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    static constexpr std::uint32_t kWeylB = 0xBB67AE85u;
    static constexpr std::uint32_t kMulA = 0xD2511F53u;
    static constexpr std::uint32_t kMulB = 0xCD9E8D57u;

    static constexpr Block single_round(const Block& c, const Key& k) noexcept {
        const std::uint64_t p0 = std::uint64_t{kMulA} * c[0];
        const std::uint64_t p1 = std::uint64_t{kMulB} * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

// Uniform double in [0, 1) keyed by (seed, stream, ordinal). In shot
// execution `stream` is the shot index and `ordinal` counts the random
// draws consumed within that shot.
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t ordinal) noexcept {
    const Philox4x32::Block counter{
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
        static_cast<std::uint32_t>(ordinal), static_cast<std::uint32_t>(ordinal >> 32)};
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed),
                              static_cast<std::uint32_t>(seed >> 32)};
    const auto out = Philox4x32::generate(counter, key);
    const std::uint64_t bits = (std::uint64_t{out[0]} << 32) | out[1];
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace qmdp
