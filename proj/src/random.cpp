/*
 Copyright 2026 The smpc_lab Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "smpc_lab/random.hpp"

#include <cmath>

namespace smpc_lab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kInv2Pow53 = 1.0 / 9007199254740992.0;

} // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t path_id)
    : key_(splitmix64(splitmix64(seed) ^ path_id)) {}

double NormalStream::uniform(std::uint64_t step) const {
    const std::uint64_t w = splitmix64(key_ ^ splitmix64(2 * step));
    return static_cast<double>((w >> 11) + 1) * kInv2Pow53;
}

double NormalStream::normal(std::uint64_t step) const {
    const double u1 = uniform(step);
    const std::uint64_t w2 = splitmix64(key_ ^ splitmix64(2 * step + 1));
    const double u2 = static_cast<double>(w2 >> 11) * kInv2Pow53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

} // namespace smpc_lab
