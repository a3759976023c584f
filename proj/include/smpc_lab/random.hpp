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

#pragma once

#include <cstdint>

namespace smpc_lab {

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based standard normal stream. Variate `step` of path `path_id`
/// depends only on (seed, path_id, step): two SplitMix64 words feed a
/// Box-Muller transform (cosine branch). Streams can be read in any order.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path_id);

    double normal(std::uint64_t step) const;
    /// Uniform in (0, 1] from the first word of `step`.
    double uniform(std::uint64_t step) const;

private:
    std::uint64_t key_;
};

} // namespace smpc_lab
