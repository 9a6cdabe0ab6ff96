// Copyright 2026 the rola authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>

namespace rola {

// Worker count: ROLA_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t WorkerCount();

// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
// write results into slot i so output order never depends on scheduling.
// If any body throws, the exception from the lowest failing index is
// rethrown after all workers join.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rola
