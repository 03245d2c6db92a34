// Copyright 2026 The p2r Authors
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

#ifndef P2R_PARALLEL_HPP_
#define P2R_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace p2r {

// Global worker count used by parallel_for. Set once from the CLI
// (--threads); defaults to 1. Thread count never affects results: work
// items are independent and write to disjoint, preallocated slots.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). With thread_count() == 1 this is a plain
// loop. Otherwise items are statically partitioned into contiguous blocks,
// one per worker. fn must not throw across threads without catching; this
// wrapper rethrows the first exception (by item index) after joining.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace p2r

#endif  // P2R_PARALLEL_HPP_
