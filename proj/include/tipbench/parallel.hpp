/*
 * Copyright 2026 The tipbench Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TIPBENCH_PARALLEL_HPP_
#define TIPBENCH_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace tipbench {

// Runs fn(i) for i in [0, n) on up to `threads` workers (<= 0 means the
// hardware concurrency). Each index must write only its own output slot, so
// results do not depend on scheduling. If any call throws, the exception of
// the lowest failing index is rethrown after all workers stop.
void ParallelFor(size_t n, int threads, const std::function<void(size_t)>& fn);

int ResolveThreads(int threads);

}  // namespace tipbench

#endif  // TIPBENCH_PARALLEL_HPP_
