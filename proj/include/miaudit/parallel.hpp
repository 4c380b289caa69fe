// Copyright 2026 The miaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef MIAUDIT_PARALLEL_HPP_
#define MIAUDIT_PARALLEL_HPP_

#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace miaudit {

// Runs fn(i) for i in [0, n), split into contiguous blocks across `threads`
// workers.  Each index is processed exactly once and workers share no state,
// so results must be written to per-index slots; outputs are then identical
// for any thread count.  The first exception thrown by any worker is
// rethrown on the calling thread.
inline void parallel_for(int n, int threads,
                         const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (threads < 1) throw std::invalid_argument("parallel_for: threads must be >= 1");
  if (threads == 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::mutex error_mutex;
  std::exception_ptr first_error;
  const int base = n / workers;
  const int extra = n % workers;
  int begin = 0;
  for (int w = 0; w < workers; ++w) {
    const int size = base + (w < extra ? 1 : 0);
    const int end = begin + size;
    pool.emplace_back([&, begin, end] {
      try {
        for (int i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
    begin = end;
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace miaudit

#endif  // MIAUDIT_PARALLEL_HPP_
