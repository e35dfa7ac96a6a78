#pragma once

#include <functional>

namespace spiralis {

// Worker count used by parallel_for; 0 means std::thread::hardware_concurrency().
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(i) for i in [0, n) on up to thread_count() threads.  Iterations must be
// independent; the first exception thrown by any iteration is rethrown.
void parallel_for(int n, const std::function<void(int)>& body);

} // namespace spiralis
