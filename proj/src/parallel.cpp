#include "charflow/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace charflow {

namespace {
std::atomic<unsigned> g_threads{0};
}

void set_thread_count(unsigned n) noexcept { g_threads.store(n); }

unsigned thread_count() noexcept {
    const unsigned n = g_threads.load();
    if (n > 0) return n;
    if (const char* env = std::getenv("CHARFLOW_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

}  // namespace charflow
