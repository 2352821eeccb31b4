#include "slosim/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slosim::par {

namespace {
std::atomic<bool> g_force_serial{false};
}

bool openmp_available() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void force_serial(bool on) { g_force_serial.store(on, std::memory_order_relaxed); }

bool serial_forced() { return g_force_serial.load(std::memory_order_relaxed); }

namespace detail {

void run_chunks(std::size_t n_chunks, void* ctx, void (*body)(void*, std::size_t)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < static_cast<long long>(n_chunks); ++c) {
    body(ctx, static_cast<std::size_t>(c));
  }
#else
  for (std::size_t c = 0; c < n_chunks; ++c) body(ctx, c);
#endif
}

}  // namespace detail

}  // namespace slosim::par
