#pragma once

// Deterministic parallel kernels. Every reduction runs over a fixed number of
// index chunks; per-chunk partials are combined serially in ascending chunk
// order, so results are bit-identical for any thread count and identical to
// the serial reference. Hot numeric loops (likelihood sums, K-S scans, Gram
// matrix assembly, split searches) are built on these primitives.

#include <cstddef>
#include <utility>
#include <vector>

namespace slosim::par {

// Fixed chunk count, independent of hardware.
inline constexpr std::size_t kChunks = 64;

bool openmp_available();
int max_threads();

// Force the serial reference path at runtime (tests, benchmarks).
void force_serial(bool on);
bool serial_forced();

struct ScopedSerial {
  explicit ScopedSerial(bool on = true) : prev_(serial_forced()) { force_serial(on); }
  ~ScopedSerial() { force_serial(prev_); }
  ScopedSerial(const ScopedSerial&) = delete;
  ScopedSerial& operator=(const ScopedSerial&) = delete;

 private:
  bool prev_;
};

inline std::pair<std::size_t, std::size_t> chunk_bounds(std::size_t chunk, std::size_t n) {
  return {n * chunk / kChunks, n * (chunk + 1) / kChunks};
}

// State must be copyable; accum(state, i) is called with i ascending inside a
// chunk, combine(total, part) left-folds partials in ascending chunk order.
template <class State, class Init, class Accum, class Combine>
State chunked_reduce_serial(std::size_t n, Init init, Accum accum, Combine combine) {
  State total = init();
  for (std::size_t c = 0; c < kChunks; ++c) {
    auto [lo, hi] = chunk_bounds(c, n);
    State part = init();
    for (std::size_t i = lo; i < hi; ++i) accum(part, i);
    combine(total, part);
  }
  return total;
}

namespace detail {
void run_chunks(std::size_t n_chunks, void* ctx, void (*body)(void*, std::size_t));
}

template <class State, class Init, class Accum, class Combine>
State chunked_reduce(std::size_t n, Init init, Accum accum, Combine combine) {
  if (serial_forced() || !openmp_available() || n < 2048) {
    return chunked_reduce_serial<State>(n, init, accum, combine);
  }
  std::vector<State> parts(kChunks, init());
  struct Ctx {
    std::size_t n;
    std::vector<State>* parts;
    Init* init;
    Accum* accum;
  } ctx{n, &parts, &init, &accum};
  detail::run_chunks(kChunks, &ctx, [](void* p, std::size_t c) {
    auto& x = *static_cast<Ctx*>(p);
    auto [lo, hi] = chunk_bounds(c, x.n);
    State part = (*x.init)();
    for (std::size_t i = lo; i < hi; ++i) (*x.accum)(part, i);
    (*x.parts)[c] = std::move(part);
  });
  State total = init();
  for (std::size_t c = 0; c < kChunks; ++c) combine(total, parts[c]);
  return total;
}

// Plain parallel loop for independent per-index work (slot writes).
template <class F>
void for_each_index(std::size_t n, F&& f) {
  if (serial_forced() || !openmp_available()) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  struct Ctx {
    F* f;
  } ctx{&f};
  detail::run_chunks(n, &ctx, [](void* p, std::size_t i) { (*static_cast<Ctx*>(p)->f)(i); });
}

template <class F>
double sum_indexed(std::size_t n, F&& f) {
  return chunked_reduce<double>(
      n, [] { return 0.0; }, [&](double& s, std::size_t i) { s += f(i); },
      [](double& a, double b) { a += b; });
}

template <class F>
double sum_indexed_serial(std::size_t n, F&& f) {
  return chunked_reduce_serial<double>(
      n, [] { return 0.0; }, [&](double& s, std::size_t i) { s += f(i); },
      [](double& a, double b) { a += b; });
}

// First index attaining the maximum of f over [0, n); n must be > 0.
template <class F>
std::pair<std::size_t, double> argmax_indexed(std::size_t n, F&& f) {
  struct Best {
    std::size_t idx;
    double val;
    bool valid;
  };
  Best b = chunked_reduce<Best>(
      n, [] { return Best{0, 0.0, false}; },
      [&](Best& s, std::size_t i) {
        double v = f(i);
        if (!s.valid || v > s.val) s = {i, v, true};
      },
      [](Best& a, const Best& p) {
        if (p.valid && (!a.valid || p.val > a.val)) a = p;
      });
  return {b.idx, b.val};
}

template <class F>
std::pair<std::size_t, double> argmin_indexed(std::size_t n, F&& f) {
  auto [i, v] = argmax_indexed(n, [&](std::size_t j) { return -f(j); });
  return {i, -v};
}

}  // namespace slosim::par
