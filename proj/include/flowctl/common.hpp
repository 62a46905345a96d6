#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace flowctl {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Error taxonomy. Everything derives from Error so callers can catch broadly;
// the CLI maps the leaf types onto its exit-code contract.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : Error { using Error::Error; };          // out-of-range time, bad radicand
struct ScheduleError : Error { using Error::Error; };        // invalid scheduler construction
struct GridMismatch : Error { using Error::Error; };         // incompatible grids/lengths
struct DimensionMismatch : Error { using Error::Error; };    // incompatible vector dims
struct CostError : Error { using Error::Error; };            // cost/state wiring problems
struct ConfigError : Error { using Error::Error; };          // bad run configuration
struct TrainingDiverged : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };       // NaN/Inf during integration
struct ArtifactError : Error { using Error::Error; };        // missing checkpoint or run dir
struct IntegrityError : Error { using Error::Error; };       // frozen-base checksum mismatch
struct KeyMismatch : Error { using Error::Error; };          // report key sets differ
struct DivisionByZero : Error { using Error::Error; };
struct UnknownCandidate : Error { using Error::Error; };
struct NoMatches : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Small dense-vector helpers. States are tiny (d <= 8), so plain loops.
// ---------------------------------------------------------------------------

inline void check_same_dim(const Vec& a, const Vec& b, const char* where) {
  if (a.size() != b.size())
    throw DimensionMismatch(std::string(where) + ": dims " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
}

inline double dot(const Vec& a, const Vec& b) {
  check_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double sq_norm(const Vec& a) { return dot(a, a); }

inline Vec scaled(const Vec& a, double c) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
  return r;
}

// y += c * x
inline void axpy(double c, const Vec& x, Vec& y) {
  check_same_dim(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline Vec sub(const Vec& a, const Vec& b) {
  check_same_dim(a, b, "sub");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec add(const Vec& a, const Vec& b) {
  check_same_dim(a, b, "add");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline bool all_finite(const Vec& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Counter-based RNG. Every draw is a pure function of (key, counter), so
// trajectory batches and training loops are reproducible regardless of
// thread schedule or call interleaving.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_key(mix_key(a, b), c);
}

// uniform in (0,1), never exactly 0 or 1
inline double uniform01(std::uint64_t key, std::uint64_t ctr) {
  const std::uint64_t bits = splitmix64(key ^ splitmix64(ctr + 0x632be59bd9b4e019ULL));
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// standard normal via Box-Muller; one value per counter
inline double normal01(std::uint64_t key, std::uint64_t ctr) {
  const double u1 = uniform01(key, 2 * ctr);
  const double u2 = uniform01(key, 2 * ctr + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

inline Vec normal_vec(std::uint64_t key, std::uint64_t ctr0, std::size_t n) {
  Vec r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = normal01(key, ctr0 + i);
  return r;
}

// ---------------------------------------------------------------------------
// FNV-1a over raw parameter bytes; used for the frozen-base guarantee and
// config hashing.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t checksum(const std::vector<double>& v) {
  return v.empty() ? fnv1a(nullptr, 0) : fnv1a(v.data(), v.size() * sizeof(double));
}

inline std::uint64_t checksum(const std::string& s) {
  return fnv1a(s.data(), s.size());
}

// ---------------------------------------------------------------------------
// Worker pool over fixed-size chunks. Results must be reduced per chunk, in
// chunk order, so the outcome is independent of the worker count.
// ---------------------------------------------------------------------------

inline int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* cap = std::getenv("FLOWCTL_THREADS")) {
    const int c = std::atoi(cap);
    if (c >= 1) n = std::min(n, c);
  }
  return n;
}

/// Runs fn(chunk_index, begin, end) over [0,n) split into chunks of `grain`.
/// Chunk boundaries depend only on (n, grain), never on the worker count.
template <class Fn>
inline void for_chunks(std::size_t n, std::size_t grain, Fn&& fn) {
  if (n == 0) return;
  const std::size_t chunks = (n + grain - 1) / grain;
  const int workers = std::min<int>(worker_count(), static_cast<int>(chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c, c * grain, std::min(n, (c + 1) * grain));
    return;
  }
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      fn(c, c * grain, std::min(n, (c + 1) * grain));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int i = 1; i < workers; ++i) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
}

}  // namespace flowctl
