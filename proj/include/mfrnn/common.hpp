#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mfrnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

static_assert(std::endian::native == std::endian::little,
              "snapshot container is little-endian");

// Invalid dimensions, malformed configs, bad file schemas.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input point outside the map's domain.
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller violated an operation contract (unlabeled batch, misaligned grids, ...).
struct PreconditionError : std::runtime_error {
  explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Combinatorial cost guard on reference-oracle routines.
struct GuardError : std::runtime_error {
  explicit GuardError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value encountered; carries context (step / layer index, snapshot path).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg, std::string snapshot = {})
      : std::runtime_error(msg), last_snapshot(std::move(snapshot)) {}
  std::string last_snapshot;
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shortest round-trip decimal form; identical bytes for identical doubles,
// so CSV/JSON outputs are byte-stable across runs.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

// Runs fn(0..count-1) on up to nthreads workers. Work items are claimed from a
// shared counter, so execution order varies, but callers write into per-index
// slots and reduce in index order, keeping results independent of nthreads.
inline void parallel_for_indexed(int count, int nthreads,
                                 const std::function<void(int)>& fn) {
  if (count <= 0) return;
  if (nthreads <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  const int nw = std::min(nthreads, count);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(nw - 1));
  for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace mfrnn
