#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "mfrnn/weights.hpp"

namespace mfrnn {

// "MFW1" weight snapshot container, little-endian:
//   magic "MFW1" | u16 version | u32 n, d, L | f64 R, t |
//   row-major f64 arrays W_xh (n*d), W_hh (n*n), W_hy (n)
// Round-trips bit-exactly.

namespace detail {

constexpr std::uint16_t kSnapshotVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("snapshot: truncated file");
  return v;
}

inline void write_row_major(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) write_pod<double>(os, m(i, j));
}

inline void read_row_major(std::istream& is, Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = read_pod<double>(is);
}

}  // namespace detail

inline void save_weights(const WeightSet& w, const std::string& path) {
  w.check_dims();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("snapshot: cannot open for write: " + path);
  os.write("MFW1", 4);
  detail::write_pod<std::uint16_t>(os, detail::kSnapshotVersion);
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(w.config.n));
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(w.config.d));
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(w.config.L));
  detail::write_pod<double>(os, w.config.R);
  detail::write_pod<double>(os, w.t);
  detail::write_row_major(os, w.w_xh);
  detail::write_row_major(os, w.w_hh);
  for (Eigen::Index j = 0; j < w.w_hy.size(); ++j)
    detail::write_pod<double>(os, w.w_hy(j));
  if (!os) throw IoError("snapshot: write failed: " + path);
}

inline WeightSet load_weights(const std::string& path,
                              Activation activation = Activation::Tanh) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("snapshot: cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "MFW1", 4) != 0)
    throw IoError("snapshot: bad magic in " + path);
  const auto version = detail::read_pod<std::uint16_t>(is);
  if (version != detail::kSnapshotVersion)
    throw IoError("snapshot: unsupported version in " + path);
  NetConfig cfg;
  cfg.n = static_cast<int>(detail::read_pod<std::uint32_t>(is));
  cfg.d = static_cast<int>(detail::read_pod<std::uint32_t>(is));
  cfg.L = static_cast<int>(detail::read_pod<std::uint32_t>(is));
  cfg.R = detail::read_pod<double>(is);
  cfg.activation = activation;
  cfg.validate();
  WeightSet w(cfg);
  w.t = detail::read_pod<double>(is);
  detail::read_row_major(is, w.w_xh);
  detail::read_row_major(is, w.w_hh);
  for (Eigen::Index j = 0; j < w.w_hy.size(); ++j)
    w.w_hy(j) = detail::read_pod<double>(is);
  return w;
}

}  // namespace mfrnn
