#pragma once

// Snapshot file: all integers and reals little-endian.
//
//   offset  size  field
//   0       6     magic "TOYNS1"
//   6       4     version (u32) = 1
//   10      12    n_per_axis (3 x u32)
//   22      8     spacing h (f64)
//   30      4     boundary_kind (u32: 0 periodic, 1 dirichlet_zero, 2 half_space_odd)
//   34      8     time (f64)
//   42      24    origin (3 x f64)
//   66      ...   u1 for every node, then u2, then u3 (f64, axis 0 fastest)

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "toyns/field.hpp"

namespace toyns {

inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 66;

namespace detail {

inline void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) b.push_back(static_cast<unsigned char>((v >> s) & 0xffu));
}
inline void put_f64(std::vector<unsigned char>& b, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int s = 0; s < 64; s += 8) b.push_back(static_cast<unsigned char>((v >> s) & 0xffu));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int s = 0, i = 0; s < 32; s += 8, ++i) v |= static_cast<std::uint32_t>(p[i]) << s;
  return v;
}
inline double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int s = 0, i = 0; s < 64; s += 8, ++i) v |= static_cast<std::uint64_t>(p[i]) << s;
  return std::bit_cast<double>(v);
}

inline std::uint32_t kind_code(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::periodic: return 0;
    case BoundaryKind::dirichlet_zero: return 1;
    case BoundaryKind::half_space_odd: return 2;
  }
  return 0;
}

}  // namespace detail

inline std::vector<unsigned char> encode_snapshot(const VelocityField& u) {
  std::vector<unsigned char> b;
  b.reserve(kSnapshotHeaderBytes + 24 * u.size());
  for (char c : std::string("TOYNS1")) b.push_back(static_cast<unsigned char>(c));
  detail::put_u32(b, kSnapshotVersion);
  for (int n : u.grid.n) detail::put_u32(b, static_cast<std::uint32_t>(n));
  detail::put_f64(b, u.grid.h);
  detail::put_u32(b, detail::kind_code(u.grid.kind));
  detail::put_f64(b, u.time);
  for (double o : u.grid.origin) detail::put_f64(b, o);
  for (const auto& c : u.comp)
    for (double v : c) detail::put_f64(b, v);
  return b;
}

inline VelocityField decode_snapshot(const std::vector<unsigned char>& b) {
  if (b.size() < kSnapshotHeaderBytes || std::memcmp(b.data(), "TOYNS1", 6) != 0)
    throw InvalidArgument("not a TOYNS1 snapshot");
  const unsigned char* p = b.data();
  if (detail::get_u32(p + 6) != kSnapshotVersion) throw InvalidArgument("unsupported snapshot version");
  std::array<int, 3> n{};
  for (int a = 0; a < 3; ++a) n[static_cast<std::size_t>(a)] = static_cast<int>(detail::get_u32(p + 10 + 4 * a));
  const double h = detail::get_f64(p + 22);
  const std::uint32_t kc = detail::get_u32(p + 30);
  if (kc > 2) throw InvalidArgument("snapshot: bad boundary_kind code");
  const BoundaryKind kind = kc == 0 ? BoundaryKind::periodic
                                    : (kc == 1 ? BoundaryKind::dirichlet_zero : BoundaryKind::half_space_odd);
  const double t = detail::get_f64(p + 34);
  Vec3 origin{};
  for (int a = 0; a < 3; ++a) origin[static_cast<std::size_t>(a)] = detail::get_f64(p + 42 + 8 * a);
  Grid3 g(n, h, origin, kind);
  if (b.size() != kSnapshotHeaderBytes + 24 * g.size()) throw InvalidArgument("snapshot: truncated payload");
  VelocityField u(g, t);
  const unsigned char* q = p + kSnapshotHeaderBytes;
  for (auto& c : u.comp)
    for (double& v : c) {
      v = detail::get_f64(q);
      q += 8;
    }
  require_finite(u, "decode_snapshot");
  return u;
}

inline void write_snapshot(const std::filesystem::path& path, const VelocityField& u) {
  const auto bytes = encode_snapshot(u);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline VelocityField read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open snapshot " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

/// Fixed 17-significant-digit rendering used by every CSV writer.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_field_csv(std::ostream& os, const VelocityField& u) {
  os << "x,y,z,u1,u2,u3\n";
  for (std::size_t p = 0; p < u.size(); ++p) {
    const Vec3 x = u.grid.position(p);
    os << fmt17(x[0]) << ',' << fmt17(x[1]) << ',' << fmt17(x[2]) << ',' << fmt17(u.comp[0][p]) << ','
       << fmt17(u.comp[1][p]) << ',' << fmt17(u.comp[2][p]) << '\n';
  }
}

}  // namespace toyns
