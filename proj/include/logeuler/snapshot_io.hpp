#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "logeuler/field.hpp"

namespace logeuler::io {

// Binary field snapshot: a 16-byte header followed by N*N little-endian
// doubles in row-major order. A file may hold several records back to back.
//
//   offset 0  char[4] magic "LGEU"
//   offset 4  u16     version
//   offset 6  u16     N
//   offset 8  u32     payload kind
//   offset 12 u32     reserved (0)
enum class PayloadKind : std::uint32_t {
  kScalar = 1,
  kVelocity1 = 2,
  kVelocity2 = 3,
  kEnsembleX1 = 4,
  kEnsembleX2 = 5,
};

inline constexpr std::uint16_t kSnapshotVersion = 1;
inline constexpr char kMagic[4] = {'L', 'G', 'E', 'U'};

struct SnapshotRecord {
  PayloadKind kind;
  ScalarField field;
};

namespace detail {

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  U u;
  std::memcpy(&u, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
bool get_le(std::istream& in, T& v) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) return false;
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= U(b[i]) << (8 * i);
  std::memcpy(&v, &u, sizeof(T));
  return true;
}

}  // namespace detail

inline void write_record(std::ostream& out, const ScalarField& f, PayloadKind kind) {
  if (f.n() > 0xFFFF) throw UsageError("grid too large for the snapshot header");
  out.write(kMagic, 4);
  detail::put_le<std::uint16_t>(out, kSnapshotVersion);
  detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(f.n()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(kind));
  detail::put_le<std::uint32_t>(out, 0);
  for (double v : f.values()) detail::put_le<double>(out, v);
}

inline void write_snapshot(const std::string& path, const std::vector<SnapshotRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open snapshot file for writing: " + path);
  for (const auto& r : records) write_record(out, r.field, r.kind);
  if (!out) throw IoError("failed writing snapshot file: " + path);
}

inline void write_snapshot(const std::string& path, const ScalarField& f,
                           PayloadKind kind = PayloadKind::kScalar) {
  write_snapshot(path, {SnapshotRecord{kind, f}});
}

inline std::vector<SnapshotRecord> read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read snapshot file: " + path);
  std::vector<SnapshotRecord> out;
  while (true) {
    char magic[4];
    if (!in.read(magic, 4)) break;
    if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("bad snapshot magic in " + path);
    std::uint16_t version = 0, n = 0;
    std::uint32_t kind = 0, reserved = 0;
    if (!detail::get_le(in, version) || !detail::get_le(in, n) || !detail::get_le(in, kind) ||
        !detail::get_le(in, reserved)) {
      throw IoError("truncated snapshot header in " + path);
    }
    if (version != kSnapshotVersion) throw IoError("unsupported snapshot version in " + path);
    GridSpec grid(n);
    std::vector<double> values(grid.size());
    for (double& v : values) {
      if (!detail::get_le(in, v)) throw IoError("truncated snapshot payload in " + path);
    }
    out.push_back({static_cast<PayloadKind>(kind), ScalarField(grid, std::move(values))});
  }
  if (out.empty()) throw IoError("empty snapshot file: " + path);
  return out;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// Spectrum as CSV rows (k1, k2, Re, Im) over k in [-N/2, N/2)^2.
inline void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  out << "k1,k2,re,im\n";
  const int h = s.grid().half();
  for (int k1 = -h; k1 < h; ++k1) {
    for (int k2 = -h; k2 < h; ++k2) {
      const Complex c = s.coefficient(k1, k2);
      out << k1 << ',' << k2 << ',' << format_double(c.real()) << ',' << format_double(c.imag())
          << '\n';
    }
  }
}

}  // namespace logeuler::io
