#pragma once

// Trajectory trace files:
//   "SHTR" | version u8 | header_len u32 | header (JSON, UTF-8)
//   | n_steps u32 | n_steps x (record_len u32 | record_len bytes of f64)
// Each step record holds t, behaviour kind, tp id, shepherd x/y, then x/y per sheep.
// All integers and floats are little-endian.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "shepherd/metrics.hpp"

namespace shepherd {

inline constexpr std::array<char, 4> kTraceMagic{'S', 'H', 'T', 'R'};
inline constexpr std::uint8_t kTraceVersion = 1;

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Bytes = std::vector<std::uint8_t>;

namespace detail {

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(Bytes& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Reader {
  const Bytes& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (buf.size() - pos < n) throw TraceError("trace truncated");
  }
  std::uint8_t u8() {
    need(1);
    return buf[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
};

}  // namespace detail

inline Bytes encode_step(const TrialStep& s) {
  Bytes out;
  out.reserve(8 * (5 + 2 * s.sheep.size()));
  detail::put_f64(out, s.t);
  detail::put_f64(out, static_cast<double>(static_cast<int>(s.kind)));
  detail::put_f64(out, s.tp_id);
  detail::put_f64(out, s.shepherd.x);
  detail::put_f64(out, s.shepherd.y);
  for (Vec2 p : s.sheep) {
    detail::put_f64(out, p.x);
    detail::put_f64(out, p.y);
  }
  return out;
}

struct Trace {
  nlohmann::json header;
  std::vector<Bytes> steps;  // encoded step records
};

inline Trace make_trace(nlohmann::json header, const TrialRecord& rec) {
  Trace t{std::move(header), {}};
  t.steps.reserve(rec.steps.size());
  for (const auto& s : rec.steps) t.steps.push_back(encode_step(s));
  return t;
}

inline Bytes serialise(const Trace& t) {
  Bytes out(kTraceMagic.begin(), kTraceMagic.end());
  out.push_back(kTraceVersion);
  const std::string header = t.header.dump();
  detail::put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  detail::put_u32(out, static_cast<std::uint32_t>(t.steps.size()));
  for (const auto& s : t.steps) {
    detail::put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

inline Trace parse_trace(const Bytes& buf) {
  detail::Reader r{buf};
  r.need(4);
  if (std::memcmp(buf.data(), kTraceMagic.data(), 4) != 0) throw TraceError("not a trace file (bad magic)");
  r.pos = 4;
  const auto version = r.u8();
  if (version != kTraceVersion)
    throw TraceError("trace schema version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(kTraceVersion) + ")");
  Trace t;
  const auto hlen = r.u32();
  r.need(hlen);
  try {
    t.header = nlohmann::json::parse(buf.begin() + static_cast<std::ptrdiff_t>(r.pos),
                                     buf.begin() + static_cast<std::ptrdiff_t>(r.pos + hlen));
  } catch (const nlohmann::json::exception& e) {
    throw TraceError(std::string("trace header is not valid JSON: ") + e.what());
  }
  r.pos += hlen;
  const auto n = r.u32();
  t.steps.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto len = r.u32();
    r.need(len);
    t.steps.emplace_back(buf.begin() + static_cast<std::ptrdiff_t>(r.pos),
                         buf.begin() + static_cast<std::ptrdiff_t>(r.pos + len));
    r.pos += len;
  }
  if (r.pos != buf.size()) throw TraceError("trailing bytes after last step record");
  return t;
}

/// Decodes one step record (inverse of encode_step).
inline TrialStep decode_step(const Bytes& rec) {
  if (rec.size() < 40 || (rec.size() - 40) % 16 != 0) throw TraceError("malformed step record");
  detail::Reader r{rec};
  TrialStep s;
  s.t = static_cast<int>(r.f64());
  s.kind = static_cast<BehaviourKind>(static_cast<int>(r.f64()));
  s.tp_id = static_cast<int>(r.f64());
  s.shepherd.x = r.f64();
  s.shepherd.y = r.f64();
  while (r.pos < rec.size()) {
    const double x = r.f64();
    s.sheep.push_back({x, r.f64()});
  }
  return s;
}

/// Index of the first step whose encoding differs, or nullopt when both are identical.
inline std::optional<std::size_t> first_divergence(const std::vector<Bytes>& a, const std::vector<Bytes>& b) {
  const auto n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i)
    if (a[i] != b[i]) return i;
  if (a.size() != b.size()) return n;
  return std::nullopt;
}

inline Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const Bytes& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("short write to " + path);
}

}  // namespace shepherd
