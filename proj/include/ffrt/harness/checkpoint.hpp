#pragma once

// "FFRT" checkpoint, little-endian:
//   magic[4] u32 version
//   u32 len, config text
//   u32 tensor count; per tensor: u32 len, name, i32 n c h w, u64 offset
//   u64 payload length, f64 payload[]                 parameters
//   u64 step, f64 lr b1 b2 eps wd, f64 m[], f64 v[]   optimizer
//   u64 step, u32 len, rng text, u64 k, u64 order[k], u64 cursor, u64 epoch
//   u64 FNV-1a of every preceding byte

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ffrt/data/pnm.hpp"
#include "ffrt/numerics/adamw.hpp"
#include "ffrt/numerics/params.hpp"

namespace ffrt {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct LoopState {
  std::uint64_t step = 0;
  std::string rng;  // textual mt19937_64 state
  std::vector<std::uint64_t> order;
  std::uint64_t cursor = 0;
  std::uint64_t epoch = 0;
};

struct Checkpoint {
  std::string config;
  std::vector<NamedTensor> params;
  AdamWState optimizer;
  LoopState loop;
};

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out_.append(b, sizeof(T));
  }
  void str(std::string_view s) {
    put(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void doubles(const std::vector<double>& v) { out_.append(reinterpret_cast<const char*>(v.data()), v.size() * 8); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view b) : b_(b) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(b_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void doubles(std::vector<double>& v, std::size_t n) {
    need(n * 8);
    v.resize(n);
    std::memcpy(v.data(), b_.data() + pos_, n * 8);
    pos_ += n * 8;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n)
      fail(ErrorKind::parse, "checkpoint truncated at byte ", pos_, ": need ", n, " more bytes");
  }
  std::string_view b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ck) {
  detail::ByteWriter w;
  w.bytes().append("FFRT", 4);
  w.put(kCheckpointVersion);
  w.str(ck.config);
  w.put(static_cast<std::uint32_t>(ck.params.size()));
  std::uint64_t offset = 0;
  for (const auto& p : ck.params) {
    w.str(p.name);
    const Shape s = p.value.shape();
    for (int d : {s.n, s.c, s.h, s.w}) w.put(static_cast<std::int32_t>(d));
    w.put(offset);
    offset += p.value.numel();
  }
  w.put(offset);
  for (const auto& p : ck.params) w.doubles(p.value.values());
  const auto& o = ck.optimizer;
  require(o.slots.size() == ck.params.size(), ErrorKind::dimension, "checkpoint: optimizer tracks ", o.slots.size(),
          " tensors, have ", ck.params.size());
  w.put(o.step);
  for (double v : {o.hyper.lr, o.hyper.beta1, o.hyper.beta2, o.hyper.eps, o.hyper.weight_decay}) w.put(v);
  for (std::size_t i = 0; i < o.slots.size(); ++i) {
    require(o.slots[i].m.size() == ck.params[i].value.numel() && o.slots[i].v.size() == ck.params[i].value.numel(),
            ErrorKind::dimension, "checkpoint: optimizer slot size mismatch for '", ck.params[i].name, "'");
    w.doubles(o.slots[i].m);
    w.doubles(o.slots[i].v);
  }
  const auto& l = ck.loop;
  w.put(l.step);
  w.str(l.rng);
  w.put(static_cast<std::uint64_t>(l.order.size()));
  for (auto v : l.order) w.put(v);
  w.put(l.cursor);
  w.put(l.epoch);
  w.put(fnv1a(w.bytes()));
  return std::move(w.bytes());
}

inline Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 8 || bytes.substr(0, 4) != "FFRT") fail(ErrorKind::bad_magic, "checkpoint: bad magic");
  detail::ByteReader r(bytes.substr(4));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    fail(ErrorKind::unsupported_version, "checkpoint: version ", version, " not supported (expected ",
         kCheckpointVersion, ")");
  if (bytes.size() < 16) fail(ErrorKind::parse, "checkpoint truncated");
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  if (fnv1a(bytes.substr(0, bytes.size() - 8)) != stored) fail(ErrorKind::bad_checksum, "checkpoint: checksum mismatch");

  Checkpoint ck;
  ck.config = r.str();
  const auto count = r.get<std::uint32_t>();
  std::vector<std::uint64_t> offsets;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.str();
    Shape s;
    s.n = r.get<std::int32_t>();
    s.c = r.get<std::int32_t>();
    s.h = r.get<std::int32_t>();
    s.w = r.get<std::int32_t>();
    require(s.valid(), ErrorKind::parse, "checkpoint: bad shape for '", t.name, "'");
    t.value = Tensor(s);
    offsets.push_back(r.get<std::uint64_t>());
    ck.params.push_back(std::move(t));
  }
  const auto total = r.get<std::uint64_t>();
  std::uint64_t expect = 0;
  for (std::size_t i = 0; i < ck.params.size(); ++i) {
    require(offsets[i] == expect, ErrorKind::parse, "checkpoint: non-contiguous offset for '", ck.params[i].name, "'");
    expect += ck.params[i].value.numel();
  }
  require(total == expect, ErrorKind::parse, "checkpoint: payload length ", total, " != directory total ", expect);
  for (auto& p : ck.params) r.doubles(p.value.values(), p.value.numel());
  auto& o = ck.optimizer;
  o.step = r.get<std::uint64_t>();
  o.hyper.lr = r.get<double>();
  o.hyper.beta1 = r.get<double>();
  o.hyper.beta2 = r.get<double>();
  o.hyper.eps = r.get<double>();
  o.hyper.weight_decay = r.get<double>();
  o.slots.resize(ck.params.size());
  for (std::size_t i = 0; i < ck.params.size(); ++i) {
    r.doubles(o.slots[i].m, ck.params[i].value.numel());
    r.doubles(o.slots[i].v, ck.params[i].value.numel());
  }
  auto& l = ck.loop;
  l.step = r.get<std::uint64_t>();
  l.rng = r.str();
  const auto k = r.get<std::uint64_t>();
  require(k <= bytes.size(), ErrorKind::parse, "checkpoint: bad order length");
  for (std::uint64_t i = 0; i < k; ++i) l.order.push_back(r.get<std::uint64_t>());
  l.cursor = r.get<std::uint64_t>();
  l.epoch = r.get<std::uint64_t>();
  require(r.pos() + 4 + 8 == bytes.size(), ErrorKind::parse, "checkpoint: ", bytes.size() - r.pos() - 12,
          " unexpected trailing bytes");
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file_atomic(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

inline std::vector<NamedTensor> snapshot(const ParamStore& store) {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < store.size(); ++i)
    out.push_back({store.name(i), Tensor(store.value(i).shape(), store.value(i).values())});
  return out;
}

// Copies tensors into a store with the same names, order and shapes.
inline void restore(ParamStore& store, const std::vector<NamedTensor>& tensors) {
  require(tensors.size() == store.size(), ErrorKind::config, "checkpoint has ", tensors.size(),
          " tensors, model has ", store.size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    require(tensors[i].name == store.name(i), ErrorKind::config, "checkpoint tensor ", i, " is '", tensors[i].name,
            "', model expects '", store.name(i), "'");
    require(tensors[i].value.shape() == store.value(i).shape(), ErrorKind::config, "checkpoint tensor '",
            tensors[i].name, "' has shape ", tensors[i].value.shape().str(), ", model expects ",
            store.value(i).shape().str());
    store.value(i).values() = tensors[i].value.values();
  }
}

}  // namespace ffrt
