// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#include "madam/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace madam {

namespace {

class ByteWriter {
 public:
  void bytes(const void* src, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(src);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename T>
  void integer(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { integer(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw FormatError(std::string("truncated checkpoint while reading ") + what + " at offset " +
                        std::to_string(pos_));
    }
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T integer(const char* what) {
    auto s = take(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(s[i]) << (8 * i));
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(integer<std::uint64_t>(what)); }
  std::size_t remaining() const { return in_.size() - pos_; }
  std::size_t offset() const { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

// Appends values LSB first into a growing bit stream.
class BitPacker {
 public:
  explicit BitPacker(std::size_t total_bits) : bytes_((total_bits + 7) / 8, 0) {}
  void put(std::uint64_t value, int width) {
    for (int b = 0; b < width; ++b, ++bit_) {
      if ((value >> b) & 1u) bytes_[bit_ / 8] |= static_cast<std::uint8_t>(1u << (bit_ % 8));
    }
  }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bit_ = 0;
};

class BitUnpacker {
 public:
  explicit BitUnpacker(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint64_t get(int width) {
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b, ++bit_) {
      v |= static_cast<std::uint64_t>((bytes_[bit_ / 8] >> (bit_ % 8)) & 1u) << b;
    }
    return v;
  }
  std::size_t position() const { return bit_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t bit_ = 0;
};

}  // namespace

std::size_t packed_size(std::size_t n, int bits) {
  return (n * (static_cast<std::size_t>(bits) + 1) + 7) / 8;
}

std::vector<std::uint8_t> serialize(const LnsCheckpoint& ckpt) {
  ByteWriter w;
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.integer<std::uint16_t>(kCheckpointVersion);
  w.integer<std::uint32_t>(static_cast<std::uint32_t>(ckpt.layers.size()));
  for (const auto& layer : ckpt.layers) {
    const LnsTensor& t = layer.weights;
    t.validate();
    const std::size_t n = t.size();
    w.integer<std::uint32_t>(static_cast<std::uint32_t>(layer.name.size()));
    w.bytes(layer.name.data(), layer.name.size());
    w.integer<std::uint8_t>(static_cast<std::uint8_t>(t.spec.bits));
    w.f64(t.spec.eta0);
    w.f64(t.spec.sigma_star);
    w.integer<std::uint64_t>(n);

    BitPacker bits(n * (static_cast<std::size_t>(t.spec.bits) + 1));
    for (auto s : t.signs) bits.put(s < 0 ? 1u : 0u, 1);
    for (auto k : t.levels) bits.put(k, t.spec.bits);
    w.bytes(bits.bytes().data(), bits.bytes().size());

    if (layer.gbar_sq) {
      if (layer.gbar_sq->size() != n) throw std::invalid_argument("checkpoint: gbar_sq size does not match weights");
      w.integer<std::uint8_t>(1);
      for (double v : layer.gbar_sq->data()) w.f64(v);
    } else {
      w.integer<std::uint8_t>(0);
    }
  }
  return std::move(w.buffer());
}

std::vector<std::uint8_t> serialize(const LnsTensor& t) {
  LnsCheckpoint ckpt;
  ckpt.layers.push_back({"", t, std::nullopt});
  return serialize(ckpt);
}

LnsCheckpoint deserialize(std::span<const std::uint8_t> bytes, std::optional<int> expected_bits) {
  ByteReader r(bytes);
  auto magic = r.take(sizeof(kCheckpointMagic), "magic");
  if (std::memcmp(magic.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw FormatError("not an LNS checkpoint (bad magic)");
  const auto version = r.integer<std::uint16_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const auto count = r.integer<std::uint32_t>("layer count");

  LnsCheckpoint ckpt;
  for (std::uint32_t l = 0; l < count; ++l) {
    CheckpointLayer layer;
    const auto name_len = r.integer<std::uint32_t>("name length");
    auto name = r.take(name_len, "layer name");
    layer.name.assign(name.begin(), name.end());

    LnsSpec spec;
    spec.bits = r.integer<std::uint8_t>("bit width");
    spec.eta0 = r.f64("eta0");
    spec.sigma_star = r.f64("sigma_star");
    try {
      spec.validate();
    } catch (const std::invalid_argument& e) {
      throw FormatError("layer '" + layer.name + "': " + e.what());
    }
    if (expected_bits && spec.bits != *expected_bits) {
      throw FormatError("layer '" + layer.name + "' has " + std::to_string(spec.bits) + " bits, expected " +
                        std::to_string(*expected_bits));
    }
    const auto n64 = r.integer<std::uint64_t>("element count");
    // Reject counts whose payload could not possibly fit before allocating.
    if (n64 == 0 || n64 > r.remaining() * 8) throw FormatError("layer '" + layer.name + "': implausible element count");
    const auto n = static_cast<std::size_t>(n64);

    BitUnpacker bits(r.take(packed_size(n, spec.bits), "packed levels"));
    LnsTensor t{spec, Shape{n}, {}, {}};
    t.signs.reserve(n);
    t.levels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) t.signs.push_back(bits.get(1) ? -1 : 1);
    for (std::size_t i = 0; i < n; ++i) t.levels.push_back(static_cast<std::uint32_t>(bits.get(spec.bits)));
    layer.weights = std::move(t);

    const auto flag = r.integer<std::uint8_t>("gbar_sq flag");
    if (flag > 1) throw FormatError("layer '" + layer.name + "': invalid gbar_sq flag");
    if (flag == 1) {
      Tensor g({n});
      for (double& v : g.data()) v = r.f64("gbar_sq");
      layer.gbar_sq = std::move(g);
    }
    ckpt.layers.push_back(std::move(layer));
  }
  if (r.remaining() != 0) {
    throw FormatError("trailing " + std::to_string(r.remaining()) + " bytes after offset " + std::to_string(r.offset()));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const LnsCheckpoint& ckpt) {
  const auto bytes = serialize(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::ios_base::failure("failed writing " + path.string());
}

LnsCheckpoint load_checkpoint(const std::filesystem::path& path, std::optional<int> expected_bits) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes, expected_bits);
}

}  // namespace madam
