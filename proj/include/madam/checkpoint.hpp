// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0
//
// Bit-packed checkpoint for ladder weights. All multi-byte integers and
// doubles are little-endian.
//
//   "MADAMLNS"                     8 bytes magic
//   version                        u16 (currently 1)
//   layer count                    u32
//   per layer:
//     name length                  u32
//     name                         UTF-8 bytes, no terminator
//     bits B                       u8
//     eta0                         f64
//     sigma_star                   f64
//     element count n              u64
//     packed bits                  ceil(n * (B + 1) / 8) bytes: n sign bits
//                                  (1 = negative) followed by n levels of B
//                                  bits each, least significant bit first,
//                                  filling each byte from bit 0 upward
//     gbar_sq present              u8 (0 or 1)
//     gbar_sq                      n f64 values when present
//
// Shapes are not stored; tensors come back one-dimensional and are reshaped
// by the caller from the model configuration.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "madam/lns.hpp"
#include "madam/tensor.hpp"

namespace madam {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[8] = {'M', 'A', 'D', 'A', 'M', 'L', 'N', 'S'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointLayer {
  std::string name;
  LnsTensor weights;
  std::optional<Tensor> gbar_sq;

  friend bool operator==(const CheckpointLayer&, const CheckpointLayer&) = default;
};

struct LnsCheckpoint {
  std::vector<CheckpointLayer> layers;

  friend bool operator==(const LnsCheckpoint&, const LnsCheckpoint&) = default;
};

/// Size of the packed sign+level block for n elements of B bits.
std::size_t packed_size(std::size_t n, int bits);

std::vector<std::uint8_t> serialize(const LnsCheckpoint& ckpt);
/// Single unnamed layer without gbar_sq.
std::vector<std::uint8_t> serialize(const LnsTensor& t);

/// Throws FormatError on bad magic, unknown version, truncation, trailing
/// bytes, or (when expected_bits is set) a layer with a different bit width.
LnsCheckpoint deserialize(std::span<const std::uint8_t> bytes, std::optional<int> expected_bits = std::nullopt);

void save_checkpoint(const std::filesystem::path& path, const LnsCheckpoint& ckpt);
LnsCheckpoint load_checkpoint(const std::filesystem::path& path, std::optional<int> expected_bits = std::nullopt);

}  // namespace madam
