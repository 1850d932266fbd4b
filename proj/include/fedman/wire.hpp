#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedman/matrix.hpp"

namespace fedman {

enum class MsgType : std::uint8_t {
  Broadcast = 0,
  ModelUpload = 1,
  GradientUpload = 2,
  Shutdown = 3,
};

/// One message between server and client.
///
/// Byte layout (little-endian):
///   0  magic "FMFL"
///   4  u8  version (1)
///   5  u8  message type
///   6  u32 round
///   10 u32 rows
///   14 u32 cols
///   18 rows*cols f64, row-major
/// The payload length is implied by the dims. A 0 x 0 payload is only legal
/// for Shutdown.
struct WireFrame {
  MsgType type = MsgType::Broadcast;
  std::uint32_t round = 0;
  DenseMatrix payload;

  friend bool operator==(const WireFrame&, const WireFrame&) = default;
};

inline constexpr std::size_t kFrameHeaderBytes = 18;
inline constexpr std::uint8_t kWireVersion = 1;

struct FrameHeader {
  MsgType type;
  std::uint32_t round;
  std::uint32_t rows;
  std::uint32_t cols;

  std::size_t payload_bytes() const noexcept { return std::size_t{rows} * cols * 8; }
};

std::vector<std::uint8_t> encode_frame(const WireFrame& frame);

/// Parses exactly one frame; trailing bytes are an error.
WireFrame decode_frame(std::span<const std::uint8_t> bytes);

/// Validates and parses the fixed-size header; throws FormatError on bad
/// magic, version, message type or dims.
FrameHeader decode_frame_header(std::span<const std::uint8_t> header);

/// Payload of a frame whose header has already been parsed.
DenseMatrix decode_frame_payload(const FrameHeader& header, std::span<const std::uint8_t> payload);

}  // namespace fedman
