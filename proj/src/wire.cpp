#include "fedman/wire.hpp"

#include <algorithm>
#include <string>

#include "byte_io.hpp"
#include "fedman/errors.hpp"

namespace fedman {

namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'M', 'F', 'L'};

}  // namespace

std::vector<std::uint8_t> encode_frame(const WireFrame& frame) {
  const DenseMatrix& m = frame.payload;
  if (m.rows() > 0xffffffffu || m.cols() > 0xffffffffu) throw InvalidArgument("encode_frame: payload too large");
  if (m.empty() && frame.type != MsgType::Shutdown) {
    throw InvalidArgument("encode_frame: empty payload is only allowed for shutdown");
  }
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(kFrameHeaderBytes + 8 * m.size());
  detail::put_u8(out, kWireVersion);
  detail::put_u8(out, static_cast<std::uint8_t>(frame.type));
  detail::put_u32le(out, frame.round);
  detail::put_u32le(out, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32le(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) detail::put_f64le(out, v);
  return out;
}

FrameHeader decode_frame_header(std::span<const std::uint8_t> header) {
  detail::ByteReader in(header, "frame header");
  auto magic = in.take(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) throw FormatError("frame: bad magic");
  const std::uint8_t version = in.u8();
  if (version != kWireVersion) throw FormatError("frame: unsupported version " + std::to_string(version));
  const std::uint8_t type = in.u8();
  if (type > static_cast<std::uint8_t>(MsgType::Shutdown)) {
    throw FormatError("frame: unknown message type " + std::to_string(type));
  }
  FrameHeader h{static_cast<MsgType>(type), in.u32le(), in.u32le(), in.u32le()};
  if ((h.rows == 0) != (h.cols == 0)) throw FormatError("frame: degenerate payload dims");
  if (h.rows == 0 && h.type != MsgType::Shutdown) throw FormatError("frame: empty payload on a data frame");
  if (std::uint64_t{h.rows} * h.cols > (std::uint64_t{1} << 28)) throw FormatError("frame: payload too large");
  return h;
}

DenseMatrix decode_frame_payload(const FrameHeader& header, std::span<const std::uint8_t> payload) {
  if (payload.size() != header.payload_bytes()) {
    throw FormatError("frame: payload has " + std::to_string(payload.size()) + " bytes, header declares " +
                      std::to_string(header.payload_bytes()));
  }
  if (header.rows == 0) return {};
  detail::ByteReader in(payload, "frame payload");
  DenseMatrix m(header.rows, header.cols);
  for (double& v : m.data()) v = in.f64le();
  return m;
}

WireFrame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderBytes) {
    throw FormatError("frame: truncated header (" + std::to_string(bytes.size()) + " bytes)");
  }
  const FrameHeader h = decode_frame_header(bytes.first(kFrameHeaderBytes));
  const auto rest = bytes.subspan(kFrameHeaderBytes);
  if (rest.size() < h.payload_bytes()) throw FormatError("frame: truncated payload");
  if (rest.size() > h.payload_bytes()) throw FormatError("frame: trailing bytes after payload");
  return {h.type, h.round, decode_frame_payload(h, rest)};
}

}  // namespace fedman
