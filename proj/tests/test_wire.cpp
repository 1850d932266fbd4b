#include <doctest.h>

#include <cstring>

#include "fedman/errors.hpp"
#include "fedman/rng.hpp"
#include "fedman/wire.hpp"

using namespace fedman;

TEST_CASE("1x1 frame layout") {
  const WireFrame f{MsgType::ModelUpload, 0x01020304u, DenseMatrix{{0.0}}};
  const auto bytes = encode_frame(f);
  REQUIRE(bytes.size() == kFrameHeaderBytes + 8);
  CHECK(std::memcmp(bytes.data(), "FMFL", 4) == 0);
  CHECK(bytes[4] == kWireVersion);
  CHECK(bytes[5] == 1);
  CHECK(bytes[6] == 0x04);
  CHECK(bytes[9] == 0x01);
  CHECK(bytes[10] == 1);
  CHECK(bytes[14] == 1);
  CHECK(decode_frame(bytes) == f);
}

TEST_CASE("random frames round-trip bitwise") {
  RngStream rng(3, 1);
  for (int t = 0; t < 500; ++t) {
    const std::size_t rows = 1 + rng.below(40), cols = 1 + rng.below(5);
    DenseMatrix m(rows, cols);
    // Raw bit patterns exercise every exponent, including subnormals and NaN payloads.
    for (double& v : m.data()) {
      const std::uint64_t bits = rng.next_u64();
      std::memcpy(&v, &bits, 8);
    }
    const WireFrame f{static_cast<MsgType>(rng.below(3)), static_cast<std::uint32_t>(rng.next_u64()), m};
    const auto bytes = encode_frame(f);
    const WireFrame g = decode_frame(bytes);
    CHECK(g.type == f.type);
    CHECK(g.round == f.round);
    CHECK(std::memcmp(g.payload.data().data(), m.data().data(), m.size() * 8) == 0);
    CHECK(encode_frame(g) == bytes);
  }
}

TEST_CASE("784x2 payload round-trips") {
  RngStream rng(4, 2);
  DenseMatrix m(784, 2);
  for (double& v : m.data()) v = rng.normal();
  const WireFrame f{MsgType::Broadcast, 12, m};
  CHECK(decode_frame(encode_frame(f)) == f);
}

TEST_CASE("shutdown frames carry no payload") {
  const WireFrame f{MsgType::Shutdown, 5, DenseMatrix()};
  const auto bytes = encode_frame(f);
  CHECK(bytes.size() == kFrameHeaderBytes);
  CHECK(decode_frame(bytes) == f);
  CHECK_THROWS_AS(encode_frame({MsgType::Broadcast, 1, DenseMatrix()}), InvalidArgument);
}

TEST_CASE("malformed frames are rejected") {
  const auto good = encode_frame({MsgType::Broadcast, 1, DenseMatrix{{1.0, 2.0}}});
  CHECK_THROWS_AS(decode_frame(std::span(good).first(good.size() - 1)), FormatError);
  CHECK_THROWS_AS(decode_frame(std::span(good).first(10)), FormatError);
  auto extra = good;
  extra.push_back(0);
  CHECK_THROWS_AS(decode_frame(extra), FormatError);
  auto magic = good;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_frame(magic), FormatError);
  auto version = good;
  version[4] = 2;
  CHECK_THROWS_AS(decode_frame(version), FormatError);
  auto type = good;
  type[5] = 9;
  CHECK_THROWS_AS(decode_frame(type), FormatError);
  auto huge = good;
  huge[13] = 0x7f;
  CHECK_THROWS_AS(decode_frame_header(std::span(huge).first(kFrameHeaderBytes)), FormatError);
}
