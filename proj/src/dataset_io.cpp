#include <algorithm>
#include <fstream>
#include <numeric>
#include <string>

#include "byte_io.hpp"
#include "fedman/errors.hpp"
#include "fedman/problems.hpp"

namespace fedman {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr char kDatasetMagic[4] = {'F', 'M', 'D', 'S'};
constexpr std::uint8_t kDatasetVersion = 1;

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw InvalidArgument(std::string(what) + ": value exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, "IDX images");
  const std::uint32_t magic = in.u32be();
  if (magic != kIdxImagesMagic) {
    throw FormatError("IDX images: bad magic " + hex32(magic) + ", expected " + hex32(kIdxImagesMagic));
  }
  IdxImages out;
  out.count = in.u32be();
  out.rows = in.u32be();
  out.cols = in.u32be();
  const std::size_t n = out.count * out.rows * out.cols;
  if (in.remaining() != n) {
    throw FormatError("IDX images: header declares " + std::to_string(n) + " pixel bytes, file has " +
                      std::to_string(in.remaining()));
  }
  auto px = in.take(n);
  out.pixels.assign(px.begin(), px.end());
  return out;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, "IDX labels");
  const std::uint32_t magic = in.u32be();
  if (magic != kIdxLabelsMagic) {
    throw FormatError("IDX labels: bad magic " + hex32(magic) + ", expected " + hex32(kIdxLabelsMagic));
  }
  const std::uint32_t count = in.u32be();
  if (in.remaining() != count) {
    throw FormatError("IDX labels: header declares " + std::to_string(count) + " labels, file has " +
                      std::to_string(in.remaining()));
  }
  auto lb = in.take(count);
  return {lb.begin(), lb.end()};
}

Problem load_mnist_kpca(const std::filesystem::path& dir, std::size_t n, std::size_t k) {
  const IdxImages images = parse_idx_images(read_file_bytes(dir / "train-images-idx3-ubyte"));
  const std::vector<std::uint8_t> labels = parse_idx_labels(read_file_bytes(dir / "train-labels-idx1-ubyte"));
  if (labels.size() != images.count) {
    throw FormatError("MNIST: " + std::to_string(images.count) + " images but " +
                      std::to_string(labels.size()) + " labels");
  }
  if (n < 1 || images.count % n != 0) {
    throw InvalidArgument("MNIST: " + std::to_string(images.count) + " rows cannot be split into " +
                          std::to_string(n) + " equal client blocks");
  }
  std::vector<std::size_t> order(images.count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

  const std::size_t d = images.rows * images.cols;
  const std::size_t per_client = images.count / n;
  std::vector<KpcaClientData> clients(n);
  for (std::size_t i = 0; i < n; ++i) {
    DenseMatrix a(per_client, d);
    for (std::size_t r = 0; r < per_client; ++r) {
      const std::size_t src = order[i * per_client + r];
      for (std::size_t c = 0; c < d; ++c) a(r, c) = images.pixels[src * d + c] / 255.0;
    }
    clients[i].a = std::move(a);
  }
  return Problem::kpca(std::move(clients), k);
}

std::vector<std::uint8_t> encode_dataset(const Problem& problem) {
  std::vector<std::uint8_t> out(std::begin(kDatasetMagic), std::end(kDatasetMagic));
  detail::put_u8(out, kDatasetVersion);
  detail::put_u8(out, problem.kind() == ProblemKind::Kpca ? 0 : 1);
  detail::put_u32le(out, checked_u32(problem.num_clients(), "encode_dataset"));
  detail::put_u32le(out, checked_u32(problem.d(), "encode_dataset"));
  detail::put_u32le(out, checked_u32(problem.k(), "encode_dataset"));
  if (problem.kind() == ProblemKind::Kpca) {
    for (const auto& c : problem.kpca_clients()) {
      detail::put_u32le(out, checked_u32(c.a.rows(), "encode_dataset"));
      for (double v : c.a.data()) detail::put_f64le(out, v);
    }
  } else {
    for (const auto& c : problem.lrmc_clients()) {
      detail::put_u32le(out, checked_u32(c.columns.size(), "encode_dataset"));
      for (const auto& column : c.columns) {
        detail::put_u32le(out, checked_u32(column.size(), "encode_dataset"));
        for (const auto& e : column) {
          detail::put_u32le(out, e.row);
          detail::put_f64le(out, e.value);
        }
      }
    }
  }
  return out;
}

Problem decode_dataset(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, "dataset");
  auto magic = in.take(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kDatasetMagic))) {
    throw FormatError("dataset: bad magic");
  }
  const std::uint8_t version = in.u8();
  if (version != kDatasetVersion) throw FormatError("dataset: unsupported version " + std::to_string(version));
  const std::uint8_t kind = in.u8();
  const std::uint32_t n = in.u32le();
  const std::uint32_t d = in.u32le();
  const std::uint32_t k = in.u32le();
  if (kind == 0) {
    std::vector<KpcaClientData> clients(n);
    for (auto& c : clients) {
      const std::uint32_t rows = in.u32le();
      if (in.remaining() / 8 / std::max<std::uint32_t>(d, 1) < rows) throw FormatError("dataset: truncated kPCA block");
      DenseMatrix a(rows, d);
      for (double& v : a.data()) v = in.f64le();
      c.a = std::move(a);
    }
    if (in.remaining() != 0) throw FormatError("dataset: trailing bytes");
    return Problem::kpca(std::move(clients), k);
  }
  if (kind == 1) {
    std::vector<LrmcClientData> clients(n);
    for (auto& c : clients) {
      c.d = d;
      const std::uint32_t cols = in.u32le();
      if (in.remaining() / 4 < cols) throw FormatError("dataset: truncated LRMC block");
      c.columns.resize(cols);
      for (auto& column : c.columns) {
        const std::uint32_t count = in.u32le();
        if (in.remaining() / 12 < count) throw FormatError("dataset: truncated LRMC column");
        column.resize(count);
        for (auto& e : column) {
          e.row = in.u32le();
          e.value = in.f64le();
        }
      }
    }
    if (in.remaining() != 0) throw FormatError("dataset: trailing bytes");
    return Problem::lrmc(std::move(clients), k);
  }
  throw FormatError("dataset: unknown problem kind " + std::to_string(kind));
}

void write_dataset(const Problem& problem, const std::filesystem::path& path) {
  const auto bytes = encode_dataset(problem);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

Problem read_dataset(const std::filesystem::path& path) { return decode_dataset(read_file_bytes(path)); }

}  // namespace fedman
