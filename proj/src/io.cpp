#include "ozmm/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace ozmm {

static_assert(std::endian::native == std::endian::little,
              "OZMM serialization writes element payloads directly and "
              "assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'O', 'Z', 'M', 'M'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 1 + 1 + 6 + 8 + 8;

void put_u64(unsigned char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

struct Header {
  ElementKind kind;
  std::uint64_t rows, cols;
};

Header read_header(std::ifstream& in, const std::string& path) {
  std::array<unsigned char, kHeaderSize> h{};
  in.read(reinterpret_cast<char*>(h.data()), h.size());
  if (!in) throw FormatError(path + ": truncated header");
  if (std::memcmp(h.data(), kMagic, 4) != 0)
    throw FormatError(path + ": bad magic, not an OZMM file");
  if (h[4] != kVersion)
    throw FormatError(path + ": unsupported format version " + std::to_string(h[4]));
  if (h[5] > 3) throw FormatError(path + ": unknown element kind");
  for (int i = 6; i < 12; ++i)
    if (h[i] != 0) throw FormatError(path + ": nonzero reserved bytes");
  Header out;
  out.kind = static_cast<ElementKind>(h[5]);
  out.rows = get_u64(h.data() + 12);
  out.cols = get_u64(h.data() + 20);
  if (out.rows < 1 || out.cols < 1) throw FormatError(path + ": empty shape");
  return out;
}

}  // namespace

template <class Scalar>
void save_matrix(const std::string& path, const DenseMatrix<Scalar>& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path + ": cannot open for writing");
  std::array<unsigned char, kHeaderSize> h{};
  std::memcpy(h.data(), kMagic, 4);
  h[4] = kVersion;
  h[5] = static_cast<std::uint8_t>(element_kind_of<Scalar>::value);
  put_u64(h.data() + 12, static_cast<std::uint64_t>(m.rows()));
  put_u64(h.data() + 20, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(h.data()), h.size());
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(Scalar) * m.size()));
  if (!out) throw FormatError(path + ": write failed");
}

template <class Scalar>
DenseMatrix<Scalar> load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open");
  const Header h = read_header(in, path);
  if (h.kind != element_kind_of<Scalar>::value)
    throw FormatError(path + ": element kind mismatch");
  if (h.rows > static_cast<std::uint64_t>(1) << 32 ||
      h.cols > static_cast<std::uint64_t>(1) << 32)
    throw FormatError(path + ": implausible shape");
  DenseMatrix<Scalar> m(static_cast<Index>(h.rows), static_cast<Index>(h.cols));
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(Scalar) * m.size()));
  if (!in) throw FormatError(path + ": truncated payload");
  char extra;
  if (in.read(&extra, 1)) throw FormatError(path + ": trailing bytes");
  return m;
}

ElementKind peek_kind(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open");
  return read_header(in, path).kind;
}

template void save_matrix<double>(const std::string&, const MatrixF64&);
template void save_matrix<std::int8_t>(const std::string&, const MatrixI8&);
template void save_matrix<std::int32_t>(const std::string&, const MatrixI32&);
template void save_matrix<std::int64_t>(const std::string&, const MatrixI64&);
template MatrixF64 load_matrix<double>(const std::string&);
template MatrixI8 load_matrix<std::int8_t>(const std::string&);
template MatrixI32 load_matrix<std::int32_t>(const std::string&);
template MatrixI64 load_matrix<std::int64_t>(const std::string&);

}  // namespace ozmm
