#pragma once

#include "ozmm/types.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ozmm {

/// Errors for malformed or mismatched matrix files.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Element-kind codes of the OZMM container.
enum class ElementKind : std::uint8_t { F64 = 0, I8 = 1, I32 = 2, I64 = 3 };

template <class Scalar>
struct element_kind_of;
template <> struct element_kind_of<double> {
  static constexpr ElementKind value = ElementKind::F64;
};
template <> struct element_kind_of<std::int8_t> {
  static constexpr ElementKind value = ElementKind::I8;
};
template <> struct element_kind_of<std::int32_t> {
  static constexpr ElementKind value = ElementKind::I32;
};
template <> struct element_kind_of<std::int64_t> {
  static constexpr ElementKind value = ElementKind::I64;
};

// Container layout: magic "OZMM", version byte (1), element-kind byte,
// 6 reserved zero bytes, u64 LE rows, u64 LE cols, then row-major elements
// little-endian. Round trips are bit-exact.

template <class Scalar>
void save_matrix(const std::string& path, const DenseMatrix<Scalar>& m);

template <class Scalar>
DenseMatrix<Scalar> load_matrix(const std::string& path);

/// Kind stored in a file, without reading the payload.
ElementKind peek_kind(const std::string& path);

}  // namespace ozmm
