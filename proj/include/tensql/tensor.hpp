#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tensql {

enum class DType : uint8_t { Bool, Int32, Int64, Float64 };

const char* dtype_name(DType t);
std::size_t dtype_size(DType t);

// Raised by kernels and the executor on contract violations (shape/dtype
// mismatches, out-of-bounds indices, div-by-zero, overflow, NaN keys).
class KernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
template <typename T>
struct dtype_of;
template <>
struct dtype_of<uint8_t> {
  static constexpr DType value = DType::Bool;
};
template <>
struct dtype_of<int32_t> {
  static constexpr DType value = DType::Int32;
};
template <>
struct dtype_of<int64_t> {
  static constexpr DType value = DType::Int64;
};
template <>
struct dtype_of<double> {
  static constexpr DType value = DType::Float64;
};
}  // namespace detail

// Dense rectangular array, row-major, immutable after construction.
// Shape is (rows, cols) with cols == 1 for plain column vectors. Bool is
// stored as one uint8_t per element (0 or 1).
class Tensor {
 public:
  Tensor() : Tensor(empty(DType::Int64)) {}

  template <typename T>
  static Tensor from_vector(std::vector<T> data) {
    auto n = static_cast<int64_t>(data.size());
    return Tensor(detail::dtype_of<T>::value, n, 1, std::move(data));
  }

  template <typename T>
  static Tensor from_matrix(int64_t rows, int64_t cols, std::vector<T> data) {
    if (rows < 0 || cols < 1 || static_cast<int64_t>(data.size()) != rows * cols) {
      throw KernelError("tensor: buffer length does not match shape");
    }
    return Tensor(detail::dtype_of<T>::value, rows, cols, std::move(data));
  }

  template <typename T>
  static Tensor scalar(T v) {
    return from_vector(std::vector<T>{v});
  }

  static Tensor scalar_bool(bool v) { return from_vector(std::vector<uint8_t>{v ? uint8_t{1} : uint8_t{0}}); }

  static Tensor empty(DType t, int64_t cols = 1);

  DType dtype() const { return dtype_; }
  int64_t rows() const { return rows_; }
  int64_t cols() const { return cols_; }
  int64_t size() const { return rows_ * cols_; }
  bool is_vector() const { return cols_ == 1; }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
  int64_t byte_size() const { return size() * static_cast<int64_t>(dtype_size(dtype_)); }

  template <typename T>
  std::span<const T> data() const {
    check_dtype(detail::dtype_of<T>::value);
    return std::span<const T>(std::get<std::vector<T>>(buffer_->storage));
  }

  template <typename T>
  T at(int64_t r, int64_t c = 0) const {
    return data<T>()[static_cast<size_t>(r * cols_ + c)];
  }

  // Value of a 1x1 tensor.
  template <typename T>
  T item() const {
    if (size() != 1) throw KernelError("tensor: item() requires exactly one element");
    return data<T>()[0];
  }

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

 private:
  using Storage = std::variant<std::vector<uint8_t>, std::vector<int32_t>, std::vector<int64_t>,
                               std::vector<double>>;
  struct Buffer {
    Storage storage;
  };

  template <typename T>
  Tensor(DType t, int64_t rows, int64_t cols, std::vector<T> data)
      : dtype_(t), rows_(rows), cols_(cols),
        buffer_(std::make_shared<const Buffer>(Buffer{Storage{std::move(data)}})) {}

  void check_dtype(DType want) const;

  DType dtype_;
  int64_t rows_;
  int64_t cols_;
  std::shared_ptr<const Buffer> buffer_;
};

}  // namespace tensql
