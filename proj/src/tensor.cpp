#include "tensql/tensor.hpp"

namespace tensql {

const char* dtype_name(DType t) {
  switch (t) {
    case DType::Bool: return "bool";
    case DType::Int32: return "int32";
    case DType::Int64: return "int64";
    case DType::Float64: return "float64";
  }
  return "?";
}

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::Bool: return 1;
    case DType::Int32: return 4;
    case DType::Int64: return 8;
    case DType::Float64: return 8;
  }
  return 0;
}

Tensor Tensor::empty(DType t, int64_t cols) {
  switch (t) {
    case DType::Bool: return Tensor(t, 0, cols, std::vector<uint8_t>{});
    case DType::Int32: return Tensor(t, 0, cols, std::vector<int32_t>{});
    case DType::Int64: return Tensor(t, 0, cols, std::vector<int64_t>{});
    case DType::Float64: return Tensor(t, 0, cols, std::vector<double>{});
  }
  throw KernelError("tensor: bad dtype");
}

void Tensor::check_dtype(DType want) const {
  if (dtype_ != want) {
    throw KernelError(std::string("tensor: dtype is ") + dtype_name(dtype_) + ", accessed as " +
                      dtype_name(want));
  }
}

}  // namespace tensql
