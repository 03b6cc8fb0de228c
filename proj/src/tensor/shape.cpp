#include "dstsa/tensor/shape.hpp"

#include <sstream>

#include "dstsa/errors.hpp"

namespace dstsa {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

std::vector<std::size_t> contiguous_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) {
    strides[i - 1] = strides[i] * shape[i];
  }
  return strides;
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw DimensionError("cannot broadcast shapes " + to_string(a) + " and " +
                           to_string(b));
    }
    out[i] = da == 1 ? db : da;
  }
  if (out.size() > kMaxRank) {
    throw DimensionError("broadcast result exceeds rank 5: " + to_string(out));
  }
  return out;
}

Index5 pad_to_max_rank(const Shape& shape) {
  if (shape.size() > kMaxRank) {
    throw DimensionError("rank exceeds 5: " + to_string(shape));
  }
  Index5 dims{1, 1, 1, 1, 1};
  const std::size_t offset = kMaxRank - shape.size();
  for (std::size_t i = 0; i < shape.size(); ++i) dims[offset + i] = shape[i];
  return dims;
}

Index5 broadcast_strides(const Shape& in, const Shape& out) {
  Index5 strides{0, 0, 0, 0, 0};
  const auto in_dims = pad_to_max_rank(in);
  const auto out_dims = pad_to_max_rank(out);
  std::size_t stride = 1;
  for (std::size_t i = kMaxRank; i-- > 0;) {
    if (in_dims[i] == out_dims[i] && in_dims[i] != 1) {
      strides[i] = stride;
    } else if (in_dims[i] != 1) {
      throw DimensionError("shape " + to_string(in) + " does not broadcast to " +
                           to_string(out));
    }
    stride *= in_dims[i];
  }
  return strides;
}

std::size_t normalize_axis(long axis, std::size_t rank) {
  const long r = static_cast<long>(rank);
  if (axis < -r || axis >= r) {
    throw DimensionError("axis " + std::to_string(axis) +
                         " out of range for rank " + std::to_string(rank));
  }
  return static_cast<std::size_t>(axis < 0 ? axis + r : axis);
}

}  // namespace dstsa
