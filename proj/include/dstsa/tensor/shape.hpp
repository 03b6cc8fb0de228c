#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace dstsa {

using Shape = std::vector<std::size_t>;

// Tensors carry at most five extents; (N, K, T, C/K, V) is the widest layout
// the grouped temporal aggregation needs.
inline constexpr std::size_t kMaxRank = 5;

using Index5 = std::array<std::size_t, kMaxRank>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

// Row-major strides for a contiguous buffer.
std::vector<std::size_t> contiguous_strides(const Shape& shape);

// NumPy-style broadcasting with trailing-axis alignment. Throws DimensionError.
Shape broadcast_shapes(const Shape& a, const Shape& b);

// Left-pads `shape` with ones up to kMaxRank.
Index5 pad_to_max_rank(const Shape& shape);

// Strides of `in` viewed inside the broadcast result `out`, left-padded to
// kMaxRank. Broadcast (extent-1 or missing) axes get stride 0.
Index5 broadcast_strides(const Shape& in, const Shape& out);

// Normalizes a possibly negative axis; throws DimensionError when out of range.
std::size_t normalize_axis(long axis, std::size_t rank);

}  // namespace dstsa
