#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "autodiff/value.hpp"

namespace ffae::ad {

inline constexpr double kLayerNormEps = 1e-5;

// Throws std::invalid_argument naming the op and both shapes.
Value matmul(const Value& a, const Value& b);
// Elementwise; `b` may also be a 1 x cols row broadcast over the rows of `a`.
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value scale(const Value& a, double factor);
Value transpose(const Value& a);

Value concat_rows(std::span<const Value> parts);
Value slice_rows(const Value& a, std::size_t begin, std::size_t count);
// Row gather; also serves as embedding lookup.
Value gather_rows(const Value& a, std::span<const std::size_t> rows);
// Copy of `a` with the listed rows replaced by the single row `replacement`.
Value replace_rows(const Value& a, std::span<const std::size_t> rows, const Value& replacement);

Value mean_pool(const Value& a);  // mean over rows -> 1 x cols
Value sum(const Value& a);        // -> 1 x 1
Value gelu(const Value& a);       // exact erf form

enum class Axis { rows = 0, cols = 1 };
// Normalizes along `axis` (cols: each row sums to 1). Max-subtracted.
Value softmax(const Value& x, Axis axis = Axis::cols);

// Per-row normalization with affine 1 x cols gain and bias.
Value layer_norm(const Value& x, const Value& gain, const Value& bias, double eps = kLayerNormEps);

// Mean over rows of -log softmax(logits[r])[targets[r]].
Value cross_entropy(const Value& logits, std::span<const std::size_t> targets);
Value cross_entropy(const Value& logits, std::size_t target);

// Scaled dot-product attention split over `heads` column groups.
// `additive_mask`, when given, is q.rows() x k.rows() and added to the scores.
Value attention(const Value& q, const Value& k, const Value& v, std::size_t heads = 1,
                const Tensor* additive_mask = nullptr);

}  // namespace ffae::ad
