#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mogat/tape.hpp"

// Differentiable primitives. Every function records its result on the tape
// that owns its inputs. Shapes are explicit: the only broadcasts are the
// row-wise ones (add_row, mul_row) that apply a 1 x C vector to every row.
namespace mogat::ops {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var add_row(Var x, Var row);
Var mul_row(Var x, Var row);
Var add_scalar(Var x, double s);
Var mul_scalar(Var x, double s);
Var pow_scalar(Var x, double exponent);
Var concat_rows(Var a, Var b);
Var reshape(Var x, std::size_t rows, std::size_t cols);

Var leaky_relu(Var x, double slope);
Var exp(Var x);
Var log(Var x);

/// axis 0 reduces rows (result 1 x C), axis 1 reduces columns (R x 1).
Var mean_over_axis(Var x, int axis);
/// Population variance along the axis.
Var variance_over_axis(Var x, int axis);
Var sum(Var x);
Var mean(Var x);

/// Mean over consecutive blocks of `block` rows: (B*block x C) -> (B x C).
Var block_mean_rows(Var x, std::size_t block);

/// Row-wise log-softmax.
Var log_softmax_rows(Var x);

/// out[r] = x(r, index[r]); result is R x 1.
Var pick(Var x, std::span<const std::size_t> index);

/// Softmax of an E x 1 logit column within each segment. Segment ids must be
/// < num_segments; the per-segment max is subtracted before exponentiation.
Var segment_softmax(Var logits, std::span<const std::size_t> segment, std::size_t num_segments);

/// out(segment[e], :) += weights[e] * values(gather[e], :); result is
/// num_segments x values.cols().
Var segment_weighted_sum(Var weights, Var values, std::span<const std::size_t> gather,
                         std::span<const std::size_t> segment, std::size_t num_segments);

/// Per directed edge e (dst <- src): a' [h_dst || h_src] with h = rows of
/// `features` (N x F) and `attention` a (2F x 1). Result is E x 1.
Var attention_logits(Var features, Var attention, std::span<const std::size_t> src,
                     std::span<const std::size_t> dst);

/// Inverted dropout. In training mode each entry is zeroed with probability
/// `rate` and survivors are scaled by 1 / (1 - rate); the mask is a pure
/// function of `seed`. Identity when training is false or rate is 0.
Var dropout(Var x, double rate, std::uint64_t seed, bool training);

}  // namespace mogat::ops
