#pragma once

#include <cstddef>
#include <vector>

#include "afgm/graph.hpp"

// Differentiable operations over Graph nodes. Each op validates shapes,
// computes its value eagerly and records the adjoint rule on the tape.
//
// Binary elementwise ops accept identical shapes plus exactly three broadcast
// patterns: rank-0 scalar with any tensor, [1,V] against [S,V], and [S,1]
// against [S,V]. Anything else is a DimensionError.

namespace afgm {

/// Guard added inside the amplitude square root and the phase denominator.
inline constexpr double kSqrtGuard = 1e-12;

/// [p,q]x[q,r] -> [p,r]; a rank-1 right operand is a column, a rank-1 left operand a row.
Var matmul(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var scale(Var a, double factor);
Var shift(Var a, double offset);

/// Output clamped to [2^-500, 1 - 2^-53] so gates stay strictly inside (0, 1).
Var sigmoid(Var a);
/// Subgradient at 0 is 0.
Var relu(Var a);
Var square(Var a);
/// sqrt(x + eps). Inputs below -eps raise DomainError.
Var sqrt_guarded(Var a, double eps = kSqrtGuard);
Var cos(Var a);
Var sin(Var a);
/// arctan(num / den') with den' = den + sign(den) * eps, range [-pi/2, pi/2].
Var ratio_arctan(Var num, Var den, double eps = kSqrtGuard);

/// [S] x [V] -> [S,V].
Var outer(Var a, Var b);

/// Sum along one axis; the axis is removed.
Var reduce_sum(Var a, std::size_t axis);
/// Sum of every element, as a rank-0 tensor.
Var sum_all(Var a);

/// Cross-channel 1-D convolution over time with replicate padding.
/// x: [T,D], kernel: [k,D,D] indexed (tap, in, out); k must be odd.
Var conv1d(Var x, Var kernel);

Var reshape(Var a, Shape shape);
/// Rank-2 transpose.
Var transpose(Var a);
/// a[index, ...] with the leading axis removed.
Var select(Var a, std::size_t index);
/// Stacks equally shaped nodes along a new leading axis.
Var stack(const std::vector<Var>& parts);
/// Concatenates along an existing axis.
Var concat(const std::vector<Var>& parts, std::size_t axis);
/// Prepends `count` copies of row 0 to a rank-2 node.
Var pad_front_replicate(Var a, std::size_t count);

}  // namespace afgm
