#pragma once

#include <cstdint>

#include "retarda/history.hpp"

namespace retarda {

/// Random piecewise-constant (generally discontinuous) history on
/// [-span, 0): `pieces` uniform intervals with values drawn uniformly from
/// the radius-r Euclidean ball, plus an independently drawn point value.
/// The norm is <= r by construction. Deterministic in the seed.
PiecewiseHistory sample_history(std::size_t dim, double span, double r, std::size_t pieces,
                                std::uint64_t seed);

/// Random continuous piecewise-linear history: knot values drawn uniformly
/// from the radius-r ball, linearly interpolated; point value is the knot at
/// 0. The sup-norm is <= r by construction.
ContinuousHistory sample_continuous_history(std::size_t dim, double span, double r,
                                            std::size_t knots, std::uint64_t seed);

/// Worst-case shift-discontinuity shape: 0 on [-span, -span/2], `level` after
/// it, point value `level`. The canonical example of a history whose segment
/// distance to its own shift stays at |level| for small positive times.
PiecewiseHistory step_history(std::size_t dim, double span, double level);

} // namespace retarda
