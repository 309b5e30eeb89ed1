#pragma once

#include <span>

namespace cmla {

/// Percentile p in [0, 100] by linear interpolation between order
/// statistics: with sorted v_1..v_n and h = (n - 1) p / 100, returns
/// v_{floor(h)+1} + (h - floor(h)) (v_{floor(h)+2} - v_{floor(h)+1}).
double percentile(std::span<const double> values, double p);

}  // namespace cmla
