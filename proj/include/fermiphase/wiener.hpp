#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fermiphase {

/// Gaussian increments with variance dt for one (trajectory, step), one entry per channel.
struct WienerBatch {
  double dt = 0.0;
  std::vector<double> increments;
};

/// Counter-based: every increment is a pure function of (seed, trajectory, step, channel), so
/// batches can be drawn in any order or in parallel.
WienerBatch draw_wiener(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step, int channels, double dt);

/// Allocation-free variant writing out.size() increments.
void fill_wiener(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step, double dt, std::span<double> out);

}  // namespace fermiphase
