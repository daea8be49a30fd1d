#include "fermiphase/wiener.hpp"

#include <cmath>
#include <numbers>

namespace fermiphase {

namespace {

// splitmix64 finalizer
constexpr std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit_open(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace

void fill_wiener(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step, double dt, std::span<double> out) {
  const double scale = std::sqrt(dt);
  const std::uint64_t key = mix(mix(mix(seed) ^ trajectory) ^ step);
  for (std::size_t pair = 0; 2 * pair < out.size(); ++pair) {
    const std::uint64_t a = mix(key ^ mix(2 * pair));
    const std::uint64_t b = mix(key ^ mix(2 * pair + 1));
    // Box–Muller
    const double r = scale * std::sqrt(-2.0 * std::log(unit_open(a)));
    const double theta = 2.0 * std::numbers::pi * unit_open(b);
    out[2 * pair] = r * std::cos(theta);
    if (2 * pair + 1 < out.size()) out[2 * pair + 1] = r * std::sin(theta);
  }
}

WienerBatch draw_wiener(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step, int channels, double dt) {
  WienerBatch batch{dt, std::vector<double>(static_cast<std::size_t>(std::max(channels, 0)))};
  fill_wiener(seed, trajectory, step, dt, batch.increments);
  return batch;
}

}  // namespace fermiphase
