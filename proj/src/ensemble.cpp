#include "fermiphase/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "fermiphase/error.hpp"

namespace fermiphase {

ComplexStats::ComplexStats(std::size_t size) : mean_(size), m2_re_(size, 0.0), m2_im_(size, 0.0) {}

void ComplexStats::add(std::span<const Complex> x) {
  ++n_;
  const double inv = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    const Complex delta = x[i] - mean_[i];
    mean_[i] += delta * inv;
    const Complex after = x[i] - mean_[i];
    m2_re_[i] += delta.real() * after.real();
    m2_im_[i] += delta.imag() * after.imag();
  }
}

void ComplexStats::merge(const ComplexStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
  const double n = na + nb;
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    const Complex delta = other.mean_[i] - mean_[i];
    mean_[i] += delta * (nb / n);
    m2_re_[i] += other.m2_re_[i] + delta.real() * delta.real() * na * nb / n;
    m2_im_[i] += other.m2_im_[i] + delta.imag() * delta.imag() * na * nb / n;
  }
  n_ += other.n_;
}

double ComplexStats::stderr_re(std::size_t i) const {
  if (n_ < 2) return 0.0;
  const double n = static_cast<double>(n_);
  return std::sqrt(m2_re_[i] / (n - 1.0) / n);
}

double ComplexStats::stderr_im(std::size_t i) const {
  if (n_ < 2) return 0.0;
  const double n = static_cast<double>(n_);
  return std::sqrt(m2_im_[i] / (n - 1.0) / n);
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FERMIPHASE_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 4096) return static_cast<int>(v);
    throw ValidationError(std::string("FERMIPHASE_WORKERS must be a positive integer, got '") + env + "'");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

namespace {

struct BlockResult {
  std::vector<ComplexStats> checkpoints;
  std::uint64_t excluded = 0;
};

}  // namespace

EnsembleResult run_ensemble(const Propagator& propagator, const EnsembleOptions& options,
                            std::span<const int> checkpoints, std::size_t values_per_checkpoint,
                            const TrajectoryEvaluator& evaluate) {
  if (options.trajectories == 0) throw ValidationError("ensemble.trajectories must be positive");
  if (options.block_size == 0) throw ValidationError("ensemble block size must be positive");
  if (!(options.divergence_ceiling >= 0.0 && options.divergence_ceiling <= 1.0)) {
    throw ValidationError("ensemble.divergence_ceiling must lie in [0, 1]");
  }
  const std::size_t n_check = checkpoints.size();
  const std::uint64_t n_blocks = (options.trajectories + options.block_size - 1) / options.block_size;
  std::vector<BlockResult> blocks(n_blocks);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    std::vector<Complex> buffer(n_check * values_per_checkpoint);
    try {
      for (std::uint64_t b = next++; b < n_blocks; b = next++) {
        BlockResult& result = blocks[b];
        result.checkpoints.assign(n_check, ComplexStats(values_per_checkpoint));
        const std::uint64_t first = b * options.block_size;
        const std::uint64_t last = std::min(options.trajectories, first + options.block_size);
        for (std::uint64_t t = first; t < last; ++t) {
          std::size_t seen = 0;
          const auto tp = propagator.propagate(
              options.seed, t, checkpoints, [&](int, const TrajectoryPropagator& p) {
                evaluate(seen, p, std::span<Complex>(buffer).subspan(seen * values_per_checkpoint, values_per_checkpoint));
                ++seen;
              });
          if (tp.divergent || seen != n_check) {
            ++result.excluded;
            continue;
          }
          bool finite = true;
          for (const auto& v : buffer) finite = finite && std::isfinite(v.real()) && std::isfinite(v.imag());
          if (!finite) {
            ++result.excluded;
            continue;
          }
          for (std::size_t c = 0; c < n_check; ++c) {
            result.checkpoints[c].add(std::span<const Complex>(buffer).subspan(c * values_per_checkpoint, values_per_checkpoint));
          }
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = n_blocks;
    }
  };

  const int workers = static_cast<int>(std::min<std::uint64_t>(resolve_workers(options.workers), n_blocks));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  EnsembleResult out;
  out.checkpoints.assign(n_check, ComplexStats(values_per_checkpoint));
  for (const auto& b : blocks) {
    for (std::size_t c = 0; c < n_check; ++c) out.checkpoints[c].merge(b.checkpoints[c]);
    out.n_excluded += b.excluded;
  }
  out.n_traj = options.trajectories - out.n_excluded;
  out.aborted = static_cast<double>(out.n_excluded) > options.divergence_ceiling * static_cast<double>(options.trajectories);
  return out;
}

}  // namespace fermiphase
