#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fermiphase/propagator.hpp"

namespace fermiphase {

/// Running mean and second moments (real and imaginary parts separately) of a complex vector.
class ComplexStats {
 public:
  ComplexStats() = default;
  explicit ComplexStats(std::size_t size);

  void add(std::span<const Complex> x);
  /// Chan et al. pairwise update; merging in a fixed order gives a fixed result.
  void merge(const ComplexStats& other);

  std::uint64_t count() const { return n_; }
  std::size_t size() const { return mean_.size(); }
  const std::vector<Complex>& mean() const { return mean_; }
  double stderr_re(std::size_t i) const;
  double stderr_im(std::size_t i) const;

 private:
  std::uint64_t n_ = 0;
  std::vector<Complex> mean_;
  std::vector<double> m2_re_;
  std::vector<double> m2_im_;
};

struct EnsembleOptions {
  std::uint64_t trajectories = 0;
  std::uint64_t seed = 0;
  double divergence_ceiling = 0.01;
  int workers = 0;                 // 0: FERMIPHASE_WORKERS, else hardware concurrency
  std::uint64_t block_size = 1024; // fixed, so the merge tree does not depend on the worker count
};

/// Worker count from the request, the FERMIPHASE_WORKERS environment variable, or the hardware.
int resolve_workers(int requested);

struct EnsembleResult {
  std::vector<ComplexStats> checkpoints;  // one per requested checkpoint
  std::uint64_t n_traj = 0;               // accepted trajectories
  std::uint64_t n_excluded = 0;           // divergent trajectories
  bool aborted = false;                   // excluded fraction above the ceiling
};

/// Fills `out` with the observed values of one trajectory at checkpoint index `c`.  Called
/// concurrently from several workers.
using TrajectoryEvaluator = std::function<void(std::size_t c, const TrajectoryPropagator&, std::span<Complex> out)>;

EnsembleResult run_ensemble(const Propagator& propagator, const EnsembleOptions& options,
                            std::span<const int> checkpoints, std::size_t values_per_checkpoint,
                            const TrajectoryEvaluator& evaluate);

}  // namespace fermiphase
