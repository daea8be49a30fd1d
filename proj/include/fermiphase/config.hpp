#pragma once

// Experiment configuration (JSON) and the run/exact drivers used by the command-line tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fermiphase/models.hpp"
#include "fermiphase/observables.hpp"
#include "fermiphase/propagator.hpp"
#include "fermiphase/results.hpp"

namespace fermiphase {

enum class ObservableKind { population, coherence, momentum };

struct ObservableRequest {
  std::string id;
  ObservableKind kind = ObservableKind::population;
  std::vector<Slot> bra;  // population: the occupied slots
  std::vector<Slot> ket;
};

struct OutputSpec {
  std::filesystem::path directory = ".";
  std::string name = "results";
  bool csv = true;
  bool json = true;
  bool plot = false;
};

struct ExperimentConfig {
  nlohmann::json source;  // as parsed, for hashing
  bool multi_component = false;
  TwoComponentModel two;
  MultiComponentModel multi;
  GridSpec grid;
  StepScheme scheme;
  int checkpoint_every = 0;  // 0: only the final step (and t = 0)
  EnsembleOptions ensemble;
  Basis initial_basis = Basis::position;
  std::vector<StateTerm> initial_terms;
  std::vector<ObservableRequest> observables;
  OutputSpec output;
  double takagi_tolerance = 1e-10;

  int components() const { return multi_component ? multi.components : 2; }
  TensorLayout layout() const { return {grid, components()}; }
  std::vector<int> checkpoints() const;
  int particle_number() const;
};

/// Parses and validates; errors are ValidationError with a path to the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

DriftNoiseCoefficients build_coefficients(const ExperimentConfig& config);
ModeHamiltonian build_mode_hamiltonian(const ExperimentConfig& config);

/// FNV-1a over the canonical JSON dump; `model_hash` covers only the fields that define the
/// physical quantities (model, grid, scheme timing, initial state, observables).
std::string config_hash(const ExperimentConfig& config);
std::string model_hash(const ExperimentConfig& config);

/// Stochastic run.  The table is marked partial when the divergence ceiling was exceeded.
ResultTable run_stochastic(const ExperimentConfig& config);

/// Exact oracle evaluation at the same checkpoints (needs at most 8 modes).
ResultTable run_exact(const ExperimentConfig& config);

}  // namespace fermiphase
