#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qtrap/dynamics.hpp"
#include "qtrap/network.hpp"

namespace qtrap {

// One disorder run: fixed (N, Gamma), R realizations, a shared time grid.
struct EnsembleConfig {
    int n_nodes = 0;
    int realizations = 0;
    double gamma = 1.0;
    double sigma = 3.0;
    double delta_min = 1e-2;
    std::uint64_t master_seed = 0;
    GeometryKind geometry = GeometryKind::disordered3d;
    TimeGrid grid;
    bool exact_survival = false;       // also evaluate the full propagator average
    bool keep_per_realization = false; // retain per-realization records in the result
    std::string checkpoint_dir;        // empty: no per-realization files
    int workers = 1;
};

struct RealizationRecord {
    int index = 0;  // 1-based
    std::uint64_t seed = 0;
    double gamma_r = 0.0;
    long resamples = 0;
    Eigen::VectorXd sorted_rates;            // ascending
    Eigen::VectorXd survival;                // spectral average on the grid
    Eigen::VectorXd survival_exact;          // empty unless exact_survival
    bool loaded_from_checkpoint = false;
};

struct EnsembleResult {
    EnsembleConfig config;
    TimeGrid grid;
    Eigen::VectorXd pi_mean;
    Eigen::VectorXd pi_min;
    Eigen::VectorXd pi_max;
    Eigen::VectorXd jensen_lower;     // from index-averaged sorted rates
    Eigen::VectorXd avg_sorted_rates;
    Eigen::VectorXd pi_exact_mean;    // empty unless exact_survival
    double mean_gamma_r = 0.0;
    long resample_total = 0;
    long loaded_checkpoints = 0;
    double wall_seconds = 0.0;
    std::vector<RealizationRecord> realizations;  // populated when keep_per_realization
};

// Runs one realization end to end: network, Hamiltonian, rates, survival.
// The seed is derived from the master seed and the 1-based index so any
// subset of realizations can be recomputed independently.
RealizationRecord run_realization(const EnsembleConfig& config, int index);

// Runs the full ensemble, averaging in increasing realization order so the
// result is independent of worker count. With a checkpoint directory set,
// finished realizations are written as real_<r>.csv and picked up on rerun.
EnsembleResult run_ensemble(const EnsembleConfig& config);

// Checkpoint round-trip. Files carry the per-realization seed and trap
// strength in a comment line and the sorted rate list in the body; survival
// curves are reconstructed from the rates, which round-trip bit exactly.
void write_realization_checkpoint(const std::string& path, const RealizationRecord& record);
std::optional<RealizationRecord> load_realization_checkpoint(const std::string& path,
                                                             const EnsembleConfig& config,
                                                             int index);

}  // namespace qtrap
