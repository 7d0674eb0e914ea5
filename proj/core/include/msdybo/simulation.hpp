#pragma once

#include "msdybo/dybo.hpp"
#include "msdybo/media.hpp"
#include "msdybo/msbasis.hpp"
#include "msdybo/online.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace msdybo {

/// Deterministic problem data: grid, coefficient, source and initial KL fields (all fine nodes).
struct Problem {
    GridPair grid;
    CoefficientModel model;
    Vector source;  ///< nodal f
    Vector mean0;   ///< nodal ū(·, 0)
    Matrix modes0;  ///< nodal u_i(·, 0), one column per mode
};

enum class InitialCondition {
    Example1,  ///< ū = 32 c₁c₁, u_i = (24, 16, 8, 4) c_{i}c_{i}, c_k = 1 − cos(2kπx)
    Example2,  ///< ū = 4 c₁c₁, u_i = (16, 4, 2) c_{i+1}c_{i+1}
};

/// Cosine-product initial fields on all fine nodes.
void initial_fields(const GridPair& g, InitialCondition ic, Vector& mean, Matrix& modes);
[[nodiscard]] Problem make_problem(const GridPair& g, CoefficientModel model, double source, InitialCondition ic);

enum class SpaceKind { Fine, Multiscale };

struct RunSettings {
    SpaceKind space = SpaceKind::Multiscale;
    Index l_per_node = 4;
    std::vector<Index> l_counts;  ///< overrides l_per_node when non-empty
    Index m = 4;
    double dt = 1e-3;
    int steps = 1000;
    DyboOptions dybo;
    bool online = true;
    EnrichmentOptions enrichment;
    /// Online bases are dropped every `window` steps (0: every step, < 0: never). Within a window the
    /// θ test is relative to the residual of the step that opened it.
    int window = 0;
    bool energy_monitor = false;  ///< fine solve of every step's system for the energy-error history
};

struct StepRecord {
    int n = 0;
    double t = 0.0;
    StepDiagnostics diagnostics;
    std::vector<ResidualReport> levels;
    bool residual_increase = false;
    bool energy_increase = false;
    Index dimension = 0;
};

/// Wall-clock seconds per phase of the time loop.
struct CpuTimes {
    double offline = 0.0;
    double mean = 0.0;
    double modes = 0.0;
    double enrichment = 0.0;
    double total = 0.0;  ///< time loop only
};

/// DyBO time loop in the fine space or the GMsFEM space (optionally with online enrichment).
class Simulation {
public:
    /// `offline` may supply a cached space; otherwise it is built from the problem.
    Simulation(const Problem& problem, const GpcSpace& gpc, RunSettings settings,
               std::shared_ptr<const OfflineSpace> offline = nullptr);

    StepRecord step();

    [[nodiscard]] const RunSettings& settings() const { return settings_; }
    [[nodiscard]] const FineOperators& fine() const { return fine_; }
    [[nodiscard]] const OfflineSpace* offline() const { return offline_.get(); }
    [[nodiscard]] const CpuTimes& times() const { return times_; }
    [[nodiscard]] Index dimension() const;
    [[nodiscard]] int steps_taken() const { return state_.n; }

    /// State in its native coordinates: fine dofs, or coefficients of the current multiscale basis.
    [[nodiscard]] const DyboState& state() const { return state_; }
    /// State on the interior fine dofs.
    [[nodiscard]] DyboState fine_state() const;
    /// Offline-space solution of the last step (before enrichment), on the fine dofs.
    [[nodiscard]] DyboState start_state() const;

    /// Optional fine previous-step mean used inside the residual (verification mode).
    void set_fine_previous_mean(std::function<std::optional<Vector>(int n)> provider)
    {
        fine_previous_ = std::move(provider);
    }

private:
    const Problem* problem_;
    const GpcSpace* gpc_;
    RunSettings settings_;
    FineOperators fine_;
    std::shared_ptr<const OfflineSpace> offline_;
    AssembledOperators ops_;
    std::unique_ptr<DyboStepper> stepper_;
    SystemSolve solve_;
    std::unique_ptr<EnrichedSpace> enriched_;
    std::unique_ptr<ProjectedOperators> blocks_;
    std::unique_ptr<OnlineContext> context_;
    std::unique_ptr<SpdSolver> fine_system_;
    SparseMatrix system_;
    std::vector<double> weights_;
    std::function<std::optional<Vector>(int)> fine_previous_;
    DyboState state_;
    DyboState start_;
    CpuTimes times_;
    bool fine_coordinates_ = true;
    double baseline_ = 0.0;  // level-0 residual sum when the online window opened

    StepRecord enriched_step();
    [[nodiscard]] DyboState prolonged(const DyboState& s) const;
};

}  // namespace msdybo
