#pragma once

#include "msdybo/cli/config.hpp"
#include "msdybo/oracle.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace msdybo::cli {

enum ExitCode : int { Success = 0, ConfigFailure = 2, NumericalFailure = 3 };

/// One row of errors.csv.
struct ErrorRow {
    double t = 0.0;
    std::string function;  ///< ubar, u1..um, var
    std::string status;    ///< start or end
    double e2 = 0.0;
};

struct RunOutcome {
    CpuTimes proposed;
    std::optional<CpuTimes> fine;  ///< set when the fine DyBO reference ran alongside
    std::vector<ErrorRow> errors;
    int steps = 0;
    Index final_dimension = 0;
    int energy_violations = 0;
    int residual_increases = 0;
    int enrichment_levels = 0;
    int frozen_steps = 0;
    int recasts = 0;

    /// Fine total over proposed total; nullopt without a fine reference.
    [[nodiscard]] std::optional<double> speedup() const;
};

/// Runs the experiment and writes the artifact directory `out`:
/// manifest.json, errors.csv, enrichment.csv, cpu_time.csv, summary.txt, fields/, states/.
RunOutcome run_experiment(const Config& config, const std::filesystem::path& out, std::ostream& log);

/// Offline space for the configuration, read from or written to `config.offline_cache` when set.
[[nodiscard]] std::shared_ptr<const OfflineSpace> offline_space(const Config& config, const Problem& problem,
                                                                bool* from_cache = nullptr);

/// Table-2 style CPU table: rows Mean ū, Modes u_i, Enrichment, Total; columns fine, proposed.
void write_cpu_table(std::ostream& csv, const CpuTimes& proposed, const std::optional<CpuTimes>& fine);
/// Same, aligned for humans.
void print_cpu_table(std::ostream& out, const CpuTimes& proposed, const std::optional<CpuTimes>& fine);

/// KL fields stored for one report time.
struct StoredFields {
    double t = 0.0;
    int step = 0;
    KLFields fields;
};

/// Report-time fields of a run directory, in manifest order.
[[nodiscard]] std::vector<StoredFields> read_fields(const std::filesystem::path& run_dir);

struct CompareOutcome {
    std::vector<ErrorRow> rows;  ///< status "end"
    double speedup = 0.0;        ///< oracle total / run total
};

/// Errors of `run_dir` against `oracle_dir`; writes compare.csv and compare.txt into `out`.
CompareOutcome compare_runs(const std::filesystem::path& run_dir, const std::filesystem::path& oracle_dir,
                            const std::filesystem::path& out, std::ostream& log);

/// Builds the offline space and writes it to `path` (default: the configured cache path).
void cache_offline(const Config& config, const std::filesystem::path& path, std::ostream& log);

/// Writes the coefficient fields as rasters, the initial fields as nodal CSV and, when `run_dir`
/// is given, every stored report-time field as nodal CSV.
void export_fields(const Config& config, const std::filesystem::path& out, const std::filesystem::path& run_dir,
                   std::ostream& log);

}  // namespace msdybo::cli
