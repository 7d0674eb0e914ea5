#pragma once

#include "msdybo/simulation.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace msdybo::cli {

/// Bad configuration; the message carries the file, line (when known) and key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Reference { None, Fine, Galerkin };
enum class MeanKind { Channels, Constant, Raster };
enum class FluctuationKind { Example1, Example2, None };

struct Config {
    std::filesystem::path source;
    int example = 1;
    Reference reference = Reference::Fine;

    Index n_coarse = 10;
    Index n_fine_per_coarse = 10;

    MeanKind mean = MeanKind::Channels;
    double background = 4.0;
    double contrast = 1000.0;
    int channels = 12;
    std::uint64_t seed = 7;
    double constant = 4.0;
    std::filesystem::path raster;
    double raster_scale = 1.0;
    FluctuationKind fluctuations = FluctuationKind::Example1;
    double source_value = 1.0;

    int r = 3;
    int p = 2;

    Index m = 4;
    double dt = 1e-3;
    double T = 1.0;
    int recast_stride = 20;
    double rotation_limit = 0.5;
    double drift_tolerance = 1e-6;

    SpaceKind space = SpaceKind::Multiscale;
    Index l_per_node = 4;
    std::filesystem::path offline_cache;

    bool online = true;
    double theta = 0.05;
    int max_rounds = 5;
    EnrichComponents components = EnrichComponents::All;
    int window = 0;
    bool energy_monitor = false;
    bool verification = false;

    std::filesystem::path output_dir = "out";
    std::vector<double> report_times;
    int state_stride = 0;

    [[nodiscard]] int steps() const;
    [[nodiscard]] InitialCondition initial_condition() const;
};

/// Reads an INI file. Unknown sections/keys and malformed values are ConfigErrors.
[[nodiscard]] Config load_config(const std::filesystem::path& path);
/// Same, from text (`name` is used in diagnostics and to resolve relative paths).
[[nodiscard]] Config parse_config(const std::string& text, const std::filesystem::path& name = "<config>");
/// Cross-field checks (m ≤ N_p, r matches the fluctuations, ...).
void validate(const Config& c);

/// Canonical text of the keys that determine the reference problem (grid, media, gpc, time stepping).
[[nodiscard]] std::string problem_key(const Config& c);
/// Same plus the offline space parameters.
[[nodiscard]] std::string offline_key(const Config& c);

[[nodiscard]] Problem build_problem(const Config& c);
[[nodiscard]] RunSettings run_settings(const Config& c, SpaceKind space);

}  // namespace msdybo::cli
