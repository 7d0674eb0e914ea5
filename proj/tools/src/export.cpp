#include "msdybo/cli/runner.hpp"

#include "msdybo/matrix_io.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace msdybo::cli {

namespace fs = std::filesystem;

namespace {

/// x, y and one column per field on all fine nodes; boundary values are zero.
void write_nodal(const fs::path& path, const GridPair& g, const std::vector<std::pair<std::string, Vector>>& fields)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(17) << "x,y";
    std::vector<Vector> all;
    for (const auto& [name, v] : fields) {
        out << ',' << name;
        all.push_back(v.size() == g.num_fine_nodes() ? v : extend_from(v, g.interior_dofs(), g.num_fine_nodes()));
    }
    out << '\n';
    for (Index k = 0; k < g.num_fine_nodes(); ++k) {
        const Eigen::Vector2d x = g.node_coords(k);
        out << x[0] << ',' << x[1];
        for (const Vector& v : all) out << ',' << v[k];
        out << '\n';
    }
}

std::vector<std::pair<std::string, Vector>> kl_columns(const Vector& mean, const Matrix& modes)
{
    std::vector<std::pair<std::string, Vector>> cols{{"ubar", mean}, {"var", variance_field(modes)}};
    for (Index k = 0; k < modes.cols(); ++k) cols.emplace_back("u" + std::to_string(k + 1), modes.col(k));
    return cols;
}

}  // namespace

void cache_offline(const Config& config, const fs::path& path, std::ostream& log)
{
    Config c = config;
    c.offline_cache = path.empty() ? config.offline_cache : path;
    if (c.offline_cache.empty()) throw ConfigError("no cache path: set space.offline_cache or pass --out");
    if (fs::exists(c.offline_cache)) fs::remove(c.offline_cache);
    Problem problem = [&] {
        try {
            return build_problem(c);
        } catch (const InvalidArgument& e) {
            throw ConfigError(c.source.string() + ": " + e.what());
        }
    }();
    const auto space = offline_space(c, problem);
    log << "wrote " << c.offline_cache.string() << ": " << space->dimension() << " columns, hash "
        << hex64(fnv1a(offline_key(c))) << '\n';
}

void export_fields(const Config& config, const fs::path& out, const fs::path& run_dir, std::ostream& log)
{
    Problem problem = [&] {
        try {
            return build_problem(config);
        } catch (const InvalidArgument& e) {
            throw ConfigError(config.source.string() + ": " + e.what());
        }
    }();
    const GridPair& g = problem.grid;
    fs::create_directories(out);
    raster_export(out / "abar.txt", g, problem.model.mean());
    for (int i = 0; i < problem.model.r(); ++i) {
        raster_export(out / ("a" + std::to_string(i + 1) + ".txt"), g, problem.model.fluctuation(i));
    }
    write_nodal(out / "initial.csv", g, kl_columns(problem.mean0, problem.modes0));
    int count = 0;
    if (!run_dir.empty()) {
        for (const StoredFields& s : read_fields(run_dir)) {
            if (s.fields.mean.size() != g.interior_dofs().size()) {
                throw ConfigError(run_dir.string() + ": stored fields do not match the configured grid");
            }
            std::ostringstream name;
            name << "fields_n" << std::setw(6) << std::setfill('0') << s.step << ".csv";
            write_nodal(out / name.str(), g, kl_columns(s.fields.mean, s.fields.modes));
            ++count;
        }
    }
    log << "wrote " << (problem.model.r() + 1) << " coefficient rasters, initial.csv";
    if (count > 0) log << " and " << count << " field snapshots";
    log << " to " << out.string() << '\n';
}

}  // namespace msdybo::cli
