#include "msdybo/cli/runner.hpp"

#include "msdybo/matrix_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace msdybo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_manifest(const fs::path& dir)
{
    if (!fs::is_directory(dir)) throw ConfigError(dir.string() + ": no such run directory");
    const fs::path path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": missing run manifest");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

double proposed_total(const fs::path& dir)
{
    std::ifstream in(dir / "cpu_time.csv");
    if (!in) throw ConfigError((dir / "cpu_time.csv").string() + ": missing");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("Total,", 0) != 0) continue;
        const auto comma = line.rfind(',');
        return std::stod(line.substr(comma + 1));
    }
    throw ConfigError((dir / "cpu_time.csv").string() + ": no Total row");
}

}  // namespace

std::vector<StoredFields> read_fields(const fs::path& run_dir)
{
    const json manifest = read_manifest(run_dir);
    std::vector<StoredFields> out;
    for (const auto& entry : manifest.at("fields")) {
        const fs::path dir = run_dir / entry.at("dir").get<std::string>();
        StoredFields s;
        s.step = entry.at("step").get<int>();
        s.t = entry.at("t").get<double>();
        s.fields.mean = read_matrix(dir / "mean.txt").col(0);
        s.fields.modes = read_matrix(dir / "modes.txt");
        s.fields.A = read_matrix(dir / "A.txt");
        s.fields.lambda = read_matrix(dir / "lambda.txt").col(0);
        out.push_back(std::move(s));
    }
    return out;
}

CompareOutcome compare_runs(const fs::path& run_dir, const fs::path& oracle_dir, const fs::path& out, std::ostream& log)
{
    const json run = read_manifest(run_dir);
    const json oracle = read_manifest(oracle_dir);
    if (run.at("problem_hash") != oracle.at("problem_hash")) {
        throw ConfigError("problem hash mismatch: " + run_dir.string() + " has " +
                          run.at("problem_hash").get<std::string>() + ", " + oracle_dir.string() + " has " +
                          oracle.at("problem_hash").get<std::string>());
    }
    const auto a = read_fields(run_dir);
    const auto b = read_fields(oracle_dir);
    std::map<int, const StoredFields*> by_step;
    for (const auto& s : b) by_step.emplace(s.step, &s);

    const GridPair grid(run.at("n_coarse").get<Index>(), run.at("n_fine_per_coarse").get<Index>());
    const SparseMatrix mass = assemble_mass(grid, grid.interior_dofs()).matrix;
    CompareOutcome res;
    for (const auto& s : a) {
        const auto it = by_step.find(s.step);
        if (it == by_step.end()) continue;
        if (s.fields.mean.size() != mass.rows() || it->second->fields.mean.size() != mass.rows()) {
            throw ConfigError("stored fields do not match the grid in the manifest");
        }
        const FieldErrors e = compare_fields(it->second->fields, s.fields, mass);
        res.rows.push_back({s.t, "ubar", "end", e.mean});
        for (std::size_t k = 0; k < e.modes.size(); ++k) {
            res.rows.push_back({s.t, "u" + std::to_string(k + 1), "end", e.modes[k]});
        }
        res.rows.push_back({s.t, "var", "end", e.variance});
    }
    if (res.rows.empty()) throw ConfigError("the two runs share no report time");
    const double t_run = proposed_total(run_dir);
    const double t_oracle = proposed_total(oracle_dir);
    res.speedup = t_run > 0.0 ? t_oracle / t_run : 0.0;

    fs::create_directories(out);
    std::ofstream csv(out / "compare.csv");
    csv << std::setprecision(17) << "t,function,e2\n";
    for (const auto& r : res.rows) csv << r.t << ',' << r.function << ',' << r.e2 << '\n';

    std::map<std::string, std::pair<double, std::vector<double>>> stats;
    std::vector<std::string> order;
    for (const auto& r : res.rows) {
        if (!stats.count(r.function)) order.push_back(r.function);
        auto& s = stats[r.function];
        s.first = std::max(s.first, r.e2);
        s.second.push_back(r.e2);
    }
    std::ostringstream txt;
    txt << "run    " << run_dir.string() << "\noracle " << oracle_dir.string() << "\n\n";
    txt << std::left << std::setw(10) << "function" << std::right << std::setw(14) << "max e2 (%)" << std::setw(14)
        << "mean e2 (%)" << '\n';
    for (const auto& f : order) {
        const auto& [mx, all] = stats[f];
        double mean = 0.0;
        for (const double x : all) mean += x;
        mean /= static_cast<double>(all.size());
        txt << std::left << std::setw(10) << f << std::right << std::fixed << std::setprecision(4) << std::setw(14)
            << 100.0 * mx << std::setw(14) << 100.0 * mean << '\n';
    }
    txt << "\nCPU time (loop): run " << t_run << " s, oracle " << t_oracle << " s, speed-up " << std::setprecision(2)
        << res.speedup << "x\n";
    std::ofstream(out / "compare.txt") << txt.str();
    log << txt.str();
    return res;
}

}  // namespace msdybo::cli
