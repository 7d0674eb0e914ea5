#include "msdybo/cli/runner.hpp"

#include "msdybo/matrix_io.hpp"

#include "json.hpp"

#include <cmath>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace msdybo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

std::string step_tag(int n)
{
    std::ostringstream s;
    s << 'n' << std::setw(6) << std::setfill('0') << n;
    return s.str();
}

void write_kl(const fs::path& dir, const KLFields& kl)
{
    fs::create_directories(dir);
    write_matrix(dir / "mean.txt", Matrix(kl.mean));
    write_matrix(dir / "modes.txt", kl.modes);
    write_matrix(dir / "A.txt", kl.A);
    write_matrix(dir / "lambda.txt", Matrix(kl.lambda));
}

void write_state(const fs::path& dir, const DyboState& s)
{
    fs::create_directories(dir);
    write_matrix(dir / "u0.txt", Matrix(s.u0));
    write_matrix(dir / "U.txt", s.U);
    write_matrix(dir / "A.txt", s.A);
    const Vector lambda = s.U.colwise().squaredNorm().transpose();
    write_matrix(dir / "U_norms.txt", Matrix(lambda));
    Matrix t(1, 2);
    t << s.n, s.t;
    write_matrix(dir / "time.txt", t);
}

void append_errors(std::vector<ErrorRow>& rows, double t, const std::string& status, const FieldErrors& e)
{
    rows.push_back({t, "ubar", status, e.mean});
    for (std::size_t k = 0; k < e.modes.size(); ++k) rows.push_back({t, "u" + std::to_string(k + 1), status, e.modes[k]});
    rows.push_back({t, "var", status, e.variance});
}

/// Step index of every report time.
std::map<int, double> report_steps(const Config& c)
{
    std::map<int, double> out;
    for (const double t : c.report_times) out.emplace(static_cast<int>(std::llround(t / c.dt)), t);
    return out;
}

double pct(double x)
{
    return 100.0 * x;
}

}  // namespace

std::optional<double> RunOutcome::speedup() const
{
    if (!fine || !(proposed.total > 0.0)) return std::nullopt;
    return fine->total / proposed.total;
}

std::shared_ptr<const OfflineSpace> offline_space(const Config& c, const Problem& problem, bool* from_cache)
{
    const std::uint64_t hash = fnv1a(offline_key(c));
    if (from_cache) *from_cache = false;
    if (!c.offline_cache.empty() && fs::exists(c.offline_cache)) {
        try {
            auto space = std::make_shared<const OfflineSpace>(read_offline_cache(c.offline_cache, hash));
            if (from_cache) *from_cache = true;
            return space;
        } catch (const InvalidArgument& e) {
            throw ConfigError("space.offline_cache: " + std::string(e.what()));
        }
    }
    auto space = std::make_shared<const OfflineSpace>(
        build_offline_space(problem.grid, problem.model.mean(), c.l_per_node));
    if (!c.offline_cache.empty()) {
        if (c.offline_cache.has_parent_path()) fs::create_directories(c.offline_cache.parent_path());
        write_offline_cache(c.offline_cache, *space, hash);
    }
    return space;
}

void write_cpu_table(std::ostream& csv, const CpuTimes& proposed, const std::optional<CpuTimes>& fine)
{
    const auto cell = [&](double CpuTimes::*field) {
        std::ostringstream s;
        s << std::setprecision(17);
        if (fine) s << (*fine).*field;
        s << ',' << proposed.*field;
        return s.str();
    };
    csv << "function,fine_scale_solver,proposed_solver\n";
    csv << "Mean ubar," << cell(&CpuTimes::mean) << '\n';
    csv << "Modes u_i," << cell(&CpuTimes::modes) << '\n';
    csv << "Enrichment," << cell(&CpuTimes::enrichment) << '\n';
    csv << "Total," << cell(&CpuTimes::total) << '\n';
}

void print_cpu_table(std::ostream& out, const CpuTimes& proposed, const std::optional<CpuTimes>& fine)
{
    const auto row = [&](const char* name, double CpuTimes::*field) {
        out << std::left << std::setw(14) << name << std::right << std::setw(18);
        if (fine) {
            out << std::fixed << std::setprecision(4) << (*fine).*field;
        } else {
            out << "-";
        }
        out << std::setw(18) << std::fixed << std::setprecision(4) << proposed.*field << '\n';
    };
    out << std::left << std::setw(14) << "function" << std::right << std::setw(18) << "Fine-scale (s)"
        << std::setw(18) << "Proposed (s)" << '\n';
    row("Mean ubar", &CpuTimes::mean);
    row("Modes u_i", &CpuTimes::modes);
    row("Enrichment", &CpuTimes::enrichment);
    row("Total", &CpuTimes::total);
    out.unsetf(std::ios::floatfield);
}

RunOutcome run_experiment(const Config& c, const fs::path& out, std::ostream& log)
{
    // problem construction failures are configuration errors
    std::unique_ptr<Problem> problem;
    std::unique_ptr<GpcSpace> gpc;
    try {
        problem = std::make_unique<Problem>(build_problem(c));
        gpc = std::make_unique<GpcSpace>(c.r, c.p);
    } catch (const InvalidArgument& e) {
        throw ConfigError(c.source.string() + ": " + e.what());
    }

    fs::create_directories(out);
    std::shared_ptr<const OfflineSpace> offline;
    bool cached = false;
    double offline_seconds = 0.0;
    if (c.space == SpaceKind::Multiscale) {
        const auto t0 = std::chrono::steady_clock::now();
        offline = offline_space(c, *problem, &cached);
        offline_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    Simulation sim(*problem, *gpc, run_settings(c, c.space), offline);
    std::unique_ptr<Simulation> fine;
    if (c.reference == Reference::Fine) {
        fine = std::make_unique<Simulation>(*problem, *gpc, run_settings(c, SpaceKind::Fine));
        if (c.verification) {
            const Simulation* f = fine.get();
            sim.set_fine_previous_mean([f](int n) -> std::optional<Vector> {
                if (f->steps_taken() != n) return std::nullopt;
                return f->fine_state().u0;
            });
        }
    }
    const SparseMatrix& mass = sim.fine().mass;
    const auto reports = report_steps(c);

    std::map<int, KLFields> galerkin;
    if (c.reference == Reference::Galerkin) {
        log << "running the gPC-Galerkin reference\n";
        Simulation probe(*problem, *gpc, run_settings(c, SpaceKind::Fine));
        const DyboState s0 = probe.fine_state();
        const Matrix init = galerkin_blocks(s0.u0, s0.U, s0.A);
        try {
            gpc_galerkin_solve(probe.fine(), *gpc, init, c.dt, c.steps(), [&](int n, double, const Matrix& blocks) {
                if (reports.count(n)) galerkin.emplace(n, kl_extract(blocks, mass, c.m));
            });
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("run.reference = galerkin: ") + e.what());
        }
    }

    log << "grid " << c.n_coarse << "x" << c.n_coarse << " coarse, " << c.n_fine_per_coarse
        << " fine per cell; space dimension " << sim.dimension() << "; " << c.steps() << " steps\n";
    if (offline) log << "offline space: " << offline->dimension() << " columns" << (cached ? " (cached)" : "") << '\n';

    std::ofstream enr = open_out(out / "enrichment.csv");
    enr << "n,t,round,selected,residual_sum,energy_error,dimension,dropped\n";
    RunOutcome res;
    res.steps = c.steps();
    json manifest_fields = json::array();

    for (int n = 1; n <= c.steps(); ++n) {
        StepRecord rec;
        try {
            rec = sim.step();
            if (fine) fine->step();
        } catch (const NumericalError&) {
            write_state(out / "failure" / "proposed", sim.state());
            std::ofstream(out / "failure" / "step.txt") << n << '\n';
            throw;
        }
        res.frozen_steps += rec.diagnostics.frozen ? 1 : 0;
        res.recasts += rec.diagnostics.recast ? 1 : 0;
        res.energy_violations += rec.energy_increase ? 1 : 0;
        res.residual_increases += rec.residual_increase ? 1 : 0;
        for (const ResidualReport& lv : rec.levels) {
            ++res.enrichment_levels;
            std::string sel;
            for (const Index i : lv.selected) sel += (sel.empty() ? "" : ";") + std::to_string(i);
            enr << n << ',' << rec.t << ',' << lv.level << ',' << sel << ',' << lv.residual_sum << ',';
            if (!std::isnan(lv.energy_error)) enr << lv.energy_error;
            enr << ',' << lv.dimension << ',' << lv.dropped << '\n';
        }
        if (c.state_stride > 0 && n % c.state_stride == 0) write_state(out / "states" / step_tag(n), sim.state());

        const auto it = reports.find(n);
        if (it == reports.end()) continue;
        const double t = it->second;
        const KLFields end = kl_from_state(sim.fine_state(), mass);
        write_kl(out / "fields" / step_tag(n), end);
        manifest_fields.push_back({{"step", n}, {"t", t}, {"dir", "fields/" + step_tag(n)}});

        std::optional<KLFields> ref;
        if (fine) ref = kl_from_state(fine->fine_state(), mass);
        if (galerkin.count(n)) ref = galerkin.at(n);
        if (ref) {
            const KLFields start = kl_from_state(sim.start_state(), mass);
            const FieldErrors es = compare_fields(*ref, start, mass);
            const FieldErrors ee = compare_fields(*ref, end, mass);
            append_errors(res.errors, t, "start", es);
            append_errors(res.errors, t, "end", ee);
            log << "t=" << t << "  ubar " << std::setprecision(4) << pct(es.mean) << "% -> " << pct(ee.mean)
                << "%  var " << pct(es.variance) << "% -> " << pct(ee.variance) << "%  dim " << rec.dimension
                << std::setprecision(6) << '\n';
        } else {
            log << "t=" << t << "  dim " << rec.dimension << '\n';
        }
    }
    res.final_dimension = sim.dimension();
    res.proposed = sim.times();
    if (fine) res.fine = fine->times();

    std::ofstream err = open_out(out / "errors.csv");
    err << "t,function,status,e2\n";
    for (const ErrorRow& r : res.errors) err << r.t << ',' << r.function << ',' << r.status << ',' << r.e2 << '\n';

    std::ofstream cpu = open_out(out / "cpu_time.csv");
    write_cpu_table(cpu, res.proposed, res.fine);

    json manifest = {
        {"format", "msdybo-run 1"},
        {"problem_hash", hex64(fnv1a(problem_key(c)))},
        {"example", c.example},
        {"n_coarse", c.n_coarse},
        {"n_fine_per_coarse", c.n_fine_per_coarse},
        {"space", c.space == SpaceKind::Fine ? "fine" : "multiscale"},
        {"online", c.space == SpaceKind::Multiscale && c.online},
        {"steps", res.steps},
        {"dt", c.dt},
        {"m", c.m},
        {"final_dimension", res.final_dimension},
        {"fields", manifest_fields},
    };
    open_out(out / "manifest.json") << manifest.dump(2) << '\n';

    std::ofstream sum = open_out(out / "summary.txt");
    sum << "example " << c.example << ", " << (c.space == SpaceKind::Fine ? "fine" : "multiscale") << " space";
    if (c.space == SpaceKind::Multiscale) sum << (c.online ? " with online enrichment" : " (offline only)");
    sum << "\nsteps " << res.steps << ", dt " << c.dt << ", m " << c.m << ", final dimension " << res.final_dimension
        << "\nfrozen steps " << res.frozen_steps << ", recasts " << res.recasts << "\n";
    if (c.space == SpaceKind::Multiscale && c.online) {
        sum << "enrichment levels " << res.enrichment_levels << ", residual increases " << res.residual_increases
            << ", energy increases " << res.energy_violations << "\n";
    }
    if (!res.errors.empty()) {
        sum << "\nL2 errors (%)\n";
        sum << std::left << std::setw(8) << "t" << std::setw(10) << "function" << std::right << std::setw(12) << "start"
            << std::setw(12) << "end" << '\n';
        for (std::size_t i = 0; i < res.errors.size(); ++i) {
            const ErrorRow& s = res.errors[i];
            if (s.status != "start") continue;
            const auto e = std::find_if(res.errors.begin(), res.errors.end(), [&](const ErrorRow& r) {
                return r.status == "end" && r.t == s.t && r.function == s.function;
            });
            sum << std::left << std::setw(8) << std::setprecision(4) << s.t << std::setw(10) << s.function << std::right
                << std::fixed << std::setw(12) << pct(s.e2) << std::setw(12) << pct(e->e2) << '\n';
            sum.unsetf(std::ios::floatfield);
        }
    }
    sum << "\nCPU times (time loop only; offline construction " << std::setprecision(4)
        << offline_seconds << " s" << (cached ? ", read from cache" : "") << ")\n";
    print_cpu_table(sum, res.proposed, res.fine);
    if (const auto s = res.speedup()) sum << "speed-up " << std::setprecision(4) << *s << "x\n";
    return res;
}

}  // namespace msdybo::cli
