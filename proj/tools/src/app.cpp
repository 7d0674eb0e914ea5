#include "msdybo/cli/app.hpp"

#include "msdybo/cli/runner.hpp"

#include "CLI11.hpp"

#include <ostream>

namespace msdybo::cli {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"DyBO-GMsFEM experiments for stochastic multiscale diffusion", "msdybo"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string run_dir;
    std::string oracle_dir;

    auto* run = app.add_subcommand("run", "run an experiment and write its artifact directory");
    run->add_option("config", config_path, "configuration file")->required();
    run->add_option("-o,--out", out_path, "artifact directory (default: output.dir)");

    auto* compare = app.add_subcommand("compare", "compare a run directory against a reference run");
    compare->add_option("run", run_dir, "run directory")->required();
    compare->add_option("oracle", oracle_dir, "reference run directory")->required();
    compare->add_option("-o,--out", out_path, "report directory (default: <run>/compare)");

    auto* cache = app.add_subcommand("cache-offline", "build the offline space and write the cache file");
    cache->add_option("config", config_path, "configuration file")->required();
    cache->add_option("-o,--out", out_path, "cache file (default: space.offline_cache)");

    auto* exp = app.add_subcommand("export-fields", "write coefficient rasters and nodal field CSVs");
    exp->add_option("config", config_path, "configuration file")->required();
    exp->add_option("-o,--out", out_path, "output directory (default: <output.dir>/export)");
    exp->add_option("--run", run_dir, "run directory whose stored fields are exported");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Success : ConfigFailure;
    }

    try {
        if (*run) {
            const Config c = load_config(config_path);
            const RunOutcome r = run_experiment(c, out_path.empty() ? c.output_dir : std::filesystem::path(out_path), out);
            if (const auto s = r.speedup()) out << "speed-up " << *s << "x\n";
        } else if (*compare) {
            compare_runs(run_dir, oracle_dir,
                         out_path.empty() ? std::filesystem::path(run_dir) / "compare" : std::filesystem::path(out_path),
                         out);
        } else if (*cache) {
            cache_offline(load_config(config_path), out_path, out);
        } else if (*exp) {
            const Config c = load_config(config_path);
            export_fields(c, out_path.empty() ? c.output_dir / "export" : std::filesystem::path(out_path), run_dir, out);
        }
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return ConfigFailure;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return NumericalFailure;
    } catch (const InvalidArgument& e) {
        err << "invalid input: " << e.what() << '\n';
        return ConfigFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return Success;
}

}  // namespace msdybo::cli
