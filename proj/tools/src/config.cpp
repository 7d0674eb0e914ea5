#include "msdybo/cli/config.hpp"

#include "msdybo/gpc.hpp"
#include "msdybo/media.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace msdybo::cli {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s)
{
    const auto blank = [](unsigned char ch) { return std::isspace(ch) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), blank));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), blank).base(), s.end());
    return s;
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return s;
}

/// Decimal or a/b.
std::optional<double> parse_real(const std::string& token)
{
    const auto whole = [](const std::string& t) -> std::optional<double> {
        try {
            std::size_t used = 0;
            const double x = std::stod(t, &used);
            if (used != t.size()) return std::nullopt;
            return x;
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
    const auto slash = token.find('/');
    if (slash == std::string::npos) return whole(trim(token));
    const auto a = whole(trim(token.substr(0, slash)));
    const auto b = whole(trim(token.substr(slash + 1)));
    if (!a || !b || *b == 0.0) return std::nullopt;
    return *a / *b;
}

const std::map<std::string, std::set<std::string>>& schema()
{
    static const std::map<std::string, std::set<std::string>> keys = {
        {"run", {"example", "reference"}},
        {"grid", {"n_coarse", "n_fine_per_coarse"}},
        {"media", {"mean", "background", "contrast", "channels", "seed", "constant", "raster", "raster_scale",
                   "fluctuations", "source"}},
        {"gpc", {"r", "p"}},
        {"dybo", {"m", "dt", "T", "recast_stride", "rotation_limit", "drift_tolerance"}},
        {"space", {"kind", "l_per_node", "offline_cache"}},
        {"online", {"enabled", "theta", "max_rounds", "components", "window", "energy_monitor", "verification"}},
        {"output", {"dir", "report_times", "state_stride"}},
    };
    return keys;
}

/// Finds the line of `section.key` in the raw text for diagnostics.
class Locator {
public:
    Locator(const std::string& text, std::filesystem::path name) : name_(std::move(name))
    {
        std::istringstream in(text);
        std::string line;
        std::string section;
        for (int no = 1; std::getline(in, line); ++no) {
            const std::string t = trim(line);
            if (t.empty() || t[0] == ';' || t[0] == '#') continue;
            if (t.front() == '[' && t.back() == ']') {
                section = trim(t.substr(1, t.size() - 2));
                lines_.emplace(section, no);
                continue;
            }
            const auto eq = t.find('=');
            if (eq != std::string::npos) lines_.emplace(section + "." + trim(t.substr(0, eq)), no);
        }
    }

    [[nodiscard]] std::string where(const std::string& key) const
    {
        const auto it = lines_.find(key);
        std::string out = name_.string();
        if (it != lines_.end()) out += ":" + std::to_string(it->second);
        return out + ": " + key;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const
    {
        throw ConfigError(where(key) + ": " + what);
    }

private:
    std::filesystem::path name_;
    std::map<std::string, int> lines_;
};

class Reader {
public:
    Reader(const pt::ptree& tree, const Locator& loc) : tree_(tree), loc_(loc) {}

    [[nodiscard]] std::optional<std::string> raw(const std::string& key) const
    {
        if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'))) return trim(*v);
        return std::nullopt;
    }

    template <class T>
    void number(const std::string& key, T& out) const
    {
        const auto v = raw(key);
        if (!v) return;
        if constexpr (std::is_floating_point_v<T>) {
            const auto x = parse_real(*v);
            if (!x) loc_.fail(key, "expected a number, got '" + *v + "'");
            if (!std::isfinite(*x)) loc_.fail(key, "value must be finite");
            out = *x;
        } else {
            std::istringstream in(*v);
            T x{};
            in >> x;
            if (in.fail() || !(in >> std::ws).eof()) loc_.fail(key, "expected an integer, got '" + *v + "'");
            out = x;
        }
    }

    void flag(const std::string& key, bool& out) const
    {
        const auto v = raw(key);
        if (!v) return;
        const std::string s = lower(*v);
        if (s == "true" || s == "yes" || s == "on" || s == "1") {
            out = true;
        } else if (s == "false" || s == "no" || s == "off" || s == "0") {
            out = false;
        } else {
            loc_.fail(key, "expected true/false, got '" + *v + "'");
        }
    }

    template <class E>
    void choice(const std::string& key, E& out, const std::map<std::string, E>& options) const
    {
        const auto v = raw(key);
        if (!v) return;
        const auto it = options.find(lower(*v));
        if (it == options.end()) {
            std::string names;
            for (const auto& [name, _] : options) names += (names.empty() ? "" : ", ") + name;
            loc_.fail(key, "unknown value '" + *v + "' (expected one of: " + names + ")");
        }
        out = it->second;
    }

    void times(const std::string& key, std::vector<double>& out) const
    {
        const auto v = raw(key);
        if (!v) return;
        out.clear();
        std::string token;
        std::istringstream in(*v);
        while (std::getline(in, token, ',')) {
            token = trim(token);
            if (token.empty()) continue;
            const auto value = parse_real(token);
            if (!value) loc_.fail(key, "cannot parse time '" + token + "'");
            out.push_back(*value);
        }
    }

private:
    const pt::ptree& tree_;
    const Locator& loc_;
};

void apply_example_defaults(Config& c)
{
    switch (c.example) {
    case 1:
        break;
    case 2:
        c.background = 1.0;
        c.contrast = 100.0;
        c.fluctuations = FluctuationKind::Example2;
        c.r = 4;
        c.m = 3;
        break;
    case 3:
        c.n_fine_per_coarse = 40;
        c.dt = 1.0 / 80.0;
        c.max_rounds = 2;
        c.components = EnrichComponents::Mean;
        c.window = -1;
        break;
    default:
        break;
    }
    if (c.example == 3) {
        c.report_times = {1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0, 3.0 / 4.0, 1.0};
    } else {
        c.report_times = {0.1, 0.2, 0.4, 0.8, 1.0};
    }
}

std::string fmt(double x)
{
    std::ostringstream out;
    out.precision(17);
    out << x;
    return out.str();
}

}  // namespace

int Config::steps() const
{
    return static_cast<int>(std::llround(T / dt));
}

InitialCondition Config::initial_condition() const
{
    return example == 2 ? InitialCondition::Example2 : InitialCondition::Example1;
}

Config parse_config(const std::string& text, const std::filesystem::path& name)
{
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(name.string() + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    const Locator loc(text, name);
    for (const auto& [section, body] : tree) {
        const auto it = schema().find(section);
        if (it == schema().end()) {
            if (!body.data().empty()) loc.fail(section, "key outside any section");
            loc.fail(section, "unknown section");
        }
        for (const auto& [key, value] : body) {
            if (!value.empty()) loc.fail(section + "." + key, "nested keys are not supported");
            if (!it->second.count(key)) loc.fail(section + "." + key, "unknown key");
        }
    }

    const Reader rd(tree, loc);
    Config c;
    c.source = name;
    rd.number("run.example", c.example);
    if (c.example < 1 || c.example > 3) loc.fail("run.example", "must be 1, 2 or 3");
    apply_example_defaults(c);

    rd.choice("run.reference", c.reference,
              {{"none", Reference::None}, {"fine", Reference::Fine}, {"galerkin", Reference::Galerkin}});
    rd.number("grid.n_coarse", c.n_coarse);
    rd.number("grid.n_fine_per_coarse", c.n_fine_per_coarse);

    rd.choice("media.mean", c.mean,
              {{"channels", MeanKind::Channels}, {"constant", MeanKind::Constant}, {"raster", MeanKind::Raster}});
    rd.number("media.background", c.background);
    rd.number("media.contrast", c.contrast);
    rd.number("media.channels", c.channels);
    rd.number("media.seed", c.seed);
    rd.number("media.constant", c.constant);
    if (const auto v = rd.raw("media.raster")) {
        c.raster = *v;
        if (c.raster.is_relative() && name.has_parent_path()) c.raster = name.parent_path() / c.raster;
    }
    rd.number("media.raster_scale", c.raster_scale);
    rd.choice("media.fluctuations", c.fluctuations,
              {{"example1", FluctuationKind::Example1}, {"example2", FluctuationKind::Example2},
               {"none", FluctuationKind::None}});
    rd.number("media.source", c.source_value);

    rd.number("gpc.r", c.r);
    rd.number("gpc.p", c.p);

    rd.number("dybo.m", c.m);
    rd.number("dybo.dt", c.dt);
    rd.number("dybo.T", c.T);
    rd.number("dybo.recast_stride", c.recast_stride);
    rd.number("dybo.rotation_limit", c.rotation_limit);
    rd.number("dybo.drift_tolerance", c.drift_tolerance);

    rd.choice("space.kind", c.space, {{"multiscale", SpaceKind::Multiscale}, {"fine", SpaceKind::Fine}});
    rd.number("space.l_per_node", c.l_per_node);
    if (const auto v = rd.raw("space.offline_cache")) c.offline_cache = *v;

    rd.flag("online.enabled", c.online);
    rd.number("online.theta", c.theta);
    rd.number("online.max_rounds", c.max_rounds);
    rd.choice("online.components", c.components, {{"all", EnrichComponents::All}, {"mean", EnrichComponents::Mean}});
    rd.number("online.window", c.window);
    rd.flag("online.energy_monitor", c.energy_monitor);
    rd.flag("online.verification", c.verification);

    if (const auto v = rd.raw("output.dir")) c.output_dir = *v;
    rd.times("output.report_times", c.report_times);
    rd.number("output.state_stride", c.state_stride);

    // range checks that need only one key, reported with the key's line
    if (c.n_coarse < 2) loc.fail("grid.n_coarse", "must be at least 2");
    if (c.n_fine_per_coarse < 2) loc.fail("grid.n_fine_per_coarse", "must be at least 2");
    if (c.r < 1) loc.fail("gpc.r", "must be at least 1");
    if (c.p < 1) loc.fail("gpc.p", "must be at least 1");
    if (c.m < 1) loc.fail("dybo.m", "must be at least 1 (DyBO needs one mode)");
    if (!(c.dt > 0.0)) loc.fail("dybo.dt", "must be positive");
    if (!(c.T > 0.0)) loc.fail("dybo.T", "must be positive");
    if (c.recast_stride < 0) loc.fail("dybo.recast_stride", "must be nonnegative");
    if (!(c.rotation_limit > 0.0)) loc.fail("dybo.rotation_limit", "must be positive");
    if (!(c.drift_tolerance > 0.0)) loc.fail("dybo.drift_tolerance", "must be positive");
    if (c.l_per_node < 1) loc.fail("space.l_per_node", "must be at least 1");
    if (c.theta < 0.0) loc.fail("online.theta", "must be nonnegative");
    if (c.max_rounds < 0) loc.fail("online.max_rounds", "must be nonnegative");
    if (c.state_stride < 0) loc.fail("output.state_stride", "must be nonnegative");
    if (c.channels < 0) loc.fail("media.channels", "must be nonnegative");
    if (!(c.background > 0.0)) loc.fail("media.background", "must be positive");
    if (!(c.raster_scale > 0.0)) loc.fail("media.raster_scale", "must be positive");
    if (c.mean == MeanKind::Channels && !(c.contrast > c.background)) loc.fail("media.contrast", "must exceed background");
    if (c.mean == MeanKind::Constant && !(c.constant > 0.0)) loc.fail("media.constant", "must be positive");
    if (c.mean == MeanKind::Raster && c.raster.empty()) loc.fail("media.raster", "required when mean = raster");
    if (std::abs(c.steps() * c.dt - c.T) > 1e-9 * std::max(1.0, c.T)) {
        loc.fail("dybo.T", "is not a whole number of time steps of " + fmt(c.dt));
    }
    for (const double t : c.report_times) {
        const double n = t / c.dt;
        if (!(t > 0.0) || t > c.T * (1.0 + 1e-12) || std::abs(n - std::round(n)) > 1e-6) {
            loc.fail("output.report_times", "time " + fmt(t) + " is not a step time in (0, T]");
        }
    }
    if (c.verification && c.reference != Reference::Fine) {
        loc.fail("online.verification", "needs reference = fine");
    }
    validate(c);
    return c;
}

Config load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open configuration");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

void validate(const Config& c)
{
    const int expected_r = c.fluctuations == FluctuationKind::Example1   ? 3
                           : c.fluctuations == FluctuationKind::Example2 ? 4
                                                                         : c.r;
    if (c.r != expected_r) {
        throw ConfigError("gpc.r = " + std::to_string(c.r) + " but the fluctuation set has " +
                          std::to_string(expected_r) + " fields");
    }
    const Index np = gpc_dimension(c.r, c.p);
    if (c.m > np) {
        throw ConfigError("dybo.m = " + std::to_string(c.m) + " exceeds N_p = " + std::to_string(np));
    }
}

std::string problem_key(const Config& c)
{
    std::ostringstream k;
    k << "grid " << c.n_coarse << ' ' << c.n_fine_per_coarse << '\n';
    k << "media " << static_cast<int>(c.mean) << ' ' << fmt(c.background) << ' ' << fmt(c.contrast) << ' '
      << c.channels << ' ' << c.seed << ' ' << fmt(c.constant) << ' ' << c.raster.string() << ' '
      << fmt(c.raster_scale) << ' ' << static_cast<int>(c.fluctuations) << ' ' << fmt(c.source_value) << '\n';
    k << "initial " << static_cast<int>(c.initial_condition()) << '\n';
    k << "gpc " << c.r << ' ' << c.p << '\n';
    k << "time " << fmt(c.dt) << ' ' << fmt(c.T) << ' ' << c.m << '\n';
    return k.str();
}

std::string offline_key(const Config& c)
{
    std::ostringstream k;
    k << "grid " << c.n_coarse << ' ' << c.n_fine_per_coarse << '\n';
    k << "media " << static_cast<int>(c.mean) << ' ' << fmt(c.background) << ' ' << fmt(c.contrast) << ' '
      << c.channels << ' ' << c.seed << ' ' << fmt(c.constant) << ' ' << c.raster.string() << ' '
      << fmt(c.raster_scale) << '\n';
    k << "offline " << c.l_per_node << '\n';
    return k.str();
}

Problem build_problem(const Config& c)
{
    GridPair g(c.n_coarse, c.n_fine_per_coarse);
    CellField mean;
    switch (c.mean) {
    case MeanKind::Channels:
        mean = high_contrast_mean(g, c.channels, c.background, c.contrast, c.seed);
        break;
    case MeanKind::Constant:
        mean = CellField::constant(g, c.constant);
        break;
    case MeanKind::Raster:
        mean = raster_import(c.raster, g, c.raster_scale);
        break;
    }
    std::vector<CellField> fluct;
    if (c.fluctuations == FluctuationKind::Example1) fluct = example1_fluctuations(g);
    if (c.fluctuations == FluctuationKind::Example2) fluct = example2_fluctuations(g);
    if (c.fluctuations == FluctuationKind::None) {
        for (int i = 0; i < c.r; ++i) fluct.push_back(CellField::constant(g, 0.0));
    }
    CoefficientModel model(std::move(mean), std::move(fluct));
    return make_problem(g, std::move(model), c.source_value, c.initial_condition());
}

RunSettings run_settings(const Config& c, SpaceKind space)
{
    RunSettings s;
    s.space = space;
    s.l_per_node = c.l_per_node;
    s.m = c.m;
    s.dt = c.dt;
    s.steps = c.steps();
    s.dybo.recast_stride = c.recast_stride;
    s.dybo.rotation_limit = c.rotation_limit;
    s.dybo.drift_tolerance = c.drift_tolerance;
    s.online = c.online;
    s.enrichment.theta = c.theta;
    s.enrichment.max_rounds = c.max_rounds;
    s.enrichment.components = c.components;
    s.window = c.window;
    s.energy_monitor = c.energy_monitor;
    return s;
}

}  // namespace msdybo::cli
