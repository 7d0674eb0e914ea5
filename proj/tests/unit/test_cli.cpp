#include "msdybo/cli/app.hpp"
#include "msdybo/cli/config.hpp"
#include "msdybo/cli/runner.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace msdybo;
using namespace msdybo::cli;
namespace fs = std::filesystem;

namespace {

const char* const kSmall = R"([run]
example = 1
reference = fine

[grid]
n_coarse = 3
n_fine_per_coarse = 4

[media]
mean = channels
background = 4
contrast = 100
channels = 2
seed = 3

[dybo]
m = 3
dt = 1/200
T = 0.02

[space]
l_per_node = 3

[online]
max_rounds = 2

[output]
report_times = 0.01, 0.02
)";

class CliTest : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override
    {
        dir = fs::temp_directory_path() /
              ("msdybo_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    fs::path write(const std::string& name, const std::string& text) const
    {
        const fs::path p = dir / name;
        std::ofstream(p) << text;
        return p;
    }

    static int call(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr)
    {
        args.insert(args.begin(), "msdybo");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        if (out_text) *out_text = out.str();
        if (err_text) *err_text = err.str();
        return code;
    }
};

std::string replace(std::string text, const std::string& from, const std::string& to)
{
    text.replace(text.find(from), from.size(), to);
    return text;
}

}  // namespace

TEST_F(CliTest, ParsesFractionsAndDefaults)
{
    const Config c = parse_config(kSmall, "small.ini");
    EXPECT_DOUBLE_EQ(c.dt, 0.005);
    EXPECT_EQ(c.steps(), 4);
    EXPECT_EQ(c.r, 3);
    EXPECT_EQ(c.p, 2);
    EXPECT_EQ(c.reference, Reference::Fine);
    EXPECT_EQ(c.report_times.size(), 2u);
}

TEST_F(CliTest, UnknownKeyNamesTheLine)
{
    try {
        (void)parse_config(replace(kSmall, "seed = 3", "sead = 3"), "bad.ini");
        FAIL() << "no error";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.ini:14"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("media.sead"), std::string::npos) << e.what();
    }
    EXPECT_THROW((void)parse_config(std::string(kSmall) + "[extra]\nx = 1\n", "bad.ini"), ConfigError);
}

TEST_F(CliTest, RangeErrors)
{
    EXPECT_THROW((void)parse_config(replace(kSmall, "T = 0.02", "T = 0.0201"), "t.ini"), ConfigError);
    EXPECT_THROW((void)parse_config(replace(kSmall, "0.01, 0.02", "0.011, 0.02"), "t.ini"), ConfigError);
    EXPECT_THROW((void)parse_config(replace(kSmall, "dt = 1/200", "dt = 1/0"), "t.ini"), ConfigError);
    EXPECT_THROW((void)parse_config(replace(kSmall, "m = 3", "m = 12"), "t.ini"), ConfigError);
    EXPECT_THROW((void)parse_config(replace(kSmall, "reference = fine", "reference = exact"), "t.ini"), ConfigError);
}

TEST_F(CliTest, ZeroModesIsAConfigError)
{
    const fs::path p = write("m0.ini", replace(kSmall, "m = 3", "m = 0"));
    std::string err;
    EXPECT_EQ(call({"run", p.string(), "-o", (dir / "out").string()}, nullptr, &err), 2);
    EXPECT_NE(err.find("dybo.m"), std::string::npos) << err;
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST_F(CliTest, UsageErrors)
{
    EXPECT_EQ(call({}), 2);
    EXPECT_EQ(call({"frobnicate"}), 2);
    EXPECT_EQ(call({"run"}), 2);
    EXPECT_EQ(call({"--help"}), 0);
    EXPECT_EQ(call({"run", (dir / "missing.ini").string()}), 2);
}

TEST_F(CliTest, RunWritesArtifactsAndCompareIsSelfConsistent)
{
    const fs::path p = write("small.ini", kSmall);
    const fs::path a = dir / "a";
    const fs::path b = dir / "b";
    ASSERT_EQ(call({"run", p.string(), "-o", a.string()}), 0);
    ASSERT_EQ(call({"run", p.string(), "-o", b.string()}), 0);
    for (const char* f : {"manifest.json", "errors.csv", "cpu_time.csv", "enrichment.csv", "summary.txt"}) {
        EXPECT_TRUE(fs::exists(a / f)) << f;
    }
    std::ifstream cpu(a / "cpu_time.csv");
    std::string header;
    std::getline(cpu, header);
    EXPECT_EQ(header, "function,fine_scale_solver,proposed_solver");

    const auto fields = read_fields(a);
    ASSERT_EQ(fields.size(), 2u);
    EXPECT_EQ(fields[0].step, 2);
    EXPECT_EQ(fields[1].step, 4);

    std::ostringstream log;
    const CompareOutcome self = compare_runs(a, a, dir / "cmp", log);
    for (const auto& row : self.rows) EXPECT_EQ(row.e2, 0.0) << row.function;
    EXPECT_DOUBLE_EQ(self.speedup, 1.0);
    EXPECT_TRUE(fs::exists(dir / "cmp" / "compare.csv"));
    const CompareOutcome other = compare_runs(a, b, dir / "cmp2", log);
    for (const auto& row : other.rows) EXPECT_LT(row.e2, 1e-12) << row.function;
    EXPECT_EQ(call({"compare", a.string(), b.string()}), 0);
}

TEST_F(CliTest, CompareRejectsMissingAndMismatchedRuns)
{
    const fs::path p = write("small.ini", kSmall);
    const fs::path q = write("other.ini", replace(kSmall, "seed = 3", "seed = 4"));
    ASSERT_EQ(call({"run", p.string(), "-o", (dir / "a").string()}), 0);
    ASSERT_EQ(call({"run", q.string(), "-o", (dir / "c").string()}), 0);
    std::string err;
    EXPECT_EQ(call({"compare", (dir / "a").string(), (dir / "nope").string()}, nullptr, &err), 2);
    EXPECT_NE(err.find("nope"), std::string::npos);
    EXPECT_EQ(call({"compare", (dir / "a").string(), (dir / "c").string()}, nullptr, &err), 2);
    EXPECT_NE(err.find("hash"), std::string::npos);
}

TEST_F(CliTest, OfflineCacheIsReusedAndValidated)
{
    const fs::path cache = dir / "space.offline";
    const fs::path withcache =
        write("cached.ini", replace(kSmall, "l_per_node = 3", "l_per_node = 3\noffline_cache = " + cache.string()));
    ASSERT_EQ(call({"cache-offline", withcache.string()}), 0);
    ASSERT_TRUE(fs::exists(cache));
    std::string out;
    ASSERT_EQ(call({"run", withcache.string(), "-o", (dir / "r").string()}, &out), 0);
    EXPECT_NE(out.find("(cached)"), std::string::npos) << out;

    // a cache written for another medium is refused
    const fs::path other = write(
        "other.ini", replace(replace(kSmall, "seed = 3", "seed = 5"), "l_per_node = 3",
                             "l_per_node = 3\noffline_cache = " + cache.string()));
    std::string err;
    EXPECT_EQ(call({"run", other.string(), "-o", (dir / "s").string()}, nullptr, &err), 2);
    EXPECT_NE(err.find("offline_cache"), std::string::npos) << err;
}

TEST_F(CliTest, ExportFields)
{
    const fs::path p = write("small.ini", kSmall);
    ASSERT_EQ(call({"run", p.string(), "-o", (dir / "a").string()}), 0);
    ASSERT_EQ(call({"export-fields", p.string(), "-o", (dir / "e").string(), "--run", (dir / "a").string()}), 0);
    for (const char* f : {"abar.txt", "a1.txt", "a2.txt", "a3.txt", "initial.csv", "fields_n000004.csv"}) {
        EXPECT_TRUE(fs::exists(dir / "e" / f)) << f;
    }
    std::ifstream in(dir / "e" / "initial.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "x,y,ubar,var,u1,u2,u3,u4");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, 13 * 13);
}
