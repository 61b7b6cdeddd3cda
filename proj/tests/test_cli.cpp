#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "geocaustic/cli.hpp"
#include "support.hpp"

using namespace geocaustic;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("geocaustic_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        unsetenv("GEOCAUSTIC_CONFIG");
    }
    void TearDown() override {
        unsetenv("GEOCAUSTIC_CONFIG");
        fs::remove_all(dir_);
    }

    int run(std::vector<std::string> args) {
        out_.str("");
        err_.str("");
        return run_cli(args, out_, err_);
    }
    fs::path path(const std::string& name) const { return dir_ / name; }
    void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }
    static std::string read(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    }
    static std::size_t lines(const fs::path& p) {
        const std::string s = read(p);
        return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

const std::string kSphereCurve = fx::fixture("sphere_latitude.json");

}  // namespace

TEST_F(Cli, SphereTraceWritesAllOutputs) {
    ASSERT_EQ(run({"trace", "--curve", kSphereCurve, "--grid", "64", "--t-max", "10", "--out", path("o").string()}),
              kExitOk)
        << err_.str();
    for (int p : {-2, -1, 1, 2}) {
        const fs::path csv = path("o") / ("branch_p" + std::to_string(p) + ".csv");
        ASSERT_TRUE(fs::exists(csv)) << csv;
        EXPECT_EQ(lines(csv), 65u);
    }
    EXPECT_FALSE(fs::exists(path("o") / "branch_p0.csv"));
    EXPECT_TRUE(fs::exists(path("o") / "decomposition.json"));
    EXPECT_EQ(read(path("o") / "decomposition.svg").rfind("<svg", 0), 0u);
}

TEST_F(Cli, FormatSelectsOutputs) {
    ASSERT_EQ(run({"trace", "--curve", kSphereCurve, "--grid", "64", "--t-max", "10", "--format", "json", "--out",
                   path("o").string()}),
              kExitOk);
    EXPECT_TRUE(fs::exists(path("o") / "decomposition.json"));
    EXPECT_FALSE(fs::exists(path("o") / "decomposition.svg"));
    EXPECT_FALSE(fs::exists(path("o") / "branch_p1.csv"));
}

TEST_F(Cli, PlaneTraceHasEmptyCaustics) {
    ASSERT_EQ(run({"trace", "--curve", fx::fixture("plane_circle.json"), "--grid", "64", "--out", path("o").string()}),
              kExitOk);
    const auto j = nlohmann::json::parse(read(path("o") / "decomposition.json"));
    EXPECT_TRUE(j["caustics"].empty());
    EXPECT_FALSE(j["truncated"].get<bool>());
}

TEST_F(Cli, TraceIsIndependentOfJobs) {
    const std::vector<std::string> base = {"trace", "--curve", fx::fixture("perturbed_circle.json"), "--grid", "256",
                                           "--t-max", "10", "--p-range", "-1..2"};
    auto a = base, b = base;
    a.insert(a.end(), {"--jobs", "1", "--out", path("a").string()});
    b.insert(b.end(), {"--jobs", "8", "--out", path("b").string()});
    ASSERT_EQ(run(a), kExitOk);
    ASSERT_EQ(run(b), kExitOk);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(path("a"))) {
        ++files;
        EXPECT_EQ(read(e.path()), read(path("b") / e.path().filename())) << e.path().filename();
    }
    EXPECT_EQ(files, 5u);
}

TEST_F(Cli, MalformedInputExitsTwoWithoutOutputs) {
    write("bad.json", "{\n  \"kind\": \"expression\",\n  \"u\": \"t\" \"v\": \"0.5\"\n}");
    EXPECT_EQ(run({"trace", "--surface", fx::fixture("sphere.json"), "--curve", path("bad.json").string(), "--out",
                   path("o").string()}),
              kExitParse);
    EXPECT_NE(err_.str().find("bad.json:3:"), std::string::npos) << err_.str();
    EXPECT_FALSE(fs::exists(path("o")));
}

TEST_F(Cli, InvalidArgumentsExitTwo) {
    EXPECT_EQ(run({"trace", "--curve", kSphereCurve, "--grid", "32", "--out", path("o").string()}), kExitParse);
    EXPECT_EQ(run({"trace", "--curve", kSphereCurve, "--p-range", "2..1", "--out", path("o").string()}), kExitParse);
    EXPECT_EQ(run({"trace", "--curve", kSphereCurve, "--p-range", "one..two", "--out", path("o").string()}),
              kExitParse);
    EXPECT_EQ(run({"trace", "--curve", kSphereCurve, "--format", "png"}), kExitParse);
    EXPECT_EQ(run({"trace", "--curve", path("missing.json").string(), "--out", path("o").string()}), kExitParse);
    EXPECT_EQ(run({}), kExitParse);
    EXPECT_FALSE(fs::exists(path("o")));
}

TEST_F(Cli, ParsePRange) {
    EXPECT_EQ(parse_p_range("-2..2"), std::make_pair(-2, 2));
    EXPECT_EQ(parse_p_range("-3..-1"), std::make_pair(-3, -1));
    EXPECT_EQ(parse_p_range("1..1"), std::make_pair(1, 1));
    EXPECT_EQ(fx::error_kind([] { parse_p_range("1-2"); }), ErrorKind::InvalidArgument);
}

TEST_F(Cli, FlagsOverrideConfigFile) {
    write("cfg.json", "{\"curve\": \"" + kSphereCurve + "\", \"grid\": 64, \"t_max\": 10, \"p_range\": \"1..1\", \"out\": \"" +
                          path("from_config").string() + "\"}");
    ASSERT_EQ(run({"trace", "--config", path("cfg.json").string()}), kExitOk) << err_.str();
    EXPECT_EQ(lines(path("from_config") / "branch_p1.csv"), 65u);
    EXPECT_FALSE(fs::exists(path("from_config") / "branch_p2.csv"));

    ASSERT_EQ(run({"trace", "--config", path("cfg.json").string(), "--grid", "96", "--out", path("flag").string()}),
              kExitOk);
    EXPECT_EQ(lines(path("flag") / "branch_p1.csv"), 97u);
}

TEST_F(Cli, ConfigFromEnvironment) {
    write("env.json", "{\"curve\": \"" + kSphereCurve + "\", \"grid\": 80, \"t_max\": 10, \"p_range\": \"-1..-1\"}");
    setenv("GEOCAUSTIC_CONFIG", path("env.json").c_str(), 1);
    ASSERT_EQ(run({"trace", "--out", path("o").string()}), kExitOk) << err_.str();
    EXPECT_EQ(lines(path("o") / "branch_p-1.csv"), 81u);

    write("other.json", "{\"curve\": \"" + kSphereCurve + "\", \"grid\": 72, \"t_max\": 10, \"p_range\": \"-1..-1\"}");
    ASSERT_EQ(run({"trace", "--config", path("other.json").string(), "--out", path("o2").string()}), kExitOk);
    EXPECT_EQ(lines(path("o2") / "branch_p-1.csv"), 73u);
}

TEST_F(Cli, UnknownConfigKeyReportsPosition) {
    write("cfg.json", "{\"grid\": 64,\n \"gird\": 12}");
    EXPECT_EQ(run({"trace", "--config", path("cfg.json").string(), "--curve", kSphereCurve}), kExitParse);
    EXPECT_NE(err_.str().find("cfg.json:2:2"), std::string::npos) << err_.str();
}

TEST_F(Cli, ConfigPathsAreRelativeToTheConfig) {
    fs::copy_file(fx::fixture("sphere.json"), path("sphere.json"));
    fs::copy_file(fx::fixture("sphere_latitude.json"), path("lat.json"));
    write("cfg.json", R"({"surface": "sphere.json", "curve": "lat.json", "grid": 64, "t_max": 10, "format": ["json"]})");
    ASSERT_EQ(run({"trace", "--config", path("cfg.json").string(), "--out", path("o").string()}), kExitOk)
        << err_.str();
    EXPECT_TRUE(fs::exists(path("o") / "decomposition.json"));
}

TEST_F(Cli, VerifySucceedsOnTheSphere) {
    ASSERT_EQ(run({"verify", "--curve", kSphereCurve, "--grid", "128", "--t-max", "10", "--p-range", "-2..2", "--out",
                   path("o").string()}),
              kExitOk)
        << err_.str() << out_.str();
    const auto j = nlohmann::json::parse(read(path("o") / "verify.json"));
    EXPECT_EQ(j["coverage"], 1.0);
    EXPECT_EQ(j["membership"], 1.0);
}

TEST_F(Cli, VerifyFailsOnATruncatedHorizon) {
    EXPECT_EQ(run({"verify", "--curve", fx::fixture("ellipsoid_inflection.json"), "--grid", "128", "--t-max", "3.7",
                   "--epsilon", "1e-3", "--tol", "2e-3", "--p-range", "-1..1", "--out", path("o").string()}),
              kExitBelowThreshold);
    EXPECT_TRUE(fs::exists(path("o") / "verify.json"));
}

TEST_F(Cli, StabilityOnNonConvexSurfaceExitsFour) {
    EXPECT_EQ(run({"stability", "--curve", fx::fixture("half_plane_curve.json"), "--p-range", "1..1", "--out",
                   path("o").string()}),
              kExitConvexity);
    EXPECT_FALSE(fs::exists(path("o")));
}

TEST_F(Cli, StabilityZeroLambdaRowIsExact) {
    ASSERT_EQ(run({"stability", "--curve", fx::fixture("perturbed_circle.json"), "--p-range", "1..1", "--grid", "256",
                   "--t-max", "10", "--lambda", "0", "--lambda", "1e-4", "--out", path("o").string()}),
              kExitOk)
        << err_.str();
    std::istringstream csv(read(path("o") / "stability.csv"));
    std::string header, first;
    std::getline(csv, header);
    std::getline(csv, first);
    EXPECT_EQ(header, "p,lambda,kind,base_count,pert_count,hausdorff,verdict");
    EXPECT_EQ(first.rfind("1,0,cusp,", 0), 0u) << first;
    EXPECT_NE(first.find(",0,stable"), std::string::npos) << first;
    const auto j = nlohmann::json::parse(read(path("o") / "stability.json"));
    EXPECT_TRUE(j[0]["identical"].get<bool>());
}

TEST_F(Cli, ConjugateOnTheSphere) {
    ASSERT_EQ(run({"conjugate", "--curve", kSphereCurve, "--p-range", "1..3", "--t-max", "10", "--out",
                   path("o").string()}),
              kExitOk);
    std::istringstream csv(read(path("o") / "conjugate.csv"));
    std::string line;
    std::getline(csv, line);
    for (int p = 1; p <= 3; ++p) {
        ASSERT_TRUE(std::getline(csv, line));
        std::istringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');
        EXPECT_EQ(std::stoi(cell), p);
        std::getline(ls, cell, ',');
        EXPECT_NEAR(std::stod(cell), p * kPi, 1e-8);
    }
}

TEST_F(Cli, SurfacesListsBuiltins) {
    EXPECT_EQ(run({"surfaces"}), kExitOk);
    EXPECT_NE(out_.str().find("unit-sphere"), std::string::npos);
    EXPECT_NE(out_.str().find("conformal-perturbation"), std::string::npos);
}
