#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const std::string kCli = PERCEPTPLAN_CLI;
const std::string kSrc = PERCEPTPLAN_SOURCE_DIR;

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / ("perceptplan_cli_" + std::to_string(::getpid()) + ".log");
    const int status = std::system((kCli + " " + args + " > " + log.string() + " 2>&1").c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    fs::remove(log);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("perceptplan_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    return dir;
}

const std::string kTwoRoom = "--pomdp " + kSrc + "/tests/data/two_room.json --dfa " + kSrc + "/tests/data/reach_p.json";
const std::string kUav = "--scenario " + kSrc + "/scenarios/uav_overlapping.json";

}  // namespace

TEST(Cli, ProbeTwoRoom) {
    const auto r = run("probe " + kTwoRoom + R"( --y '{"obs": ["blip"], "acts": ["look"]}')");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("seq_prob 0.45"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("secret_posterior 0.888889"), std::string::npos) << r.out;
}

TEST(Cli, ImpossibleEvidenceExitCode) {
    const auto r = run("probe " + kTwoRoom + R"( --y '{"obs": ["blip"], "acts": ["stay"]}')");
    EXPECT_EQ(r.code, 5) << r.out;
}

TEST(Cli, EnumerationCapExitCode) {
    const auto r = run("exact " + kUav + " --horizon 5 --cap 1000");
    EXPECT_EQ(r.code, 4) << r.out;
    EXPECT_NE(r.out.find("sampled"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitCode) {
    EXPECT_EQ(run("validate --pomdp /nonexistent.json --dfa /nonexistent.json").code, 2);
    EXPECT_EQ(run("train " + kUav + " --out /tmp/x --samples 0").code, 2);
    EXPECT_EQ(run("train " + kUav + " --out /tmp/x --log-base 10").code, 2);
    EXPECT_EQ(run("exact " + kTwoRoom + " --bogus").code, 2);
}

TEST(Cli, ExactTwoRoom) {
    const auto r = run("exact " + kTwoRoom + " --k 0 --horizon 0");
    EXPECT_EQ(r.code, 0) << r.out;
    // 0.5 H(1/2) + 0.225 H(8/9) + 0.275 H(2/11)
    EXPECT_NE(r.out.find("entropy 0.5"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("success 0.5"), std::string::npos) << r.out;
}

TEST(Cli, TrainIsReproducibleAcrossWorkers) {
    const auto a = scratch("a"), b = scratch("b"), c = scratch("c");
    const std::string common = "train " + kUav + " --samples 50 --iters 4 --seed 9";
    ASSERT_EQ(run(common + " --workers 1 --out " + a.string()).code, 0);
    ASSERT_EQ(run(common + " --workers 2 --out " + b.string()).code, 0);
    ASSERT_EQ(run("train --manifest " + (a / "manifest.json").string() + " --out " + c.string()).code, 0);
    const auto report = slurp(a / "report.csv");
    EXPECT_EQ(report.substr(0, report.find('\n')), "iter,entropy,success,objective,grad_norm,wallclock_ms");
    EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 5);
    EXPECT_EQ(report, slurp(b / "report.csv"));
    EXPECT_EQ(report, slurp(c / "report.csv"));
    EXPECT_EQ(slurp(a / "policy.json"), slurp(b / "policy.json"));
    EXPECT_TRUE(fs::exists(a / "manifest.json"));

    const auto ev = run("eval " + kUav + " --policy " + (a / "policy.json").string() +
                        " --samples 500 --prior adversarial");
    EXPECT_EQ(ev.code, 0) << ev.out;
    EXPECT_NE(ev.out.find("entropy 0"), std::string::npos) << ev.out;
    for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST(Cli, EvalRejectsZeroSamples) {
    EXPECT_EQ(run("eval " + kUav + " --policy /nonexistent.json --samples 0").code, 2);
}

TEST(Cli, ValidateReportsDefect) {
    const fs::path dir = scratch("bad");
    fs::create_directories(dir);
    std::string text = slurp(kSrc + "/tests/data/two_room.json");
    text.replace(text.find("\"blip\": 0.8"), 11, "\"blip\": 0.7");
    std::ofstream(dir / "bad.json") << text;
    const auto r = run("validate --pomdp " + (dir / "bad.json").string() + " --dfa " + kSrc + "/tests/data/reach_p.json");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("emit(s1, look)"), std::string::npos) << r.out;
    fs::remove_all(dir);
}
