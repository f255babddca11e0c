#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace
{
struct Run
{
    int         rc = -1;
    std::string out;
};

Run run(const std::string& args)
{
    const std::string cmd = std::string(HCG_CLI_PATH) + " " + args + " 2>/dev/null";
    Run               r;
    FILE*             p = popen(cmd.c_str(), "r");
    if (!p)
        return r;
    char buf[4096];
    while (std::size_t k = std::fread(buf, 1, sizeof buf, p))
        r.out.append(buf, k);
    const int status = pclose(p);
    r.rc             = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}
} // namespace

TEST(Cli, UsageErrors)
{
    EXPECT_EQ(run("").rc, 2);
    EXPECT_EQ(run("frobnicate").rc, 2);
    EXPECT_EQ(run("ground --n 9 --d 2").rc, 2);
    EXPECT_EQ(run("logz --n 9 --beta -1").rc, 2);
    EXPECT_EQ(run("verify --suite nope").rc, 2);
    EXPECT_EQ(run("--help").rc, 0);
}

TEST(Cli, Ground)
{
    const auto r = run("ground --n 9");
    ASSERT_EQ(r.rc, 0);
    EXPECT_NE(r.out.find("# command=ground n=9 beta=1 d=3 seed=0"), std::string::npos);
    EXPECT_NE(r.out.find("L 74\n"), std::string::npos);
    EXPECT_NE(r.out.find("D 20\n"), std::string::npos);
    EXPECT_NE(r.out.find("b 469762048\n"), std::string::npos);
    EXPECT_NE(r.out.find("h 2\n"), std::string::npos);

    const auto j = nlohmann::json::parse(run("ground --n 8 --format json").out);
    EXPECT_EQ(j["L"], "56");
    EXPECT_EQ(j["D"], "18");
    EXPECT_EQ(j["b"], "1");
    EXPECT_EQ(j["config"]["d"], 3);
    EXPECT_EQ(j["config"]["seed"], 0);
}

TEST(Cli, GroundOverBudgetFallsBackToLogWeight)
{
    const auto r = run("ground --n 1000000");
    ASSERT_EQ(r.rc, 0);
    EXPECT_NE(r.out.find("log_gsw "), std::string::npos);
    EXPECT_EQ(r.out.find("\nb "), std::string::npos);
}

TEST(Cli, Logz)
{
    const auto j = nlohmann::json::parse(run("logz --n 2 --beta 1 --format json").out);
    EXPECT_TRUE(j["bracket_ok"].get<bool>());
    EXPECT_GE(j["lower_slack"].get<double>(), -1e-9);
    EXPECT_EQ(run("logz --n 30 --beta 0.5").rc, 0);
}

TEST(Cli, SampleIsByteIdentical)
{
    const auto a = run("sample --n 20 --beta 0.7 --reps 3 --seed 5");
    const auto b = run("sample --n 20 --beta 0.7 --reps 3 --seed 5");
    const auto c = run("sample --n 20 --beta 0.7 --reps 3 --seed 6");
    ASSERT_EQ(a.rc, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out, c.out);
    EXPECT_NE(a.out.find("# seed=5 stream=2 n=20"), std::string::npos);
}

TEST(Cli, SampleThreadCountDoesNotChangeOutput)
{
    const auto a = run("sample --n 16 --beta 1 --reps 6 --seed 1");
    setenv("HCG_THREADS", "3", 1);
    const auto c = run("sample --n 16 --beta 1 --reps 6 --seed 1");
    unsetenv("HCG_THREADS");
    ASSERT_EQ(a.rc, 0);
    // The thread count is echoed in JSON only; the point CSV must match.
    EXPECT_EQ(a.out, c.out);
}

TEST(Cli, SampleToFile)
{
    const auto path = (std::filesystem::temp_directory_path() / "hcg_cli_sample.csv").string();
    ASSERT_EQ(run("sample --n 5 --reps 2 --out " + path).rc, 0);
    const auto text = slurp(path);
    std::filesystem::remove(path);
    EXPECT_EQ(text.rfind("# command=sample n=5", 0), 0u);
}

TEST(Cli, SampleVerifications)
{
    EXPECT_EQ(run("sample --n 12 --beta 0.5 --reps 200 --verify roundtrip").rc, 0);
    EXPECT_EQ(run("sample --n 12 --beta 50 --reps 200 --verify ground").rc, 0);
    EXPECT_EQ(run("sample --n 40 --beta 0 --reps 2000 --verify multinomial").rc, 0);
    EXPECT_EQ(run("sample --n 12 --beta 0 --reps 200 --verify ground").rc, 1);
    EXPECT_EQ(run("sample --n 12 --beta 1 --reps 10 --verify multinomial").rc, 2);
}

TEST(Cli, ExperimentSmallGrid)
{
    const auto path = (std::filesystem::temp_directory_path() / "hcg_cli_exp.csv").string();
    const auto r    = run("experiment --suite boundary --reps 200 --n-min-exp 4 --n-max-exp 8 --out " + path);
    ASSERT_EQ(r.rc, 0);
    const auto csv  = slurp(path);
    const auto summ = nlohmann::json::parse(slurp(path + ".json"));
    std::filesystem::remove(path);
    std::filesystem::remove(path + ".json");
    EXPECT_NE(csv.find("n,beta,d,stat,reps,mean,variance,var_se,seed\n"), std::string::npos);
    EXPECT_NE(csv.find("\n256,1,3,ball,200,"), std::string::npos);
    EXPECT_EQ(summ["fits"][0]["stat"], "ball");
    EXPECT_EQ(summ["fits"][0]["points"], 5);
    EXPECT_EQ(summ["config"]["reps"], 200);
    EXPECT_EQ(run("experiment --suite linear --reps 200 --n-min-exp 4 --n-max-exp 6").rc, 2);
}

TEST(Cli, VerifyAndMutation)
{
    const auto good = run("verify --suite groundstate");
    EXPECT_EQ(good.rc, 0) << good.out;
    EXPECT_NE(good.out.find("all checks passed"), std::string::npos);

    // The numtheory suite also checks gamma(n) <= 4 n^{(d-2)/d}, which fails
    // for large digits; the coherence rows are what the mutation must break.
    const auto base = run("verify --suite numtheory");
    EXPECT_NE(base.out.find("PASS  increment coherence d=3"), std::string::npos) << base.out;
    const auto bad = run("verify --suite numtheory --mutate-gamma");
    EXPECT_EQ(bad.rc, 1);
    EXPECT_NE(bad.out.find("FAIL  increment coherence d=3"), std::string::npos) << bad.out;
    EXPECT_NE(bad.out.find("verification FAILED"), std::string::npos);
}
