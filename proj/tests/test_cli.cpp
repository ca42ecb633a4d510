#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "test_support.hpp"

using namespace missboopf;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    const auto dir = fs::temp_directory_path() / "missboopf_cli_test";
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = std::string(MISSBOOPF_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string p(const std::string& name) { return (work_dir() / name).string(); }

}  // namespace

TEST(Cli, GenerateAmputeImputeRoundTrip) {
    ASSERT_EQ(run("--seed 3 generate --design D1 --n 60 -o " + p("g.csv") + " --schema-out " + p("g.schema")), 0);
    const auto truth = load_csv(p("g.csv"), p("g.schema"));
    EXPECT_EQ(truth.rows(), 60u);
    EXPECT_EQ(truth.missing_count(), 0u);

    ASSERT_EQ(run("--seed 5 ampute " + p("g.csv") + " " + p("g.schema") + " --mechanism MAR --rate 0.2 -o " +
                  p("a.csv") + " --mask " + p("mask.csv")),
              0);
    const auto holes = load_csv(p("a.csv"), p("g.schema"));
    EXPECT_GT(holes.missing_count(), 0u);
    const auto mask_rows = csv::parse(read_file(p("mask.csv")));
    std::size_t ones = 0;
    for (std::size_t r = 1; r < mask_rows.size(); ++r)
        for (const auto& f : mask_rows[r]) ones += f == "1";
    EXPECT_EQ(ones, holes.missing_count());

    ASSERT_EQ(run("--seed 1 impute --method missforest --trees 10 " + p("a.csv") + " " + p("g.schema") + " -o " +
                  p("i.csv")),
              0);
    const auto done = load_csv(p("i.csv"), p("g.schema"));
    EXPECT_EQ(done.missing_count(), 0u);
    for (std::size_t j = 0; j < holes.cols(); ++j)
        for (std::size_t i = 0; i < holes.rows(); ++i)
            if (!holes.is_missing(i, j)) {
                EXPECT_EQ(done.value(i, j), holes.value(i, j));
            }

    // Same seed, same bytes.
    ASSERT_EQ(run("--seed 1 impute --method missforest --trees 10 " + p("a.csv") + " " + p("g.schema") + " -o " +
                  p("i2.csv")),
              0);
    EXPECT_EQ(read_file(p("i.csv")), read_file(p("i2.csv")));
}

TEST(Cli, SpecFileAndNaToken) {
    ASSERT_EQ(run("--seed 2 generate --design D3 --n 40 --p 4 -o " + p("c.csv") + " --schema-out " + p("c.schema")), 0);
    ASSERT_EQ(run("--na-token ? ampute " + p("c.csv") + " " + p("c.schema") + " --rate 0.1 -o " + p("cq.csv")), 0);
    EXPECT_NE(read_file(p("cq.csv")).find('?'), std::string::npos);
    write_file(p("spec.txt"), "continuous = rf-norm\ncategorical = rf\nforest_trees = 8\n");
    ASSERT_EQ(run("--na-token ? impute --spec " + p("spec.txt") + " " + p("cq.csv") + " " + p("c.schema") + " -o " +
                  p("cd.csv")),
              0);
    EXPECT_EQ(load_csv(p("cd.csv"), p("c.schema"), "?").missing_count(), 0u);
}

TEST(Cli, BenchmarkWritesRecordsAndSummary) {
    write_file(p("plan.txt"),
               "designs = D3\nmechanisms = MCAR\nrates = 0.2\nmethods = missforest, rf-kernel\n"
               "compare = rf-kernel>missforest\nruns = 2\nn = 30\nforest_trees = 4\nmax_iter = 2\n");
    ASSERT_EQ(run("--threads 2 benchmark -q " + p("plan.txt") + " --records " + p("runs.csv") + " --summary " +
                  p("summary.csv")),
              0);
    EXPECT_EQ(csv::parse(read_file(p("runs.csv"))).size(), 5u);  // header + 2 runs x 2 methods
    EXPECT_NE(read_file(p("summary.csv")).find("compare,"), std::string::npos);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("impute"), 2);
    EXPECT_EQ(run("--threads 0 generate --design D3"), 2);
    EXPECT_EQ(run("generate --design D9"), 2);
    ASSERT_EQ(run("generate --design D3 --n 20 -o " + p("e.csv") + " --schema-out " + p("e.schema")), 0);
    EXPECT_EQ(run("impute --method nonsense " + p("e.csv") + " " + p("e.schema")), 2);
    EXPECT_EQ(run("ampute --mechanism XYZ --rate 0.1 " + p("e.csv") + " " + p("e.schema")), 2);
    EXPECT_EQ(run("impute " + p("missing.csv") + " " + p("e.schema")), 1);
    write_file(p("bad.csv"), "X1,X2\n1,2\n");
    EXPECT_EQ(run("impute " + p("bad.csv") + " " + p("e.schema")), 1);
    EXPECT_EQ(run("ampute --rate 1.5 " + p("e.csv") + " " + p("e.schema")), 2);
    EXPECT_EQ(run("ampute --mechanism MAR --rate 0.01 " + p("e.csv") + " " + p("e.schema")), 1);
}
