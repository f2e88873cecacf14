#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "helpers.hpp"
#include "sfbc/results.hpp"

namespace sfbc {
namespace {

struct Run {
    int code = -1;
    std::string err;
};

Run sfbc_cli(const std::string& args, const std::filesystem::path& scratch) {
    const auto log = scratch / "stderr.txt";
    const std::string cmd =
        std::string("SFBC_THREADS= ") + SFBC_CLI_PATH + " " + args + " > /dev/null 2> " + log.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.err = ss.str();
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Shared tiny tc1 and tc4 datasets, generated once for the suite.
class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = std::filesystem::temp_directory_path() / ("sfbc_cli_suite_" + std::to_string(::getpid()));
        std::filesystem::remove_all(root_);
        std::filesystem::create_directories(root_ / "tc1");
        std::filesystem::create_directories(root_ / "tc4");
        const auto a = sfbc_cli("gen-data --case tc1 --simulations 3 --test-simulations 1 --steps 96 --particles 128 "
                                "--out " + (root_ / "tc1").string(), root_);
        ASSERT_EQ(a.code, 0) << a.err;
        const auto b = sfbc_cli("gen-data --case tc4 --samples 4 --test-samples 2 --lattice 5 --out " +
                                    (root_ / "tc4").string(), root_);
        ASSERT_EQ(b.code, 0) << b.err;
    }
    static void TearDownTestSuite() { std::filesystem::remove_all(root_); }

    static std::filesystem::path root_;
};

std::filesystem::path Cli::root_;

TEST_F(Cli, NoSubcommandIsUsageError) {
    test::TempDir dir;
    EXPECT_NE(sfbc_cli("", dir.path()).code, 0);
    EXPECT_EQ(sfbc_cli("--help", dir.path()).code, 0);
}

TEST_F(Cli, GenDataWritesManifestAndConfig) {
    EXPECT_TRUE(std::filesystem::exists(root_ / "tc1" / "manifest.json"));
    EXPECT_TRUE(std::filesystem::exists(root_ / "tc4" / "manifest.json"));
    const std::string cfg = slurp(root_ / "tc1" / "config.json");
    EXPECT_NE(cfg.find("\"simulations\": 3"), std::string::npos);
}

TEST_F(Cli, ToyGridProducesAllCells) {
    test::TempDir dir;
    const auto r = sfbc_cli("toy --data " + (root_ / "tc1" / "manifest.json").string() +
                                " --bases sfbc,linear --n 2,4 --seeds 2 --updates 20 --out " + dir.path().string(),
                            dir.path());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto table = read_results_csv(dir.path() / "results.csv");
    std::size_t l2 = 0;
    for (const auto& row : table.rows) l2 += row.metric == "l2";
    EXPECT_EQ(l2, 8u);
    EXPECT_EQ(table.rows.size(), 24u);
}

TEST_F(Cli, ToyRerunIsByteIdentical) {
    test::TempDir a, b;
    const std::string args = "toy --data " + (root_ / "tc1" / "manifest.json").string() +
                             " --bases fourier:odd --n 4 --seeds 1 --updates 30 --task gradient --out ";
    ASSERT_EQ(sfbc_cli(args + a.path().string(), a.path()).code, 0);
    ASSERT_EQ(sfbc_cli(args + b.path().string(), b.path()).code, 0);
    EXPECT_EQ(slurp(a.path() / "results.csv"), slurp(b.path() / "results.csv"));
}

TEST_F(Cli, UnknownBasisListsValidNames) {
    test::TempDir dir;
    const auto r = sfbc_cli("toy --data " + (root_ / "tc1" / "manifest.json").string() + " --bases fourrier --out " +
                                dir.path().string(),
                            dir.path());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("fourrier"), std::string::npos);
    EXPECT_NE(r.err.find("chebyshev"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(dir.path() / "results.csv"));
}

TEST_F(Cli, MissingOutputDirectoryIsConfigError) {
    test::TempDir dir;
    const auto r = sfbc_cli("gen-data --case tc4 --samples 1 --lattice 5 --out " + (dir.path() / "nope").string(),
                            dir.path());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("does not exist"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(dir.path() / "nope"));
}

TEST_F(Cli, SchemaRejectsUnknownKeysAndBadValues) {
    test::TempDir dir;
    std::ofstream(dir.path() / "bad.json") << R"({"version": 1, "bogus": 3})";
    EXPECT_EQ(sfbc_cli("bench --config " + (dir.path() / "bad.json").string() + " --out " + dir.path().string(),
                       dir.path())
                  .code,
              1);
    EXPECT_EQ(sfbc_cli("bench --reps 0 --out " + dir.path().string(), dir.path()).code, 1);
    EXPECT_EQ(sfbc_cli("bench --reps many --out " + dir.path().string(), dir.path()).code, 1);
}

TEST_F(Cli, BenchRefusesThreadsAndHonorsReps) {
    test::TempDir dir;
    const auto refused = sfbc_cli("bench --threads 2 --out " + dir.path().string(), dir.path());
    EXPECT_EQ(refused.code, 1);
    EXPECT_NE(refused.err.find("threads"), std::string::npos);

    const auto r = sfbc_cli("bench --bases sfbc,linear --n 2,4 --dims 1,2 --archs 0 --reps 3 --warmup 0 "
                            "--particles 128 --lattice-2d 12 --out " + dir.path().string(),
                            dir.path());
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(dir.path() / "bench.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("basis,n,dim,hidden_layers", 0), 0u);
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        ASSERT_EQ(cells.size(), 13u);
        EXPECT_EQ(cells[6], "3");
    }
    EXPECT_EQ(rows, 8);
}

TEST_F(Cli, TrainEvalRoundTrip) {
    test::TempDir train, eval, other;
    const std::string data = (root_ / "tc4" / "manifest.json").string();
    const auto t = sfbc_cli("train --case tc4 --data " + data + " --updates 10 --features 4 --out " +
                                train.path().string(),
                            train.path());
    ASSERT_EQ(t.code, 0) << t.err;
    ASSERT_TRUE(std::filesystem::exists(train.path() / "checkpoint.sfbc"));
    EXPECT_EQ(slurp(train.path() / "history.csv").rfind("update_index,lr,train_loss\n", 0), 0u);

    const auto e = sfbc_cli("eval --config " + (train.path() / "config.json").string() + " --out " +
                                eval.path().string(),
                            eval.path());
    ASSERT_EQ(e.code, 0) << e.err;
    const auto table = read_results_csv(eval.path() / "results.csv");
    ASSERT_EQ(table.rows.size(), 2u);
    EXPECT_EQ(table.rows[0].task, "tc4_density");
    EXPECT_GT(table.rows[0].mean, 0.0);
    const std::string frames = slurp(eval.path() / "frames.csv");
    EXPECT_EQ(std::count(frames.begin(), frames.end(), '\n'), 3);

    std::string echoed = slurp(train.path() / "config.json");
    const auto pos = echoed.find("\"config_hash\": \"");
    ASSERT_NE(pos, std::string::npos);
    echoed[pos + 16] = echoed[pos + 16] == '0' ? '1' : '0';
    std::ofstream(other.path() / "tampered.json") << echoed;
    const auto bad = sfbc_cli("eval --config " + (other.path() / "tampered.json").string() + " --out " +
                                  other.path().string(),
                              other.path());
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("hash"), std::string::npos);
}

TEST_F(Cli, TrainIsDeterministic) {
    test::TempDir a, b;
    const std::string args =
        "train --case tc1 --data " + (root_ / "tc1" / "manifest.json").string() +
        " --epochs 1 --updates 5 --mp-steps 2 --features 4 --out ";
    ASSERT_EQ(sfbc_cli(args + a.path().string(), a.path()).code, 0);
    ASSERT_EQ(sfbc_cli(args + b.path().string(), b.path()).code, 0);
    EXPECT_EQ(slurp(a.path() / "history.csv"), slurp(b.path() / "history.csv"));
    EXPECT_EQ(slurp(a.path() / "checkpoint.sfbc"), slurp(b.path() / "checkpoint.sfbc"));
}

TEST_F(Cli, CorruptCheckpointIsFault) {
    test::TempDir dir;
    std::ofstream(dir.path() / "broken.sfbc") << "not a checkpoint";
    const auto r = sfbc_cli("eval --case tc4 --data " + (root_ / "tc4" / "manifest.json").string() + " --checkpoint " +
                                (dir.path() / "broken.sfbc").string() + " --out " + dir.path().string(),
                            dir.path());
    EXPECT_EQ(r.code, 2);
}

}  // namespace
}  // namespace sfbc
