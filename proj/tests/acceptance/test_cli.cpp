// Drives the command-line tool as a separate process.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

const std::string kSmoke = std::string(RD_SOURCE_DIR) + "/configs/smoke.conf";

// Small data and short training so each case runs in seconds.
const std::string kFast = " --set data.num_pairs=300 --set data.id_pairs=50 --set data.ood_pairs=50"
                          " --set train.epochs=2 --set flow.iterations=50 --set refl.iterations=10"
                          " --set refl.log_window=5 --set refl.bon_n=4 --set refl.eval_samples=20";

struct Result {
    int status = -1;
    std::string output;
};

std::string shell_output(const std::string& cmd, int* status = nullptr)
{
    std::string out;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf {};
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) {
        out += buf.data();
    }
    const int rc = ::pclose(pipe);
    if (status) {
        *status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    }
    return out;
}

Result cli(const fs::path& cwd, const std::string& args)
{
    Result r;
    r.output = shell_output("cd '" + cwd.string() + "' && '" RD_CLI_PATH "' " + args + " 2>&1", &r.status);
    return r;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

std::size_t count_lines(const fs::path& p)
{
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) {
        n += !line.empty();
    }
    return n;
}

struct Workdir {
    fs::path path = fs::temp_directory_path() / ("rewarddance_cli_" + std::to_string(::getpid()));
    Workdir()
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~Workdir()
    {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

} // namespace

TEST_CASE("gen-data writes num_pairs lines and a verifiable manifest")
{
    Workdir w;
    const auto r = cli(w.path, "gen-data -c '" + kSmoke + "'" + kFast + " -o data");
    REQUIRE(r.status == 0);
    CHECK(count_lines(w.path / "data" / "pairs.jsonl") == 300);

    // Nothing outside the output directory, and exactly one manifest inside it.
    std::size_t entries = 0, manifests = 0;
    for (const auto& e : fs::directory_iterator(w.path)) {
        ++entries;
        CHECK(e.path().filename() == "data");
    }
    for (const auto& e : fs::recursive_directory_iterator(w.path / "data")) {
        manifests += e.path().filename() == "manifest.json";
    }
    CHECK(entries == 1);
    CHECK(manifests == 1);

    const auto manifest = Json::parse(read_file(w.path / "data" / "manifest.json"));
    CHECK(manifest["command"] == "gen-data");
    CHECK(manifest["status"] == "ok");
    CHECK(manifest["seeds"]["data.seed"] == "0");
    REQUIRE(manifest["outputs"].size() == 1);
    const auto& out = manifest["outputs"][0];
    const std::string git = shell_output("git hash-object '" + (w.path / "data" / out["path"].get<std::string>()).string() + "'");
    CHECK(out["sha1"].get<std::string>() + "\n" == git);
    const auto& in = manifest["inputs"][0];
    CHECK(in["sha1"].get<std::string>() + "\n" == shell_output("git hash-object '" + in["path"].get<std::string>() + "'"));

    // The config snapshot alone reproduces the output.
    {
        std::ofstream(w.path / "replay.conf") << manifest["config"].get<std::string>();
    }
    REQUIRE(cli(w.path, "gen-data -c replay.conf -o replay").status == 0);
    CHECK(read_file(w.path / "replay" / "pairs.jsonl") == read_file(w.path / "data" / "pairs.jsonl"));
}

TEST_CASE("eval-rm with the hard oracle on clean data prints accuracy 1.000")
{
    Workdir w;
    REQUIRE(cli(w.path, "gen-data -c '" + kSmoke + "'" + kFast + " --set data.noise_rate=0 -o data").status == 0);
    const auto r = cli(w.path, "eval-rm -c '" + kSmoke + "' --data data/pairs.jsonl --backend oracle-hard --split id -o eval");
    REQUIRE(r.status == 0);
    CHECK(r.output.find("id accuracy 1.000") != std::string::npos);
    CHECK(Json::parse(read_file(w.path / "eval" / "accuracy.json"))["id"]["accuracy"] == 1.0);
}

TEST_CASE("exit codes")
{
    Workdir w;
    SUBCASE("invalid config values exit 1 and name the field")
    {
        const auto r = cli(w.path, "gen-data -c '" + kSmoke + "' --set data.noise_rate=0.7 -o data");
        CHECK(r.status == 1);
        CHECK(r.output.find("data.noise_rate") != std::string::npos);
    }
    SUBCASE("a malformed config file exits 1 with its line")
    {
        {
            std::ofstream(w.path / "broken.conf") << "data.dim = 2\ndata.seed\n";
        }
        const auto r = cli(w.path, "gen-data -c broken.conf -o data");
        CHECK(r.status == 1);
        CHECK(r.output.find("broken.conf:2") != std::string::npos);
    }
    SUBCASE("unknown options exit 1")
    {
        CHECK(cli(w.path, "gen-data -c '" + kSmoke + "' --frobnicate").status == 1);
    }
    SUBCASE("a missing input file exits 2")
    {
        const auto r = cli(w.path, "train-rm -c '" + kSmoke + "' --data absent.jsonl -o rm");
        CHECK(r.status == 2);
        CHECK(r.output.find("absent.jsonl") != std::string::npos);
    }
    SUBCASE("self-test passes")
    {
        const auto r = cli(w.path, "self-test");
        CHECK(r.status == 0);
        CHECK(r.output.find("FAIL") == std::string::npos);
    }
}

TEST_CASE("report: one run gives curves only, missing inputs are enumerated")
{
    Workdir w;
    REQUIRE(cli(w.path, "train-flow -c '" + kSmoke + "'" + kFast + " -o flow").status == 0);
    const auto refl = cli(w.path, "refl -c '" + kSmoke + "'" + kFast + " --flow flow/flow.bin --backend oracle-soft -o run");
    REQUIRE(refl.status == 0);
    CHECK(count_lines(w.path / "run" / "reward_log.csv") == 11);

    REQUIRE(cli(w.path, "report -c '" + kSmoke + "' --run run -o single").status == 0);
    CHECK(fs::exists(w.path / "single" / "reward_curve_run.svg"));
    CHECK_FALSE(fs::exists(w.path / "single" / "bubble_chart.svg"));
    CHECK(read_file(w.path / "single" / "reward_curve_run.svg").find("<svg") != std::string::npos);

    const auto missing = cli(w.path, "report -c '" + kSmoke + "' --run run --run ghost -o broken");
    CHECK(missing.status == 2);
    CHECK(missing.output.find("ghost/reward_log.csv") != std::string::npos);
    CHECK(missing.output.find("ghost/refl_summary.json") != std::string::npos);
}
