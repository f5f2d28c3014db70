#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string err;
};

const fs::path& workdir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "plume_scout_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Result run(const std::string& args) {
    const fs::path err = workdir() / "stderr.txt";
    const std::string cmd = "cd '" + workdir().string() + "' && '" PLUME_SCOUT_CLI "' " + args + " 2>'" +
                            err.string() + "' >/dev/null";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

}  // namespace

TEST_CASE("make-scenario") {
    CHECK(run("make-scenario --preset paperlike -o s.json").code == 0);
    const auto doc = nlohmann::json::parse(slurp(workdir() / "s.json"));
    CHECK(doc["grid"]["rows"].get<int>() * doc["grid"]["cols"].get<int>() == 100);
    CHECK(run("make-scenario --grid 1x1 -o one.json").code == 0);
    CHECK(run("make-scenario --alpha -1 -o bad.json").code == 2);
    CHECK(run("make-scenario --grid 3by3 -o bad.json").code == 2);
    CHECK(run("make-scenario -o /nonexistent-dir/s.json").code == 4);
    CHECK(run("make-scenario -o s.json").code == 2);  // exists, no --force
    CHECK(run("make-scenario -o s.json --force").code == 0);
    CHECK(run("frobnicate").code == 2);
}

TEST_CASE("train, eval and baseline") {
    REQUIRE(run("make-scenario -o s.json --force").code == 0);
    const auto bad = run("train --scenario s.json --method sarsa --out r");
    CHECK(bad.code == 2);
    CHECK(bad.err.find("da-diff") != std::string::npos);
    CHECK(run("train --scenario missing.json --out r").code == 2);

    CHECK(run("train --scenario s.json --steps 0 --seeds 1 --out empty").code == 0);
    CHECK(fs::exists(workdir() / "empty" / "manifest.json"));

    REQUIRE(run("train --scenario s.json --steps 200 --eval-period 100 --eval-episodes 2 --seeds 3 --out run").code == 0);
    CHECK(run("train --scenario s.json --steps 200 --seeds 3 --out run").code == 2);  // not empty
    const std::string curve = slurp(workdir() / "run" / "learning_curve.csv");
    CHECK(std::count(curve.begin(), curve.end(), '\n') == 3);

    CHECK(run("eval --checkpoint missing/ --out e").code == 2);
    REQUIRE(run("eval --checkpoint run --episodes 3 --trace trace.jsonl --out e").code == 0);
    const std::string eval = slurp(workdir() / "e" / "eval.csv");
    CHECK(std::count(eval.begin(), eval.end(), '\n') == 4);
    std::istringstream trace(slurp(workdir() / "trace.jsonl"));
    std::string line;
    int lines = 0;
    while (std::getline(trace, line)) {
        CHECK(nlohmann::json::accept(line));
        ++lines;
    }
    CHECK(lines > 0);
    CHECK(run("eval --checkpoint run/checkpoints/seed_3 --episodes 2 --out e2").code == 0);

    CHECK(run("baseline --scenario s.json --episodes 200 --out b").code == 0);
    const std::string base = slurp(workdir() / "b" / "baseline.csv");
    CHECK(base.rfind("episode,final_mae,step_mean_mae,team_return\n", 0) == 0);
    CHECK(std::count(base.begin(), base.end(), '\n') == 201);
}

TEST_CASE("sweep and report") {
    REQUIRE(run("make-scenario -o s.json --force").code == 0);
    REQUIRE(run("sweep --scenario s.json --steps 20 --eval-period 20 --eval-episodes 1 --seeds 1,2 "
                "--alphas 0.1,0.3 --budgets 500,2000 --methods da-diff,random --baseline-episodes 5 --out sw")
                .code == 0);
    const std::string summary = slurp(workdir() / "sw" / "summary.csv");
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 2 + 8);

    CHECK(run("report --input sw --out rep").code == 0);
    CHECK(fs::exists(workdir() / "rep" / "learning_curve.svg"));
    CHECK(fs::exists(workdir() / "rep" / "budget_mae.svg"));
    CHECK(slurp(workdir() / "rep" / "summary.md").find("| da-diff |") != std::string::npos);

    std::ofstream(workdir() / "header_only.csv")
        << "method,seed,step,eval_final_mae_mean,eval_final_mae_std,eval_step_mean_mae,team_return_mean\n";
    const auto empty = run("report --input header_only.csv --out rep_empty");
    CHECK(empty.code == 0);
    CHECK(empty.err.find("warning") != std::string::npos);
    CHECK(slurp(workdir() / "rep_empty" / "learning_curve.svg").find("class=\"axes\"") != std::string::npos);

    std::ofstream(workdir() / "broken.csv")
        << "method,seed,step,eval_final_mae_mean,eval_final_mae_std,eval_step_mean_mae,team_return_mean\n"
        << "da-diff,1,100,0.5,0.1,0.6,1\n"
        << "da-diff,1,200,zero,0.1,0.6,1\n";
    const auto broken = run("report --input broken.csv --out rep_bad");
    CHECK(broken.code == 2);
    CHECK(broken.err.find("line 3") != std::string::npos);
}
