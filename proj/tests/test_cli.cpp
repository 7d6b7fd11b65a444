#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "serpaudit/pipeline.hpp"

using namespace serpaudit;
namespace fs = std::filesystem;

namespace {

const char* cli_path() { return SERPAUDIT_CLI_PATH; }

int run_cli(const std::string& args, const fs::path& stderr_file = {}) {
    std::string cmd = std::string(cli_path()) + " " + args;
    if (!stderr_file.empty()) cmd += " 2>" + stderr_file.string();
    else cmd += " 2>/dev/null";
    cmd += " >/dev/null";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

fs::path write_config(const fs::path& dir, int n_days, int per_day) {
    const auto cfg = serpaudit::testing::make_experiment_config((dir / "out").string(), 1, n_days);
    nlohmann::json j;
    j["seed"] = 21;
    j["output_dir"] = "out";
    j["n_days"] = n_days;
    j["start_date"] = "2020-10-22";
    j["election_queries"] = {{"pool", cfg.elections.pool}, {"per_day", per_day}};
    j["engine"] = {{"lambda_fam", 0.8}, {"noise_sd", 0.2}, {"top_story_prob", 0.5},
                   {"index", {{"synth", nlohmann::json::object()}}}};
    nlohmann::json pop;
    for (const auto& c : cfg.population.cities) {
        pop["cities"].push_back({{"name", c.name}, {"rep_vote_share", c.rep_vote_share}, {"utc_offset", c.utc_offset_hours}});
    }
    pop["popular_domains"] = cfg.population.popular_domains;
    pop["partisan_domains"] = {{"democrat", cfg.population.partisan_domains_democrat},
                               {"republican", cfg.population.partisan_domains_republican}};
    pop["partisan_terms"] = {{"democrat", cfg.population.partisan_terms_democrat},
                             {"republican", cfg.population.partisan_terms_republican}};
    pop["hashtags"] = {{"democrat", cfg.population.hashtags_democrat},
                       {"republican", cfg.population.hashtags_republican}};
    j["population"] = pop;
    const auto path = dir / "config.json";
    std::ofstream f(path);
    f << j.dump(2);
    return path;
}

}  // namespace

TEST(Cli, StagedPipelineMatchesChainedRun) {
    const auto dir = fs::temp_directory_path() / "serpaudit_tests" / "cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto config = write_config(dir, 2, 2);

    ASSERT_EQ(run_cli("genpop --config " + config.string()), 0);
    ASSERT_TRUE(fs::exists(dir / "out" / "population.jsonl"));
    ASSERT_EQ(run_cli("simulate --config " + config.string()), 0);
    ASSERT_TRUE(fs::exists(dir / "out" / "serps.jsonl"));
    ASSERT_EQ(run_cli("panel --config " + config.string()), 0);
    ASSERT_TRUE(fs::exists(dir / "out" / "panel.csv"));
    ASSERT_EQ(run_cli("fit --config " + config.string()), 0);
    ASSERT_TRUE(fs::exists(dir / "out" / "fit" / "sris_new.csv"));
    ASSERT_EQ(run_cli("report --config " + config.string()), 0);
    ASSERT_TRUE(fs::exists(dir / "out" / "report" / "similarity.csv"));

    // the record schema on disk is the documented JSON Lines form
    std::ifstream serps(dir / "out" / "serps.jsonl");
    std::string line;
    ASSERT_TRUE(std::getline(serps, line));
    const auto j = nlohmann::json::parse(line);
    for (const auto* key : {"user_id", "ts", "query", "organic", "top_stories", "lang"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
}

TEST(Cli, SeedOverrideChangesOutputs) {
    const auto dir = fs::temp_directory_path() / "serpaudit_tests" / "cli_seed";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto config = write_config(dir, 1, 1);

    ASSERT_EQ(run_cli("genpop --config " + config.string() + " --out " + (dir / "a").string()), 0);
    ASSERT_EQ(run_cli("genpop --config " + config.string() + " --out " + (dir / "b").string()), 0);
    ASSERT_EQ(run_cli("genpop --config " + config.string() + " --seed 99 --out " + (dir / "c").string()), 0);

    std::ostringstream a, b, c;
    a << std::ifstream((dir / "a" / "population.jsonl")).rdbuf();
    b << std::ifstream((dir / "b" / "population.jsonl")).rdbuf();
    c << std::ifstream((dir / "c" / "population.jsonl")).rdbuf();
    EXPECT_EQ(a.str(), b.str());
    EXPECT_NE(a.str(), c.str());
}

TEST(Cli, ErrorsAreSingleLineAndNonzero) {
    const auto dir = fs::temp_directory_path() / "serpaudit_tests" / "cli_err";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto config = write_config(dir, 1, 1);

    // panel before simulate: missing serps fixture
    const auto errfile = dir / "stderr.txt";
    ASSERT_EQ(run_cli("genpop --config " + config.string()), 0);
    const int rc = run_cli("panel --config " + config.string(), errfile);
    EXPECT_NE(rc, 0);
    std::ifstream ef(errfile);
    std::string line;
    ASSERT_TRUE(std::getline(ef, line));
    EXPECT_EQ(line.rfind("error: ", 0), 0u) << line;
    std::string extra;
    EXPECT_FALSE(std::getline(ef, extra));  // exactly one line

    // unknown config path
    EXPECT_NE(run_cli("genpop --config /nonexistent/config.json"), 0);
    // missing subcommand
    EXPECT_NE(run_cli(""), 0);
}
