#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "drdamp/cli.hpp"

using namespace drdamp;
namespace fs = std::filesystem;

namespace {

const fs::path kData = DRDAMP_DATA_DIR;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "drdamp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("drdamp_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Small run configuration written next to copies of the data files.
fs::path write_config(const fs::path& dir, const Json& overrides = Json::object()) {
  fs::copy_file(kData / "testbed.json", dir / "testbed.json", fs::copy_options::overwrite_existing);
  fs::copy_file(kData / "empirical_samples.csv", dir / "samples.csv", fs::copy_options::overwrite_existing);
  Json j{{"testbed", "testbed.json"},
         {"samples", "samples.csv"},
         {"output", "out"},
         {"seed", 11},
         {"sobol", {{"n_base", 64}, {"decision", {"k_m", "t_1"}}}},
         {"pce", {{"order", 3}, {"design_size", 20}, {"n_validation", 50}, {"pdf_samples", 5000}}},
         {"dro", {{"grid_points", 4}, {"tolerance", 0.05}, {"max_evaluations", 80}}},
         {"scenarios", {{"count", 40}}},
         {"simulate", {{"horizon", 2.0}, {"dt", 0.05}}}};
  j.update(overrides);
  write_json(dir / "run.json", j);
  return dir / "run.json";
}

std::vector<std::string> listing(const fs::path& dir) {
  std::vector<std::string> names;
  if (!fs::exists(dir)) return names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

} // namespace

TEST_CASE("analyze reports the critical mode and writes modes.json", "[cli]") {
  const fs::path dir = fresh_dir("analyze");
  const fs::path cfg = write_config(dir);
  const auto r = invoke({"analyze", "--config", cfg.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("closed-loop critical mode") != std::string::npos);
  const Json modes = read_json(dir / "out" / "modes.json");
  CHECK(modes.at("open_loop").at("modes").size() == 4);
  CHECK(modes.at("closed_loop").at("modes").size() == 7);
  CHECK_FALSE(fs::exists(dir / "out" / ".drdamp.lock"));
}

TEST_CASE("reruns with the same seed are byte-identical", "[cli]") {
  const fs::path dir = fresh_dir("rerun");
  const fs::path cfg = write_config(dir);
  std::map<std::string, std::string> first;
  for (const char* cmd : {"sobol", "pce", "tune", "validate", "simulate"}) {
    const auto r = invoke({cmd, "--config", cfg.string(), "--method", "so"});
    REQUIRE(r.code == 0);
  }
  for (const auto& name : listing(dir / "out")) first[name] = read_text(dir / "out" / name);
  CHECK(first.count("report_so.json") == 1);
  CHECK(first.count("validation.csv") == 1);
  fs::remove_all(dir / "out");
  for (const char* cmd : {"sobol", "pce", "tune", "validate", "simulate"})
    REQUIRE(invoke({cmd, "--config", cfg.string(), "--method", "so"}).code == 0);
  for (const auto& [name, text] : first) CHECK(read_text(dir / "out" / name) == text);
}

TEST_CASE("a different seed changes seeded artifacts", "[cli]") {
  const fs::path dir = fresh_dir("seed");
  const fs::path cfg = write_config(dir);
  REQUIRE(invoke({"sobol", "--config", cfg.string(), "--out", (dir / "a").string()}).code == 0);
  REQUIRE(invoke({"sobol", "--config", cfg.string(), "--seed", "12", "--out", (dir / "b").string()}).code == 0);
  CHECK(read_text(dir / "a" / "sobol_ranking.csv") != read_text(dir / "b" / "sobol_ranking.csv"));
}

TEST_CASE("csv report format", "[cli]") {
  const fs::path dir = fresh_dir("csv");
  const fs::path cfg = write_config(dir);
  const auto r = invoke({"tune", "--config", cfg.string(), "--method", "drdoc", "--format", "csv"});
  REQUIRE(r.code == 0);
  const std::string text = read_text(dir / "out" / "report_drdoc.csv");
  CHECK(text.rfind("method,status,k_m", 0) == 0);
  CHECK(fs::exists(dir / "out" / "trace_drdoc.csv"));
  CHECK_FALSE(fs::exists(dir / "out" / "report_drdoc.json"));
}

TEST_CASE("errors are one line on stderr with a nonzero exit", "[cli]") {
  const fs::path dir = fresh_dir("errors");
  const fs::path cfg = write_config(dir);
  Json j = read_json(cfg);
  j.erase("seed");
  write_json(dir / "noseed.json", j);

  const auto missing = invoke({"analyze", "--config", (dir / "noseed.json").string()});
  CHECK(missing.code != 0);
  CHECK(missing.err.find("seed") != std::string::npos);
  CHECK(std::count(missing.err.begin(), missing.err.end(), '\n') == 1);

  j["seed"] = 1;
  j["bogus"] = true;
  write_json(dir / "unknown.json", j);
  const auto unknown = invoke({"analyze", "--config", (dir / "unknown.json").string()});
  CHECK(unknown.code != 0);
  CHECK(unknown.err.find("bogus") != std::string::npos);

  const auto bad_cmd = invoke({"frobnicate"});
  CHECK(bad_cmd.code != 0);
  CHECK(std::count(bad_cmd.err.begin(), bad_cmd.err.end(), '\n') == 1);

  const auto bad_method = invoke({"tune", "--config", cfg.string(), "--method", "best"});
  CHECK(bad_method.code != 0);

  write_text(dir / "samples.csv", "e_pu\n0.1\nnot-a-number\n");
  const auto bad_samples = invoke({"tune", "--config", cfg.string(), "--out", (dir / "bad").string()});
  CHECK(bad_samples.code != 0);
  CHECK(bad_samples.err.find("line 3") != std::string::npos);
  CHECK(listing(dir / "bad").empty());
}

TEST_CASE("validate without reports fails and leaves no artifacts", "[cli]") {
  const fs::path dir = fresh_dir("validate");
  const fs::path cfg = write_config(dir);
  const auto r = invoke({"validate", "--config", cfg.string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("tune") != std::string::npos);
  CHECK(listing(dir / "out").empty());
}

TEST_CASE("a held lock blocks a second run", "[cli]") {
  const fs::path dir = fresh_dir("lock");
  const fs::path cfg = write_config(dir);
  fs::create_directories(dir / "out");
  write_text(dir / "out" / ".drdamp.lock", "");
  const auto r = invoke({"analyze", "--config", cfg.string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("locked") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out" / "modes.json"));
  fs::remove(dir / "out" / ".drdamp.lock");
  CHECK(invoke({"analyze", "--config", cfg.string()}).code == 0);
}

TEST_CASE("infeasible constraints make tune fail", "[cli]") {
  const fs::path dir = fresh_dir("infeasible");
  const fs::path cfg = write_config(dir, Json{{"dro", {{"zeta_min", 0.5}, {"zeta_max", 0.6}, {"grid_points", 3}}}});
  const auto r = invoke({"tune", "--config", cfg.string(), "--method", "so"});
  CHECK(r.code != 0);
  CHECK(r.err.find("infeasible") != std::string::npos);
  CHECK(listing(dir / "out").empty());
}
