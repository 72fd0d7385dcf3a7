#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "evolab/error.hpp"
#include "evolab/pipeline.hpp"

using namespace evolab;
namespace fs = std::filesystem;

namespace {

std::string write_config(const std::string& name, const std::string& text) {
  fs::create_directories("pipeline_cfg");
  const std::string path = "pipeline_cfg/" + name + ".json";
  std::ofstream(path) << text;
  return path;
}

std::string fresh_dir(const std::string& name) {
  const std::string d = "pipeline_out/" + name;
  fs::remove_all(d);
  return d;
}

int run(const std::string& cmd, const std::string& cfg, const std::string& out, std::string* log = nullptr) {
  std::ostringstream os;
  const int rc = run_command(cmd, cfg, out, std::nullopt, os);
  if (log) *log = os.str();
  return rc;
}

std::vector<std::vector<double>> csv_rows(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

} // namespace

TEST_CASE("config parsing") {
  auto c = config_from_json(json::parse(R"({"fixture":"a1"})"));
  CHECK(c.fixture == "a1");
  CHECK_FALSE(c.gibbs);
  try {
    config_from_json(json::parse(R"({"fixture":"a1","tabel":3})"));
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("'tabel'") != std::string::npos);
  }
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"fixture":"a1","stages":["bounds","plot"]})")), Error);
  CHECK_THROWS_WITH_AS(config_from_json(json::parse(R"({"fixture":"robin","gibbs":{"dimz":[8]}})")),
                       doctest::Contains("gibbs.dimz"), Error);
  auto r = config_from_json(json::parse(R"({"problem":{"n":24},"seed":7,"out":"x"})"));
  REQUIRE(r.problem);
  CHECK(r.problem->n == 24);
  CHECK(r.seed == 7u);
  CHECK(r.out_dir == "x");
}

TEST_CASE("bounds command") {
  const auto out = fresh_dir("a1_bounds");
  CHECK(run("bounds", write_config("a1", R"({"fixture":"a1"})"), out) == 0);
  auto b = read_json_file(out + "/bounds.json");
  CHECK(b["M"].get<double>() == doctest::Approx(1.0));
  CHECK(b["alpha"].get<double>() == doctest::Approx(1.0));

  std::string log;
  CHECK(run("bounds", write_config("bad", R"({"problem":{"n":16,"beta":{"b0":1,"c":1,"alpha":0.26},"r0":0.49}})"),
            fresh_dir("bad"), &log) == 2);
  CHECK(log.find("DiniViolated") != std::string::npos);

  CHECK(run("bounds", write_config("mal", R"({"fixture": "a1",)"), fresh_dir("mal"), &log) == 1);
  CHECK(run("bounds", write_config("typo", R"({"fixture":"a1","tabel":3})"), fresh_dir("typo"), &log) == 1);
  CHECK(log.find("'tabel'") != std::string::npos);
  CHECK(run("bounds", "pipeline_cfg/does_not_exist.json", fresh_dir("nofile")) == 1);
}

TEST_CASE("evolve and verify dependencies") {
  std::string log;
  const auto cfg = write_config("as", R"({"fixture":"autonomous-symmetric"})");
  CHECK(run("verify", cfg, fresh_dir("nodep"), &log) == 1);
  CHECK(log.find("MissingDependency") != std::string::npos);
  CHECK(log.find("evolve") != std::string::npos);
  CHECK(run("report", "", fresh_dir("noreport"), &log) == 1);

  const auto p05 = write_config("p05", R"({"fixture":"robin","schatten_p":[0.5]})");
  CHECK(run("verify", p05, fresh_dir("p05"), &log) == 1);
  CHECK(log.find("POutOfRange") != std::string::npos);
  CHECK(run("frobnicate", cfg, fresh_dir("cmd")) == 1);
}

TEST_CASE("autonomous fixture: exact evolution law and every flag passes") {
  const auto out = fresh_dir("as");
  const auto cfg = write_config("as", R"({"fixture":"autonomous-symmetric"})");
  REQUIRE(run("evolve", cfg, out) == 0);
  for (const auto& row : csv_rows(out + "/pairs.csv")) CHECK(row.at(6) < 1e-12);
  REQUIRE(run("robin", cfg, out) == 0);
  auto s = read_json_file(out + "/summary.json");
  CHECK(s["all_pass"] == true);
  for (auto& [k, v] : s["flags"].items()) CHECK_MESSAGE(v == true, k);
  CHECK(run("report", "", out) == 0);
  CHECK(fs::exists(out + "/report.txt"));
  for (const char* f : {"bounds.json", "table.json", "pairs.csv", "regularity.json", "suites.csv"})
    CHECK_MESSAGE(fs::exists(out + "/" + f), f);
  CHECK(fs::exists(out + "/plotdata/gibbs.csv") == false);
  CHECK(fs::exists(out + "/plotdata/modulus_V_s_fixed.csv"));
}

TEST_CASE("CSV headers name the Gram of each column") {
  const auto out = fresh_dir("a1");
  const auto cfg = write_config("a1", R"({"fixture":"a1"})");
  REQUIRE(run("evolve", cfg, out) == 0);
  REQUIRE(run("verify", cfg, out) == 0);
  std::ifstream in(out + "/pairs.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.find("[gram_H]") != std::string::npos);
  CHECK(header.find("[gram_V]") != std::string::npos);
  for (const auto& e : fs::directory_iterator(out + "/plotdata")) {
    std::ifstream p(e.path());
    std::getline(p, header);
    CHECK_MESSAGE(header.find("gram_") != std::string::npos, e.path().string());
  }
}

TEST_CASE("stages and out keys") {
  const auto cfg = write_config("stages", R"({"fixture":"a1","stages":["bounds"],"out":"pipeline_out/from_config"})");
  fs::remove_all("pipeline_out/from_config");
  CHECK(run("robin", cfg, "") == 0);
  CHECK(fs::exists("pipeline_out/from_config/bounds.json"));
  CHECK_FALSE(fs::exists("pipeline_out/from_config/table.json"));
}
