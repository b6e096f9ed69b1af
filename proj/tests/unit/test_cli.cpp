#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"
#include "edcluster/errors.hpp"
#include "edcluster/field_store.hpp"
#include "edcluster/synthetic.hpp"
#include "json.hpp"
#include "run_config.hpp"

using namespace edc;
namespace fs = std::filesystem;

namespace {

struct Sandbox {
  fs::path root;
  explicit Sandbox(const std::string& name) : root(fs::temp_directory_path() / ("edcluster_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Sandbox() { fs::remove_all(root); }
  std::string path(const std::string& rel) const { return (root / rel).string(); }
};

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = cli::parse_run_config(nlohmann::json::parse(
      R"({"input":"x.json","measure":"L2","algorithm":"HAC","linkage":"complete","k":4,"k_range":"2..5","seed":3})"));
  CHECK(c.measure == Measure::L2);
  CHECK(c.algorithm == Algorithm::HAC);
  CHECK(c.linkage == Linkage::Complete);
  CHECK(*c.k == 4);
  CHECK(c.k_range == std::vector<std::size_t>{2, 3, 4, 5});
  CHECK_THROWS_AS(cli::parse_run_config(nlohmann::json::parse(R"({"kk":3})")), ConfigError);
  CHECK_THROWS_AS(cli::parse_run_config(nlohmann::json::parse(R"({"k_range":[]})")), ConfigError);
  CHECK(cli::parse_k_range("2,3,7") == std::vector<std::size_t>{2, 3, 7});
}

TEST_CASE("config hash ignores output location") {
  cli::RunConfig a, b;
  a.input = b.input = "s.json";
  a.output = "one";
  b.output = "two";
  CHECK(cli::config_hash(a) == cli::config_hash(b));
  b.seed = 1;
  CHECK(cli::config_hash(a) != cli::config_hash(b));
}

TEST_CASE("exit codes") {
  Sandbox box("codes");
  CHECK(run({"cluster", "--input", box.path("missing.json"), "--k", "3"}) == cli::kExitData);
  CHECK(run({"cluster", "--k", "3"}) == cli::kExitConfig);
  CHECK(run({"frobnicate"}) == cli::kExitConfig);
  CHECK(run({"cluster", "--config", box.path("nope.json")}) == cli::kExitConfig);
  CHECK(run({"--help"}) == cli::kExitOk);
}

TEST_CASE("demo-l2 reproduces the pathology") {
  std::string out;
  CHECK(run({"demo-l2"}, &out) == 0);
  CHECK(out.find("pathology reproduced") != std::string::npos);
  CHECK(run({"demo-l2", "--within-zone"}) == 0);
}

TEST_CASE("edges command prints presets") {
  std::string out;
  CHECK(run({"edges", "--preset", "beaufort"}, &out) == 0);
  const auto doc = nlohmann::json::parse(out);
  CHECK(doc["edges"].size() == 12);
  CHECK(run({"edges", "--preset", "nope"}) == cli::kExitConfig);
}

TEST_CASE("synth, cluster and sweep") {
  Sandbox box("flow");
  REQUIRE(run({"synth", "--days-per-regime", "8", "--rows", "12", "--cols", "12", "--out", box.path("s.json"),
               "--labels", box.path("labels.csv")}) == 0);
  CHECK(fs::exists(box.path("labels.csv")));

  std::string err;
  CHECK(run({"cluster", "--input", box.path("s.json"), "--k", "50"}, nullptr, &err) == cli::kExitConfig);

  REQUIRE(run({"cluster", "--input", box.path("s.json"), "--k", "5", "--measure", "L2", "--out", box.path("l2")}) == 0);
  CHECK(fs::exists(box.path("l2/centroids.json")));
  const auto doc = nlohmann::json::parse(std::ifstream(box.path("l2/result.json")));
  CHECK(doc["measure"] == "L2");
  CHECK(doc["assignments"].size() == 40);
  CHECK(doc["clusters"].size() == 5);

  REQUIRE(run({"cluster", "--input", box.path("s.json"), "--k", "5", "--algorithm", "HAC", "--out", box.path("hac")}) ==
          0);
  CHECK(nlohmann::json::parse(std::ifstream(box.path("hac/result.json")))["linkage"] == "average");

  REQUIRE(run({"sweep", "--input", box.path("s.json"), "--k-range", "2..6", "--measures", "ED,L2", "--algorithms",
               "KMS,HAC", "--out", box.path("sw")}) == 0);
  std::ifstream csv(box.path("sw/sweep.csv"));
  std::size_t rows = 0;
  for (std::string line; std::getline(csv, line);) rows += !line.empty() && line[0] != '#';
  CHECK(rows == 1 + 5 * 4);
  std::ifstream svg(box.path("sw/sweep.svg"));
  std::string text((std::istreambuf_iterator<char>(svg)), {});
  CHECK(text.find("<polyline") != std::string::npos);

  CHECK(run({"sweep", "--input", box.path("s.json"), "--out", box.path("sw2")}) == cli::kExitConfig);
  CHECK(run({"matrix", "--input", box.path("s.json"), "--out", box.path("mx")}) == 0);
  CHECK(fs::exists(box.path("mx/matrix.json")));
}

TEST_CASE("ingest CSV days") {
  Sandbox box("ingest");
  std::ofstream(box.path("d1.csv")) << "0,1\n2,3\n";
  std::ofstream(box.path("d2.csv")) << "4,5\n6,7\n";
  std::string err;
  REQUIRE(run({"ingest", "--csv", box.path("d1.csv"), box.path("d2.csv"), "--dates", "2000-01-01,2000-01-03", "--out",
               box.path("st.json")},
              nullptr, &err) == 0);
  CHECK(err.find("gap") != std::string::npos);
  const FieldStack s = load_stack(box.path("st.json"));
  CHECK(s.size() == 2);
  CHECK(s.days[1].values[3] == 7.0f);
}
