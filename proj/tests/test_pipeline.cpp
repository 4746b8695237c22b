#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "deltaclass/session.hpp"
#include "support/synthetic.hpp"

using namespace deltaclass;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result cli(const fs::path& session, const std::string& args) {
  std::string cmd = std::string(DELTACLASS_CLI) + " -s '" + session.string() + "' " + args + " 2>&1";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.output.append(buf, n);
  int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("deltaclass_pipeline_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const std::string kHistory = DELTACLASS_FIXTURES "/synthetic_history.diffs";
const std::string kClasses = "add,delete,format,refactor,fix";

// Ids from representatives.csv (cluster,rank,change_id).
std::vector<std::string> representatives(const fs::path& session) {
  std::vector<std::string> ids;
  std::istringstream in(slurp(session / "representatives.csv"));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) ids.push_back(line.substr(line.rfind(',') + 1));
  return ids;
}

// Runs every verb up to evaluate; returns the session directory.
fs::path full_run(const fs::path& root) {
  auto s = root / "session";
  const auto corpus = testing::generate_synthetic();
  REQUIRE(cli(s, "init --classes " + kClasses + " --seed 5 --p-min 0.8 --e-max 0.3").code == 0);
  REQUIRE(cli(s, "ingest " + kHistory).code == 0);
  REQUIRE(cli(s, "measure").code == 0);
  REQUIRE(cli(s, "cluster").code == 0);
  std::ofstream(root / "empty.log") << "";
  REQUIRE(cli(s, "label --import '" + (root / "empty.log").string() + "'").code == 0);
  std::ofstream(root / "labels.log") << testing::truth_labels(corpus, representatives(s), "gen");
  REQUIRE(cli(s, "label --import '" + (root / "labels.log").string() + "'").code == 0);
  REQUIRE(cli(s, "map").code == 0);
  REQUIRE(cli(s, "classify").code == 0);
  std::ofstream(root / "verif.csv") << testing::truth_verification_csv(corpus, 50, 21);
  auto ev = cli(s, "evaluate --verification '" + (root / "verif.csv").string() + "'");
  INFO(ev.output);
  REQUIRE(ev.code == 0);
  return s;
}

}  // namespace

TEST_CASE("bundled synthetic fixture matches the generator") {
  auto corpus = testing::generate_synthetic();
  CHECK(slurp(kHistory) == corpus.history);
  std::string truth = "change_id,class\n";
  for (const auto& c : corpus.changes) truth += c.change_id + "," + c.truth + "\n";
  CHECK(slurp(DELTACLASS_FIXTURES "/synthetic_truth.csv") == truth);
}

TEST_CASE("verbs must run in order") {
  TempDir d("order");
  auto s = d.path / "session";
  auto r = cli(s, "measure");
  CHECK(r.code == 1);
  CHECK(r.output.find("init") != std::string::npos);

  REQUIRE(cli(s, "init --classes " + kClasses).code == 0);
  r = cli(s, "cluster");
  CHECK(r.code == 1);
  CHECK(r.output.find("run `measure` first") != std::string::npos);

  REQUIRE(cli(s, "ingest " + kHistory).code == 0);
  REQUIRE(cli(s, "measure").code == 0);
  REQUIRE(cli(s, "cluster").code == 0);
  r = cli(s, "evaluate");
  CHECK(r.code == 1);
  CHECK(r.output.find("run `map` first") != std::string::npos);

  // No labels yet: every cluster is unresolved.
  std::ofstream(d.path / "empty.log") << "";
  REQUIRE(cli(s, "label --import '" + (d.path / "empty.log").string() + "'").code == 0);
  r = cli(s, "map");
  CHECK(r.code == 1);
  CHECK(r.output.find("unresolved") != std::string::npos);

  std::ofstream(d.path / "bad.log") << "s001\tnonsense\te\t0\n";
  r = cli(s, "label --import '" + (d.path / "bad.log").string() + "'");
  CHECK(r.code == 1);
  CHECK(r.output.find("nonsense") != std::string::npos);

  CHECK(cli(s, "frobnicate").code == 1);
}

TEST_CASE("full synthetic run through the command line") {
  TempDir d("full");
  auto s = full_run(d.path);
  auto report = nlohmann::json::parse(slurp(s / "report.json"));
  CHECK(report["verification_size"] == 50);
  CHECK(report["P_Q"].get<double>() >= 0.9);
  CHECK(report["resampling"]["resampled_count"] == 200);
  CHECK(report.contains("hypothesis"));
  CHECK(Session::open(s).stage() == Stage::Evaluated);

  auto classified = slurp(s / "classified.csv");
  std::size_t lines = std::count(classified.begin(), classified.end(), '\n');
  CHECK(lines == 301);

  auto status = cli(s, "report");
  CHECK(status.code == 0);
  CHECK(status.output.find("evaluated") != std::string::npos);
  auto csv = cli(s, "report --export csv");
  CHECK(csv.code == 0);
  CHECK(csv.output.rfind("cluster,mapped,add,delete,format,refactor,fix,n_e,purity,entropy\n", 0) == 0);
  CHECK(cli(s, "report --export text").output == slurp(s / "report.txt"));

  // Re-running a verb with unchanged inputs keeps the later stages.
  auto before = slurp(s / "manifest.json");
  REQUIRE(cli(s, "cluster").code == 0);
  CHECK(Session::open(s).stage() == Stage::Evaluated);
  CHECK(slurp(s / "manifest.json") == before);

  // A config edit that touches only evaluation rolls back just that stage.
  REQUIRE(cli(s, "init --alpha 0.1").code == 0);
  CHECK(Session::open(s).stage() == Stage::Classified);
  auto again = cli(s, "evaluate");
  CHECK(again.code == 0);
}

TEST_CASE("two runs produce identical artifacts") {
  TempDir a("det_a"), b("det_b");
  auto sa = full_run(a.path), sb = full_run(b.path);
  for (const auto* name : {"corpus.json", "vectors.csv", "clustering.csv", "clustering.json", "cluster_trace.txt",
                           "representatives.csv", "mapping.json", "classified.csv", "contingency.txt", "report.txt",
                           "report.json"}) {
    CAPTURE(name);
    CHECK(slurp(sa / name) == slurp(sb / name));
  }
}

TEST_CASE("session environment variable") {
  TempDir d("env");
  auto s = d.path / "from_env";
  std::string cmd = "DELTACLASS_SESSION='" + s.string() + "' " + DELTACLASS_CLI + " init --classes a,b >/dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(s / "manifest.json"));
}
