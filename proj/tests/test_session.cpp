#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "deltaclass/errors.hpp"
#include "deltaclass/session.hpp"

using namespace deltaclass;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("deltaclass_session_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

SessionConfig base_config() {
  SessionConfig c;
  c.classes = ClassSet::parse("B,F,N,D,R");
  return c;
}

// A session that has gone through ingest, measure and cluster.
Session clustered_session(const fs::path& dir) {
  auto s = Session::create(dir, base_config());
  s.write_artifact("corpus.json", "[]\n", Stage::Ingested);
  s.complete(Stage::Ingested);
  s.write_artifact("vectors.csv", "change_id,loc_add\na,1\n", Stage::Measured);
  s.complete(Stage::Measured);
  s.write_artifact("clustering.csv", "change_id,cluster\na,0\n", Stage::Clustered);
  s.complete(Stage::Clustered);
  return s;
}

std::set<std::string> stale_names(const SessionState& st) {
  std::set<std::string> out;
  for (const auto& [name, rec] : st.artifacts)
    if (rec.stale) out.insert(name);
  return out;
}

SessionState full_state() {
  SessionState st;
  st.stage = Stage::Evaluated;
  st.artifacts = {{"config.json", {"h0", Stage::Initialized, false}}, {"corpus.json", {"h1", Stage::Ingested, false}},
                  {"vectors.csv", {"h2", Stage::Measured, false}},    {"clustering.csv", {"h3", Stage::Clustered, false}},
                  {"representatives.csv", {"h4", Stage::Labeling, false}}, {"mapping.json", {"h5", Stage::Mapped, false}},
                  {"classified.csv", {"h6", Stage::Classified, false}},    {"report.json", {"h7", Stage::Evaluated, false}}};
  return st;
}

}  // namespace

TEST_CASE("config round trip") {
  auto c = base_config();
  CHECK(config_from_json(config_to_json(c)) == c);
  c.k_min = 7;
  c.k_max = 12;
  c.i_min = 3.5;
  c.p_min = 0.71;
  c.e_max = 0.34;
  c.seed = 99;
  c.restarts = 1;
  c.metrics = MetricSelection::parse("loc_add,cc_mod");
  c.zero_vector_policy = ZeroVectorPolicy::OwnCluster;
  CHECK(config_from_json(config_to_json(c)) == c);
  CHECK_THROWS_AS(config_from_json("{}"), Error);
  CHECK(c.effective_k_min() == 7);
  CHECK(base_config().effective_k_min() == 5);
  CHECK(base_config().effective_k_max() == 5);
}

TEST_CASE("save and load") {
  TempDir d;
  {
    auto s = clustered_session(d.path);
    CHECK(s.stage() == Stage::Clustered);
  }
  auto s = Session::open(d.path);
  CHECK(s.stage() == Stage::Clustered);
  CHECK(s.config() == base_config());
  CHECK(s.read_artifact("vectors.csv") == "change_id,loc_add\na,1\n");
  CHECK(load_session(d.path) == s.state());

  // Artifact bytes survive exactly, including odd content.
  std::string odd = "x\r\ny\0z\n\xff";
  odd.push_back('\0');
  s.write_artifact("blob.txt", odd, Stage::Clustered);
  CHECK(Session::open(d.path).read_artifact("blob.txt") == odd);
}

TEST_CASE("tampering is detected") {
  TempDir d;
  clustered_session(d.path);
  {
    std::fstream f(d.path / "vectors.csv", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(3);
    f.put('#');
  }
  CHECK_THROWS_AS(Session::open(d.path), CorruptArtifact);
  fs::remove(d.path / "vectors.csv");
  CHECK_THROWS_AS(load_session(d.path), CorruptArtifact);
}

TEST_CASE("version is checked") {
  TempDir d;
  clustered_session(d.path);
  auto text = std::string(std::istreambuf_iterator<char>(std::ifstream(d.path / "manifest.json").rdbuf()), {});
  auto at = text.find("\"version\": 1");
  REQUIRE(at != std::string::npos);
  text.replace(at, 12, "\"version\": 9");
  std::ofstream(d.path / "manifest.json") << text;
  CHECK_THROWS_AS(load_session(d.path), VersionMismatch);
  CHECK_THROWS_AS(load_session(d.path / "missing"), Error);
}

TEST_CASE("invalidation") {
  auto st = full_state();
  auto after = invalidate_downstream(st, Stage::Ingested);
  CHECK(after.stage == Stage::Ingested);
  CHECK(stale_names(after) == std::set<std::string>{"vectors.csv", "clustering.csv", "representatives.csv",
                                                    "mapping.json", "classified.csv", "report.json"});
  CHECK(after.labels_need_remap);

  after = invalidate_downstream(st, Stage::Classified);
  CHECK(stale_names(after) == std::set<std::string>{"report.json"});
  CHECK_FALSE(after.labels_need_remap);

  CHECK(invalidate_downstream(st, Stage::Evaluated) == st);
}

TEST_CASE("config edits invalidate what they affect") {
  auto a = base_config();
  auto b = a;
  b.metrics = MetricSelection::parse("loc_add,loc_del");
  CHECK(config_change_stage(a, b) == Stage::Ingested);
  b = a;
  b.alpha = 0.1;
  CHECK(config_change_stage(a, b) == Stage::Classified);
  b = a;
  b.i_min = 2.0;
  CHECK(config_change_stage(a, b) == Stage::Measured);
  b = a;
  b.representatives = 3;
  CHECK(config_change_stage(a, b) == Stage::Clustered);
  CHECK_FALSE(config_change_stage(a, a));

  TempDir d;
  auto s = clustered_session(d.path);
  auto before = s.state();
  s.update_config(a);
  CHECK(s.state().stage == before.stage);
  CHECK(stale_names(s.state()).empty());

  auto edited = a;
  edited.metrics = MetricSelection::parse("cc_add");
  s.update_config(edited);
  CHECK(s.stage() == Stage::Ingested);
  CHECK(stale_names(s.state()) == std::set<std::string>{"vectors.csv", "clustering.csv"});
  CHECK_FALSE(s.has_artifact("clustering.csv"));
  CHECK(Session::open(d.path).config() == edited);
}

TEST_CASE("stage requirements name the verb to run") {
  TempDir d;
  auto s = Session::create(d.path, base_config());
  try {
    s.require(Stage::Mapped);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).find("run `map` first") != std::string::npos);
  }
  CHECK_NOTHROW(s.require(Stage::Initialized));
}

TEST_CASE("recompleting with identical output keeps later stages") {
  TempDir d;
  auto s = clustered_session(d.path);
  s.write_artifact("vectors.csv", "change_id,loc_add\na,1\n", Stage::Measured);
  s.complete(Stage::Measured);
  CHECK(s.stage() == Stage::Clustered);

  s.write_artifact("vectors.csv", "change_id,loc_add\na,2\n", Stage::Measured);
  s.complete(Stage::Measured);
  CHECK(s.stage() == Stage::Measured);
  CHECK(stale_names(s.state()) == std::set<std::string>{"clustering.csv"});
}

TEST_CASE("lock") {
  TempDir d;
  fs::create_directories(d.path);
  {
    SessionLock lock(d.path);
    CHECK(fs::exists(d.path / ".lock"));
    CHECK_THROWS_AS(SessionLock(d.path), SessionLocked);
  }
  CHECK_FALSE(fs::exists(d.path / ".lock"));
  // A stale lock from a process that no longer exists is taken over.
  std::ofstream(d.path / ".lock") << "999999999\n";
  CHECK_NOTHROW(SessionLock(d.path));
}

TEST_CASE("label log") {
  TempDir d;
  auto s = Session::create(d.path, base_config());
  CHECK(s.read_labels().empty());
  ExpertLabel a{"c1", "B", "alice", 1700000000}, b{"c2", "F", "bob", 1700000001};
  s.append_label(a);
  s.append_label(b);
  CHECK(s.read_labels() == std::vector<ExpertLabel>{a, b});
  CHECK(format_label_line(a) == "c1\tB\talice\t1700000000\n");
  CHECK(parse_label_log("c1\tB\talice\t1\n\n") == std::vector<ExpertLabel>{{"c1", "B", "alice", 1}});
  CHECK_THROWS_AS(parse_label_log("c1\tB\n"), Error);
}

TEST_CASE("codecs") {
  VectorSet vs(2, "loc_add,cc_mod");
  vs.add("a", {1, -2});
  vs.add("b,q", {0, 0.5});
  auto sel = MetricSelection::parse("loc_add,cc_mod");
  auto back = vectors_from_csv(vectors_to_csv(vs, sel));
  CHECK(back.ids() == vs.ids());
  CHECK(back.vector(1) == vs.vector(1));

  Clustering c;
  c.k = 2;
  c.ids = {"a", "b,q"};
  c.assignment = {1, 0};
  c.centroids = {{0.1, 0.2}, {1.0 / 3.0, -2}};
  c.iterations = 4;
  c.converged = true;
  c.functional_I = 1.25;
  c.first_seed = "a";
  c.noop_ids = {"z"};
  auto r = clustering_from_files(clustering_to_csv(c), clustering_meta_to_json(c, true, {}));
  CHECK(r.assignment == c.assignment);
  CHECK(r.centroids == c.centroids);
  CHECK(r.ids == c.ids);
  CHECK(r.noop_ids == c.noop_ids);
  CHECK(r.first_seed == "a");
  CHECK(r.functional_I == 1.25);

  std::vector<VerifiedChange> v = {{"x", "B"}, {"y\"z", "F"}};
  CHECK(verification_from_csv(verification_to_csv(v)) == v);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    double x = u(rng) / 7.0;
    REQUIRE(std::stod(format_double(x)) == x);
  }
  CHECK(parse_csv("a,\"b,c\",\"d\"\"e\"\n") == std::vector<std::vector<std::string>>{{"a", "b,c", "d\"e"}});
}
