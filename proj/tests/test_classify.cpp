#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "deltaclass/classify.hpp"
#include "deltaclass/errors.hpp"
#include "support/reference_table.hpp"

using namespace deltaclass;
using deltaclass::testing::reference_table;

namespace {

const ClassSet kBF({"B", "F"});

Clustering one_cluster(std::vector<std::string> ids) {
  Clustering c;
  c.k = 1;
  c.ids = std::move(ids);
  c.assignment.assign(c.ids.size(), 0);
  c.centroids = {{1.0}};
  return c;
}

std::vector<ExpertLabel> labels_for(const std::vector<std::string>& ids, const std::vector<std::string>& classes,
                                    const std::string& expert = "e1") {
  std::vector<ExpertLabel> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.push_back({ids[i], classes[i], expert, 0});
  return out;
}

}  // namespace

TEST_CASE("class set") {
  auto s = ClassSet::parse("B, F,N");
  CHECK(s.names() == std::vector<std::string>{"B", "F", "N"});
  CHECK(s.to_string() == "B,F,N");
  CHECK(s.index_of("N") == 2u);
  CHECK_THROWS_AS(ClassSet::parse("B"), Error);
  CHECK_THROWS_AS(ClassSet::parse("B,B"), Error);
  CHECK_THROWS_AS(ClassSet::parse("B,,F"), Error);
  CHECK_THROWS_AS(ClassSet::parse("B,no-op"), Error);
}

TEST_CASE("plurality and ties") {
  auto c = one_cluster({"a", "b", "c"});
  auto m = map_clusters_to_classes(c, labels_for({"a", "b", "c"}, {"B", "B", "F"}), kBF);
  CHECK(m.resolved());
  CHECK(m.mapping.at(0) == "B");
  CHECK(m.tally[0].at("B") == 2);

  m = map_clusters_to_classes(c, labels_for({"a", "b"}, {"B", "F"}), kBF);
  CHECK(m.unresolved == std::vector<std::size_t>{0});
  CHECK(m.mapping.empty());

  m = map_clusters_to_classes(c, {}, kBF);
  CHECK(m.unresolved == std::vector<std::size_t>{0});
}

TEST_CASE("mapping errors") {
  auto c = one_cluster({"a"});
  c.noop_ids = {"z"};
  CHECK_THROWS_AS(map_clusters_to_classes(c, labels_for({"a"}, {"X"}), kBF), UnknownClassName);
  CHECK_THROWS_AS(map_clusters_to_classes(c, labels_for({"q"}, {"B"}), kBF), LabelForUnknownChange);
  // Labels on zero-vector changes are accepted and ignored.
  CHECK(map_clusters_to_classes(c, labels_for({"a", "z"}, {"B", "F"}), kBF).mapping.at(0) == "B");
}

TEST_CASE("mapping ignores label order") {
  const auto& t = reference_table();
  std::vector<ExpertLabel> labels;
  for (const auto& v : t.verif) labels.push_back({v.change_id, v.class_name, "e1", 0});
  auto base = map_clusters_to_classes(t.clustering, labels, t.classes);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(labels.begin(), labels.end(), rng);
    auto m = map_clusters_to_classes(t.clustering, labels, t.classes);
    CHECK(m.mapping == base.mapping);
    CHECK(m.unresolved == base.unresolved);
    CHECK(m.tally == base.tally);
  }
}

TEST_CASE("verification counts as labels reproduce the mapping column") {
  const auto& t = reference_table();
  std::vector<ExpertLabel> labels;
  for (const auto& v : t.verif) labels.push_back({v.change_id, v.class_name, "e1", 0});
  auto m = map_clusters_to_classes(t.clustering, labels, t.classes);
  CHECK(m.mapping.at(8) == "D");
  CHECK(m.tally[8].at("D") == 13);
  // Clusters 7 and 11 are exact ties and cluster 3 has no labels.
  CHECK(m.unresolved == std::vector<std::size_t>{3, 7, 11});
  for (std::size_t j = 0; j < t.mapped.size(); ++j) {
    if (j == 3 || j == 7 || j == 11) continue;
    CAPTURE(j);
    CHECK(m.mapping.at(j) == t.mapped[j]);
  }
}

TEST_CASE("classify applies the mapping, expert labels and no-op") {
  auto c = one_cluster({"a", "b"});
  ClusterClassMap m;
  m.tally.resize(1);
  m.mapping[0] = "F";
  auto out = classify_all(c, m, {"z"});
  REQUIRE(out.changes.size() == 3);
  CHECK(out.changes[0].class_name == "F");
  CHECK(out.changes[0].provenance == Provenance::Auto);
  CHECK(out.changes[2].class_name == "no-op");
  CHECK(out.changes[2].provenance == Provenance::Noop);

  out = classify_all(c, m, {"z"}, labels_for({"b"}, {"B"}));
  CHECK(out.changes[1].class_name == "B");
  CHECK(out.changes[1].provenance == Provenance::Expert);
  CHECK(out.changes[0].class_name == "F");

  // Two experts who disagree leave the automatic class in place.
  auto both = labels_for({"b"}, {"B"}, "e1");
  both.push_back({"b", "F", "e2", 0});
  CHECK(classify_all(c, m, {}, both).changes[1].provenance == Provenance::Auto);

  m.mapping.clear();
  m.unresolved = {0};
  CHECK_THROWS_AS(classify_all(c, m, {}), UnresolvedClusters);
}

TEST_CASE("reference table class counts") {
  const auto& t = reference_table();
  std::vector<ExpertLabel> labels;
  for (const auto& v : t.verif) labels.push_back({v.change_id, v.class_name, "e1", 0});
  auto out = classify_all(t.clustering, t.map, {}, labels);
  CHECK(out.changes.size() == 69);

  std::map<std::string, std::size_t> verified, automatic;
  std::map<std::string, std::string> truth;
  for (const auto& v : t.verif) truth[v.change_id] = v.class_name;
  for (const auto& ch : out.changes)
    if (truth.count(ch.change_id)) ++verified[ch.class_name];
  CHECK(verified == std::map<std::string, std::size_t>{{"B", 17}, {"F", 16}, {"N", 13}, {"D", 14}, {"R", 8}});

  // Without expert overrides every change takes its cluster's class.
  for (const auto& ch : classify_all(t.clustering, t.map, {}).changes)
    if (truth.count(ch.change_id)) ++automatic[ch.class_name];
  CHECK(automatic == std::map<std::string, std::size_t>{{"B", 11}, {"F", 14}, {"N", 15}, {"D", 15}, {"R", 13}});
}

TEST_CASE("verification set") {
  std::vector<ExpertLabel> a, b;
  const char* names[] = {"B", "F", "N", "D", "R"};
  for (int i = 0; i < 80; ++i) {
    std::string id = "c" + std::to_string(100 + i);
    a.push_back({id, names[i % 5], "alice", i});
    b.push_back({id, i < 12 ? names[(i + 1) % 5] : names[i % 5], "bob", i});
  }
  auto v = build_verification_set(a, b);
  CHECK(v.changes.size() == 68);
  CHECK(v.disagreements == 12);
  CHECK(std::is_sorted(v.changes.begin(), v.changes.end(),
                       [](const auto& x, const auto& y) { return x.change_id < y.change_id; }));

  auto same = build_verification_set(a, labels_for({}, {}));
  CHECK(same.changes.empty());
  CHECK(same.only_first == 80);

  auto a2 = a;
  for (auto& l : a2) l.expert_id = "carol";
  CHECK(build_verification_set(a, a2).changes.size() == 80);

  std::vector<ExpertLabel> x = {{"p", "B", "e1", 0}}, y = {{"q", "B", "e2", 0}};
  auto d = build_verification_set(x, y);
  CHECK(d.changes.empty());
  CHECK(d.only_first == 1);
  CHECK(d.only_second == 1);

  CHECK_THROWS_AS(build_verification_set(a, a), SameExpert);
}

TEST_CASE("latest label per expert wins") {
  std::vector<ExpertLabel> log = {{"a", "B", "e1", 1}, {"b", "F", "e1", 2}, {"a", "F", "e1", 3}, {"a", "B", "e2", 4}};
  auto l = latest_labels(log);
  REQUIRE(l.size() == 3);
  CHECK(l[0] == ExpertLabel{"a", "F", "e1", 3});
  CHECK(experts_in(log) == std::vector<std::string>{"e1", "e2"});
}

TEST_CASE("representatives") {
  VectorSet vs(2, "x");
  vs.add("p", {10, 0});
  vs.add("q", {9, 1});
  vs.add("r", {5, 5});
  auto c = one_cluster({"p", "q", "r"});
  c.centroids = {{8, 2}};
  CHECK(select_representatives(c, vs, 2) == std::vector<std::vector<std::string>>{{"q", "p"}});
  CHECK(select_representatives(c, vs, 9)[0].size() == 3);
  CHECK_THROWS_AS(select_representatives(c, vs, 0), Error);

  VectorSet line(2, "y");
  line.add("l0", {3, 1});
  line.add("l1", {6, 2});
  line.add("l2", {0.3, 0.1});
  auto cl = one_cluster({"l0", "l1", "l2"});
  cl.centroids = {{3, 1}};
  CHECK(select_representatives(cl, line, 1)[0] == std::vector<std::string>{"l0"});

  auto bad = one_cluster({"ghost"});
  CHECK_THROWS_AS(select_representatives(bad, vs, 1), InconsistentClustering);
}

TEST_CASE("per-class sampling") {
  ClassifiedCorpus corpus;
  for (int i = 0; i < 30; ++i)
    corpus.changes.push_back({"c" + std::to_string(10 + i), i % 3 ? "F" : "B", Provenance::Auto});
  corpus.changes.push_back({"z", "no-op", Provenance::Noop});
  auto s = sample_per_class(corpus, 4, 9);
  CHECK(s.size() == 8);
  CHECK(s == sample_per_class(corpus, 4, 9));
  CHECK(std::find(s.begin(), s.end(), "z") == s.end());
  CHECK(sample_per_class(corpus, 100, 9).size() == 30);
}
