#include "deltaclass/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "deltaclass/errors.hpp"
#include "deltaclass/random.hpp"

namespace deltaclass {

namespace {

std::unordered_map<std::string, std::size_t> cluster_index(const Clustering& c) {
  std::unordered_map<std::string, std::size_t> m;
  for (std::size_t i = 0; i < c.ids.size(); ++i) m.emplace(c.ids[i], c.assignment[i]);
  return m;
}

}  // namespace

ClassSet::ClassSet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2) throw Error("a class set needs at least two classes");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw Error("class names must be non-empty");
    if (n == kNoopClass) throw Error("'no-op' is reserved for zero-vector changes");
    if (!seen.insert(n).second) throw Error("duplicate class name: " + n);
  }
}

ClassSet ClassSet::parse(std::string_view text) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    auto name = text.substr(pos, comma - pos);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    names.emplace_back(name);
    pos = comma + 1;
  }
  return ClassSet(std::move(names));
}

bool ClassSet::contains(std::string_view name) const { return index_of(name).has_value(); }

std::optional<std::size_t> ClassSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

std::string ClassSet::to_string() const {
  std::string s;
  for (const auto& n : names_) {
    if (!s.empty()) s += ',';
    s += n;
  }
  return s;
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Auto: return "auto";
    case Provenance::Expert: return "expert";
    case Provenance::Noop: return "no-op";
  }
  return "auto";
}

std::map<std::string, std::size_t> ClassifiedCorpus::class_counts() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& c : changes) ++counts[c.class_name];
  return counts;
}

std::vector<std::string> rank_cluster_members(const Clustering& c, const VectorSet& vs, std::size_t cluster) {
  if (cluster >= c.k || c.centroids.size() != c.k) throw InconsistentClustering("cluster index out of range");
  struct Ranked {
    double sim;
    std::size_t corpus_index;
    const std::string* id;
  };
  std::vector<Ranked> ranked;
  for (std::size_t i = 0; i < c.ids.size(); ++i) {
    if (c.assignment[i] != cluster) continue;
    auto idx = vs.index_of(c.ids[i]);
    if (!idx) throw InconsistentClustering("clustered change missing from vector set: " + c.ids[i]);
    // Rounded so that rescaled copies tie exactly and fall back to corpus order.
    double sim = std::round(cosine_similarity(vs.vector(*idx), c.centroids[cluster]) * 1e12) / 1e12;
    ranked.push_back({sim, *idx, &c.ids[i]});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    return a.sim != b.sim ? a.sim > b.sim : a.corpus_index < b.corpus_index;
  });
  std::vector<std::string> out;
  for (const auto& r : ranked) out.push_back(*r.id);
  return out;
}

std::vector<std::vector<std::string>> select_representatives(const Clustering& c, const VectorSet& vs,
                                                             std::size_t r) {
  if (r == 0) throw Error("representative count must be at least 1");
  std::vector<std::vector<std::string>> out;
  for (std::size_t j = 0; j < c.k; ++j) {
    auto ranked = rank_cluster_members(c, vs, j);
    if (ranked.size() > r) ranked.resize(r);
    out.push_back(std::move(ranked));
  }
  return out;
}

ClusterClassMap map_clusters_to_classes(const Clustering& c, const std::vector<ExpertLabel>& labels,
                                        const ClassSet& classes) {
  auto where = cluster_index(c);
  std::unordered_set<std::string> noop(c.noop_ids.begin(), c.noop_ids.end());
  ClusterClassMap m;
  m.tally.resize(c.k);
  for (const auto& l : labels) {
    if (!classes.contains(l.class_name)) throw UnknownClassName(l.class_name);
    auto it = where.find(l.change_id);
    if (it == where.end()) {
      if (noop.count(l.change_id)) continue;
      throw LabelForUnknownChange(l.change_id);
    }
    ++m.tally[it->second][l.class_name];
  }
  for (std::size_t j = 0; j < c.k; ++j) {
    const auto& t = m.tally[j];
    std::size_t best = 0, holders = 0;
    std::string winner;
    for (const auto& [name, n] : t) {
      if (n > best) {
        best = n;
        holders = 1;
        winner = name;
      } else if (n == best) {
        ++holders;
      }
    }
    if (best == 0 || holders > 1) m.unresolved.push_back(j);
    else m.mapping[j] = winner;
  }
  return m;
}

ClassifiedCorpus classify_all(const Clustering& c, const ClusterClassMap& m,
                              const std::vector<std::string>& noop_ids,
                              const std::vector<ExpertLabel>& expert_labels) {
  if (!m.resolved()) throw UnresolvedClusters(m.unresolved);
  // A change whose experts disagree keeps its automatic class.
  std::unordered_map<std::string, std::optional<std::string>> expert;
  for (const auto& l : expert_labels) {
    auto [it, fresh] = expert.try_emplace(l.change_id, l.class_name);
    if (!fresh && it->second != l.class_name) it->second.reset();
  }
  auto apply = [&](ClassifiedChange ch) {
    auto it = expert.find(ch.change_id);
    if (it != expert.end() && it->second) {
      ch.class_name = *it->second;
      ch.provenance = Provenance::Expert;
    }
    return ch;
  };
  ClassifiedCorpus out;
  for (std::size_t i = 0; i < c.ids.size(); ++i) {
    auto it = m.mapping.find(c.assignment[i]);
    if (it == m.mapping.end()) throw UnresolvedClusters({c.assignment[i]});
    out.changes.push_back(apply({c.ids[i], it->second, Provenance::Auto}));
  }
  for (const auto& id : noop_ids) out.changes.push_back(apply({id, std::string(kNoopClass), Provenance::Noop}));
  return out;
}

VerificationSet build_verification_set(const std::vector<ExpertLabel>& labels_a,
                                       const std::vector<ExpertLabel>& labels_b) {
  auto a = latest_labels(labels_a);
  auto b = latest_labels(labels_b);
  if (!a.empty() && !b.empty()) {
    std::set<std::string> ea, eb;
    for (const auto& l : a) ea.insert(l.expert_id);
    for (const auto& l : b) eb.insert(l.expert_id);
    for (const auto& e : ea)
      if (eb.count(e)) throw SameExpert(e);
  }
  std::map<std::string, std::string> first, second;
  for (const auto& l : a) first[l.change_id] = l.class_name;
  for (const auto& l : b) second[l.change_id] = l.class_name;

  VerificationSet v;
  for (const auto& [id, cls] : first) {
    auto it = second.find(id);
    if (it == second.end()) ++v.only_first;
    else if (it->second == cls) v.changes.push_back({id, cls});
    else ++v.disagreements;
  }
  for (const auto& [id, _] : second)
    if (!first.count(id)) ++v.only_second;
  return v;
}

std::vector<ExpertLabel> latest_labels(const std::vector<ExpertLabel>& log) {
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  std::vector<ExpertLabel> out;
  for (const auto& l : log) {
    auto key = std::make_pair(l.change_id, l.expert_id);
    auto it = slot.find(key);
    if (it == slot.end()) {
      slot.emplace(key, out.size());
      out.push_back(l);
    } else {
      out[it->second] = l;
    }
  }
  return out;
}

std::vector<std::string> experts_in(const std::vector<ExpertLabel>& labels) {
  std::vector<std::string> out;
  for (const auto& l : labels)
    if (std::find(out.begin(), out.end(), l.expert_id) == out.end()) out.push_back(l.expert_id);
  return out;
}

std::vector<std::string> sample_per_class(const ClassifiedCorpus& corpus, std::size_t per_class,
                                          std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> by_class;
  for (const auto& ch : corpus.changes)
    if (ch.provenance != Provenance::Noop) by_class[ch.class_name].push_back(ch.change_id);
  std::vector<std::string> out;
  for (auto& [name, ids] : by_class) {
    std::sort(ids.begin(), ids.end());
    seeded_shuffle(ids, seed);
    if (ids.size() > per_class) ids.resize(per_class);
    std::sort(ids.begin(), ids.end());
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

}  // namespace deltaclass
