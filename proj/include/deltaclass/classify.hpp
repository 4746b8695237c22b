#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deltaclass/clustering.hpp"

namespace deltaclass {

inline constexpr std::string_view kNoopClass = "no-op";

class ClassSet {
 public:
  ClassSet() = default;
  // Throws Error on fewer than two names, duplicates, or empty names.
  explicit ClassSet(std::vector<std::string> names);
  static ClassSet parse(std::string_view comma_separated);

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  bool contains(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::string to_string() const;

  bool operator==(const ClassSet&) const = default;

 private:
  std::vector<std::string> names_;
};

struct ExpertLabel {
  std::string change_id;
  std::string class_name;
  std::string expert_id;
  std::int64_t labeled_at = 0;

  bool operator==(const ExpertLabel&) const = default;
};

struct ClusterClassMap {
  std::map<std::size_t, std::string> mapping;                      // resolved clusters only
  std::vector<std::map<std::string, std::size_t>> tally;           // per cluster
  std::vector<std::size_t> unresolved;

  bool resolved() const { return unresolved.empty(); }
  std::size_t k() const { return tally.size(); }
};

enum class Provenance { Auto, Expert, Noop };
std::string_view provenance_name(Provenance p);

struct ClassifiedChange {
  std::string change_id;
  std::string class_name;
  Provenance provenance = Provenance::Auto;
};

struct ClassifiedCorpus {
  std::vector<ClassifiedChange> changes;  // clustered ids in clustering order, then no-op ids
  std::map<std::string, std::size_t> class_counts() const;
};

// Per cluster: up to r members most similar to the centroid, ties by corpus
// order. Throws InconsistentClustering.
std::vector<std::vector<std::string>> select_representatives(const Clustering& c, const VectorSet& vs,
                                                             std::size_t r = 6);

// Ranked members of one cluster (all of them), for queueing extra labels.
std::vector<std::string> rank_cluster_members(const Clustering& c, const VectorSet& vs, std::size_t cluster);

// Plurality class per cluster; zero labels or a tie leaves it unresolved.
// Throws UnknownClassName, LabelForUnknownChange.
ClusterClassMap map_clusters_to_classes(const Clustering& c, const std::vector<ExpertLabel>& labels,
                                        const ClassSet& classes);

// Expert labels override the cluster class; zero-vector changes get "no-op".
// Throws UnresolvedClusters.
ClassifiedCorpus classify_all(const Clustering& c, const ClusterClassMap& m,
                              const std::vector<std::string>& noop_ids,
                              const std::vector<ExpertLabel>& expert_labels = {});

struct VerifiedChange {
  std::string change_id;
  std::string class_name;

  bool operator==(const VerifiedChange&) const = default;
};

struct VerificationSet {
  std::vector<VerifiedChange> changes;  // agreed labels, ordered by change id
  std::size_t disagreements = 0;
  std::size_t only_first = 0;
  std::size_t only_second = 0;
};

// Keeps the changes both experts labelled identically. Throws SameExpert.
VerificationSet build_verification_set(const std::vector<ExpertLabel>& labels_a,
                                       const std::vector<ExpertLabel>& labels_b);

// Latest label per (change_id, expert_id), in first-seen order.
std::vector<ExpertLabel> latest_labels(const std::vector<ExpertLabel>& log);

// Distinct expert ids in first-seen order.
std::vector<std::string> experts_in(const std::vector<ExpertLabel>& labels);

// Up to `per_class` changes drawn per class for expert verification, using a
// seeded shuffle. Returns change ids sorted within each class.
std::vector<std::string> sample_per_class(const ClassifiedCorpus& corpus, std::size_t per_class,
                                          std::uint64_t seed);

}  // namespace deltaclass
