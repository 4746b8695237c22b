#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deltaclass/classify.hpp"
#include "deltaclass/clustering.hpp"

namespace deltaclass {

// Verification changes of one cluster, counted per class.
struct ContingencyRow {
  std::size_t cluster = 0;
  std::vector<std::size_t> counts;     // n_j^i, one per class
  std::optional<std::size_t> mapped;   // class index of c_j^a

  std::size_t total() const;           // n_j^e
  std::size_t mapped_count() const;    // n_j^a
};

struct ContingencyTable {
  std::vector<std::string> classes;
  std::vector<ContingencyRow> rows;
  std::size_t skipped_noop = 0;  // verification changes with zero vectors

  std::size_t grand_total() const;                  // N_e
  std::vector<std::size_t> column_totals() const;

  // Builds a table straight from counts; `mapped[j]` names row j's class.
  static ContingencyTable from_counts(const ClassSet& classes,
                                      const std::vector<std::vector<std::size_t>>& counts,
                                      const std::vector<std::string>& mapped);
};

// Throws UnclusteredVerificationChange, UnknownClassName, UnresolvedClusters.
ContingencyTable contingency(const Clustering& c, const ClusterClassMap& m,
                             const std::vector<VerifiedChange>& verif, const ClassSet& classes);

// n_j^a / n_j^e; an empty row has purity 1.
double cluster_purity(const ContingencyRow& row);
// Class-distribution entropy normalised by log(n_classes); empty row gives 0.
double cluster_entropy(const ContingencyRow& row, std::size_t n_classes);

struct Quality {
  double purity = 0.0;
  double entropy = 0.0;
};

// Size-weighted purity and entropy over rows. Throws EmptyVerificationSet.
Quality corpus_quality(const ContingencyTable& t);

// Rows with the same mapped class summed into one row per class.
ContingencyTable merge_by_class(const ContingencyTable& t);
Quality merged_class_quality(const ContingencyTable& t);

struct Interval {
  double mean = 0.0;
  double half_width = 0.0;

  double lower() const { return mean - half_width; }
  double upper() const { return mean + half_width; }
};

// Two-sided Student-t interval of the mean with n-1 degrees of freedom.
Interval student_t_interval(std::span<const double> samples, double alpha);

struct ResampleOptions {
  std::size_t parts = 5;  // M
  double alpha = 0.05;
  std::uint64_t seed = 0;
  // Re-derive the cluster mapping from each sample's own verification labels
  // (clusters without a plurality keep the fixed mapping).
  bool recompute_mapping = false;
};

struct ResampleResult {
  std::size_t parts = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::string method = "student-t";
  std::size_t resampled_count = 0;  // sum of sample sizes, (M-1) * N
  std::vector<std::size_t> part_sizes;
  std::vector<Quality> samples;
  Interval purity;
  Interval entropy;
};

// Leave-one-part-out resampling of P_C and E_C. Throws TooFewForResampling.
ResampleResult resample_quality(const Clustering& c, const ClusterClassMap& m,
                                const std::vector<VerifiedChange>& verif, const ClassSet& classes,
                                const ResampleOptions& opts);

// Splits indices 0..n-1 into `parts` near-equal parts after a seeded shuffle.
std::vector<std::vector<std::size_t>> partition_indices(std::size_t n, std::size_t parts, std::uint64_t seed);

struct QualityReport {
  std::vector<std::string> classes;
  std::vector<double> cluster_purity;
  std::vector<double> cluster_entropy;
  Quality by_cluster;  // P_Q, E_Q
  Quality by_class;    // P_C, E_C
  std::size_t verification_size = 0;
  std::size_t correctly_assigned = 0;
  std::optional<ResampleResult> resampled;
};

QualityReport build_report(const ContingencyTable& t);

struct Verdict {
  bool holds = false;
  std::string basis;  // which estimate the bounds came from
  double purity_lower = 0.0;
  double entropy_upper = 0.0;
  double purity_margin = 0.0;   // purity_lower - p_min
  double entropy_margin = 0.0;  // e_max - entropy_upper
};

// True iff the purity lower bound exceeds p_min and the entropy upper bound is
// below e_max. Uses the resampled P_C/E_C intervals when present.
Verdict hypothesis_check(const QualityReport& report, double p_min, double e_max);

// Table with one row per cluster, class columns, n_e, P and E, plus totals.
std::string render_contingency(const ContingencyTable& t);
std::string render_report(const QualityReport& r, const std::optional<Verdict>& verdict);

}  // namespace deltaclass
