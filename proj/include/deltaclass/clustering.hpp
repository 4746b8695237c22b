#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace deltaclass {

using Vector = std::vector<double>;

// Change vectors in corpus order.
class VectorSet {
 public:
  VectorSet() = default;
  VectorSet(std::size_t dimension, std::string fingerprint);

  // Throws DimensionMismatch, or Error on a duplicate id.
  void add(std::string change_id, Vector v);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t dimension() const { return dimension_; }
  const std::string& fingerprint() const { return fingerprint_; }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  const Vector& vector(std::size_t i) const { return vectors_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::optional<std::size_t> index_of(const std::string& change_id) const;

  // Splits off all-zero vectors (they have no direction).
  std::pair<VectorSet, std::vector<std::string>> without_zero_vectors() const;

 private:
  std::size_t dimension_ = 0;
  std::string fingerprint_;
  std::vector<std::string> ids_;
  std::vector<Vector> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// v1.v2 / (|v1||v2|), 0 when either norm is 0. Throws DimensionMismatch.
double cosine_similarity(std::span<const double> v1, std::span<const double> v2);

enum class ZeroVectorPolicy { Exclude, OwnCluster };

struct ClusterParams {
  std::size_t k = 1;
  std::size_t max_iterations = 300;
  std::uint64_t rng_seed = 0;  // reserved for randomized restarts
  // First seeds tried, in corpus order: 1 = the first vector only, 0 = every
  // vector. A later start wins only with a strictly larger functional I.
  std::size_t restarts = 1;
  ZeroVectorPolicy zero_vector_policy = ZeroVectorPolicy::Exclude;
};

struct Clustering {
  std::size_t k = 0;
  std::vector<std::string> ids;        // clustered changes, corpus order
  std::vector<std::size_t> assignment; // parallel to ids
  std::vector<Vector> centroids;
  std::size_t iterations = 0;
  bool converged = false;
  double functional_I = 0.0;
  std::string first_seed;              // change id the winning start began from
  std::vector<std::string> noop_ids;   // zero vectors under the Exclude policy

  std::optional<std::size_t> cluster_of(const std::string& change_id) const;
  std::vector<std::size_t> sizes() const;
  std::vector<std::vector<std::size_t>> members() const;  // indices into ids
};

// Farthest-first seeding: the first vector, then repeatedly the vector whose
// largest similarity to the chosen seeds is smallest (lowest index on ties).
// Returns corpus indices. Throws TooFewVectors.
std::vector<std::size_t> seed_initial_partition(const VectorSet& vs, std::size_t k, std::size_t first = 0);

// Cosine k-means. Assignment picks the most similar centroid (lowest index on
// ties); centroids are plain means; stops when the partition is unchanged.
// Runs once per first seed (see ClusterParams::restarts). Throws TooFewVectors.
Clustering kmeans_cluster(const VectorSet& vs, const ClusterParams& params);

// Sum over clusters of sqrt(max(0, sum over unordered member pairs of rho)).
// Throws InconsistentClustering.
double quality_functional_I(const Clustering& c, const VectorSet& vs);

// Sum over clusters of the unordered pairwise similarities (no square root).
double within_cluster_similarity(const Clustering& c, const VectorSet& vs);

struct KTraceEntry {
  std::size_t k = 0;
  double functional_I = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::size_t> sizes;
  // Per cluster: mean and minimum member-to-centroid similarity.
  std::vector<double> mean_similarity;
  std::vector<double> min_similarity;
};

struct SelectKResult {
  Clustering clustering;
  bool reached = false;  // false: k_max was hit without I > i_min
  std::vector<KTraceEntry> trace;
};

KTraceEntry trace_entry(const Clustering& c, const VectorSet& vs);

// Starts at k = n_classes and increments k until I > i_min or k_max.
SelectKResult select_k(const VectorSet& vs, std::size_t n_classes, double i_min, std::size_t k_max,
                       ClusterParams params = {});

}  // namespace deltaclass
