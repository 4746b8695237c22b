#include "deltaclass/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <functional>
#include <set>
#include <unordered_map>

#include "deltaclass/errors.hpp"

namespace deltaclass {

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Cosine with precomputed norms, clamped against rounding.
double rho(std::span<const double> a, double na, std::span<const double> b, double nb) {
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

class Assigner {
 public:
  explicit Assigner(const VectorSet& vs) : vs_(vs), norms_(vs.size()) {
    for (std::size_t i = 0; i < vs.size(); ++i) norms_[i] = norm(vs.vector(i));
  }

  void set_centroids(std::vector<Vector> centroids) {
    centroids_ = std::move(centroids);
    centroid_norms_.resize(centroids_.size());
    for (std::size_t j = 0; j < centroids_.size(); ++j) centroid_norms_[j] = norm(centroids_[j]);
  }

  const std::vector<Vector>& centroids() const { return centroids_; }

  double similarity(std::size_t i, std::size_t j) const {
    return rho(vs_.vector(i), norms_[i], centroids_[j], centroid_norms_[j]);
  }

  std::vector<std::size_t> assign() const {
    std::vector<std::size_t> out(vs_.size());
    for (std::size_t i = 0; i < vs_.size(); ++i) {
      std::size_t best = 0;
      double best_sim = similarity(i, 0);
      for (std::size_t j = 1; j < centroids_.size(); ++j) {
        double s = similarity(i, j);
        if (s > best_sim) {
          best_sim = s;
          best = j;
        }
      }
      out[i] = best;
    }
    return out;
  }

  // An emptied cluster takes the member of the largest cluster that is least
  // similar to that cluster's centroid.
  void reseed_empty(std::vector<std::size_t>& assignment) const {
    const std::size_t k = centroids_.size();
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignment) ++sizes[a];
    for (std::size_t j = 0; j < k; ++j) {
      if (sizes[j] != 0) continue;
      std::size_t donor = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      std::size_t pick = assignment.size();
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] != donor) continue;
        double s = similarity(i, donor);
        if (s < worst) {
          worst = s;
          pick = i;
        }
      }
      assignment[pick] = j;
      --sizes[donor];
      ++sizes[j];
    }
  }

  std::vector<Vector> means(const std::vector<std::size_t>& assignment, std::size_t k) const {
    std::vector<Vector> c(k, Vector(vs_.dimension(), 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      auto& dst = c[assignment[i]];
      const auto& v = vs_.vector(i);
      for (std::size_t d = 0; d < v.size(); ++d) dst[d] += v[d];
      ++counts[assignment[i]];
    }
    for (std::size_t j = 0; j < k; ++j)
      if (counts[j] > 0)
        for (auto& x : c[j]) x /= static_cast<double>(counts[j]);
    return c;
  }

 private:
  const VectorSet& vs_;
  std::vector<double> norms_;
  std::vector<Vector> centroids_;
  std::vector<double> centroid_norms_;
};

std::uint64_t partition_hash(const std::vector<std::size_t>& a) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto x : a) h = (h ^ x) * 1099511628211ull;
  return h;
}

// `visit` sees every partition along the way; returning false stops early.
using Visit = std::function<bool(const std::vector<std::size_t>&)>;

Clustering run_kmeans(const VectorSet& vs, const std::vector<std::size_t>& seeds, std::size_t max_iterations,
                      const Visit& visit = {}) {
  const std::size_t k = seeds.size();
  Assigner assigner(vs);
  std::vector<Vector> initial;
  for (auto s : seeds) initial.push_back(vs.vector(s));
  assigner.set_centroids(std::move(initial));

  auto assignment = assigner.assign();
  assigner.reseed_empty(assignment);

  Clustering c;
  c.k = k;
  while (c.iterations < max_iterations) {
    if (visit && !visit(assignment)) break;
    assigner.set_centroids(assigner.means(assignment, k));
    auto next = assigner.assign();
    assigner.reseed_empty(next);
    ++c.iterations;
    if (next == assignment) {
      c.converged = true;
      break;
    }
    assignment = std::move(next);
  }
  c.ids = vs.ids();
  c.centroids = assigner.means(assignment, k);
  c.assignment = std::move(assignment);
  c.first_seed = vs.id(seeds.front());
  return c;
}

// Functional I via unit-vector sums: a cluster's pair sum is (|S|^2 - m) / 2.
double fast_functional_I(const VectorSet& vs, const std::vector<double>& norms, const std::vector<std::size_t>& assignment,
                     std::size_t k) {
  std::vector<Vector> sums(k, Vector(vs.dimension(), 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const auto& v = vs.vector(i);
    for (std::size_t d = 0; d < v.size(); ++d) sums[assignment[i]][d] += v[d] / norms[i];
    ++counts[assignment[i]];
  }
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j)
    total += std::sqrt(std::max(0.0, (dot(sums[j], sums[j]) - static_cast<double>(counts[j])) / 2.0));
  return total;
}

// Validates `c` against `vs` and returns vs indices grouped by cluster.
std::vector<std::vector<std::size_t>> grouped(const Clustering& c, const VectorSet& vs) {
  if (c.assignment.size() != c.ids.size())
    throw InconsistentClustering("assignment and id lists differ in length");
  std::vector<std::vector<std::size_t>> groups(c.k);
  for (std::size_t i = 0; i < c.ids.size(); ++i) {
    auto idx = vs.index_of(c.ids[i]);
    if (!idx) throw InconsistentClustering("clustered change missing from vector set: " + c.ids[i]);
    if (c.assignment[i] >= c.k) throw InconsistentClustering("cluster index out of range for " + c.ids[i]);
    groups[c.assignment[i]].push_back(*idx);
  }
  return groups;
}

double pair_sum(const std::vector<std::size_t>& members, const VectorSet& vs, const std::vector<double>& norms) {
  double s = 0.0;
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t b = a + 1; b < members.size(); ++b)
      s += rho(vs.vector(members[a]), norms[members[a]], vs.vector(members[b]), norms[members[b]]);
  return s;
}

std::vector<double> all_norms(const VectorSet& vs) {
  std::vector<double> n(vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i) n[i] = norm(vs.vector(i));
  return n;
}

}  // namespace

VectorSet::VectorSet(std::size_t dimension, std::string fingerprint)
    : dimension_(dimension), fingerprint_(std::move(fingerprint)) {}

void VectorSet::add(std::string change_id, Vector v) {
  if (v.size() != dimension_) throw DimensionMismatch(dimension_, v.size());
  if (!index_.emplace(change_id, ids_.size()).second)
    throw Error("duplicate change id in vector set: " + change_id);
  ids_.push_back(std::move(change_id));
  vectors_.push_back(std::move(v));
}

std::optional<std::size_t> VectorSet::index_of(const std::string& change_id) const {
  auto it = index_.find(change_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::pair<VectorSet, std::vector<std::string>> VectorSet::without_zero_vectors() const {
  VectorSet kept(dimension_, fingerprint_);
  std::vector<std::string> zero;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& v = vectors_[i];
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
      zero.push_back(ids_[i]);
    } else {
      kept.add(ids_[i], v);
    }
  }
  return {std::move(kept), std::move(zero)};
}

double cosine_similarity(std::span<const double> v1, std::span<const double> v2) {
  if (v1.size() != v2.size()) throw DimensionMismatch(v1.size(), v2.size());
  return rho(v1, norm(v1), v2, norm(v2));
}

std::optional<std::size_t> Clustering::cluster_of(const std::string& change_id) const {
  auto it = std::find(ids.begin(), ids.end(), change_id);
  if (it == ids.end()) return std::nullopt;
  return assignment[static_cast<std::size_t>(it - ids.begin())];
}

std::vector<std::size_t> Clustering::sizes() const {
  std::vector<std::size_t> s(k, 0);
  for (auto a : assignment) ++s[a];
  return s;
}

std::vector<std::vector<std::size_t>> Clustering::members() const {
  std::vector<std::vector<std::size_t>> m(k);
  for (std::size_t i = 0; i < assignment.size(); ++i) m[assignment[i]].push_back(i);
  return m;
}

std::vector<std::size_t> seed_initial_partition(const VectorSet& vs, std::size_t k, std::size_t first) {
  if (k == 0) throw Error("k must be at least 1");
  if (vs.size() < k) throw TooFewVectors(vs.size(), k);
  if (first >= vs.size()) throw Error("first seed out of range");
  auto norms = all_norms(vs);
  std::vector<std::size_t> seeds{first};
  std::vector<bool> chosen(vs.size(), false);
  chosen[first] = true;
  // closest[i] = max similarity of vector i to any chosen seed
  std::vector<double> closest(vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i)
    closest[i] = rho(vs.vector(i), norms[i], vs.vector(first), norms[first]);
  while (seeds.size() < k) {
    std::size_t pick = vs.size();
    for (std::size_t i = 0; i < vs.size(); ++i)
      if (!chosen[i] && (pick == vs.size() || closest[i] < closest[pick])) pick = i;
    seeds.push_back(pick);
    chosen[pick] = true;
    for (std::size_t i = 0; i < vs.size(); ++i)
      closest[i] = std::max(closest[i], rho(vs.vector(i), norms[i], vs.vector(pick), norms[pick]));
  }
  return seeds;
}

Clustering kmeans_cluster(const VectorSet& vs, const ClusterParams& params) {
  if (params.k == 0) throw Error("k must be at least 1");
  if (params.max_iterations == 0) throw Error("max_iterations must be at least 1");
  auto [work, zero_ids] = vs.without_zero_vectors();
  if (work.size() < params.k) throw TooFewVectors(work.size(), params.k);

  const std::size_t starts = params.restarts == 0 ? work.size() : std::min(params.restarts, work.size());
  auto norms = all_norms(work);
  std::vector<std::vector<std::size_t>> seed_sets;
  std::set<std::vector<std::size_t>> tried;
  for (std::size_t first = 0; first < starts; ++first) {
    auto seeds = seed_initial_partition(work, params.k, first);
    if (tried.insert(seeds).second) seed_sets.push_back(std::move(seeds));
  }

  // Trajectories from different starts tend to merge; a partition already
  // visited leads to an already scored fixed point.
  std::unordered_map<std::uint64_t, double> seen;
  std::vector<double> scores;
  for (const auto& seeds : seed_sets) {
    std::vector<std::uint64_t> path;
    std::optional<double> known;
    auto run = run_kmeans(work, seeds, params.max_iterations, [&](const std::vector<std::size_t>& a) {
      auto h = partition_hash(a);
      if (auto it = seen.find(h); it != seen.end()) {
        known = it->second;
        return false;
      }
      path.push_back(h);
      return true;
    });
    double score = known ? *known : fast_functional_I(work, norms, run.assignment, params.k);
    for (auto h : path) seen.emplace(h, score);
    scores.push_back(score);
  }
  std::size_t winner = 0;
  for (std::size_t r = 1; r < scores.size(); ++r)
    if (scores[r] > scores[winner] + 1e-9 * std::max(1.0, std::abs(scores[winner]))) winner = r;
  Clustering c = run_kmeans(work, seed_sets[winner], params.max_iterations);
  if (params.zero_vector_policy == ZeroVectorPolicy::Exclude || zero_ids.empty()) {
    c.noop_ids = std::move(zero_ids);
  } else {
    // Zero vectors form cluster k; ids stay in corpus order.
    std::unordered_map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < c.ids.size(); ++i) where[c.ids[i]] = c.assignment[i];
    for (const auto& z : zero_ids) where[z] = c.k;
    c.ids = vs.ids();
    c.assignment.clear();
    for (const auto& id : c.ids) c.assignment.push_back(where.at(id));
    c.centroids.emplace_back(vs.dimension(), 0.0);
    ++c.k;
  }
  c.functional_I = quality_functional_I(c, vs);
  return c;
}

double quality_functional_I(const Clustering& c, const VectorSet& vs) {
  auto groups = grouped(c, vs);
  auto norms = all_norms(vs);
  double total = 0.0;
  for (const auto& g : groups) total += std::sqrt(std::max(0.0, pair_sum(g, vs, norms)));
  return total;
}

double within_cluster_similarity(const Clustering& c, const VectorSet& vs) {
  auto groups = grouped(c, vs);
  auto norms = all_norms(vs);
  double total = 0.0;
  for (const auto& g : groups) total += pair_sum(g, vs, norms);
  return total;
}

KTraceEntry trace_entry(const Clustering& c, const VectorSet& vs) {
  KTraceEntry e;
  e.k = c.k;
  e.functional_I = c.functional_I;
  e.iterations = c.iterations;
  e.converged = c.converged;
  e.sizes = c.sizes();
  e.mean_similarity.assign(c.k, 0.0);
  e.min_similarity.assign(c.k, 1.0);
  for (std::size_t i = 0; i < c.ids.size(); ++i) {
    auto idx = vs.index_of(c.ids[i]);
    if (!idx) throw InconsistentClustering("clustered change missing from vector set: " + c.ids[i]);
    auto j = c.assignment[i];
    double s = cosine_similarity(vs.vector(*idx), c.centroids[j]);
    e.mean_similarity[j] += s;
    e.min_similarity[j] = std::min(e.min_similarity[j], s);
  }
  for (std::size_t j = 0; j < c.k; ++j) {
    if (e.sizes[j] > 0) e.mean_similarity[j] /= static_cast<double>(e.sizes[j]);
    else e.min_similarity[j] = 0.0;
  }
  return e;
}

SelectKResult select_k(const VectorSet& vs, std::size_t n_classes, double i_min, std::size_t k_max,
                       ClusterParams params) {
  if (n_classes == 0) throw Error("n_classes must be at least 1");
  if (k_max < n_classes) throw Error("k_max must be at least the number of classes");
  SelectKResult result;
  for (std::size_t k = n_classes; k <= k_max; ++k) {
    params.k = k;
    auto c = kmeans_cluster(vs, params);
    result.trace.push_back(trace_entry(c, vs));
    bool ok = c.functional_I > i_min;
    result.clustering = std::move(c);
    if (ok) {
      result.reached = true;
      break;
    }
  }
  return result;
}

}  // namespace deltaclass
