#pragma once

// Reference cosine k-means written separately from the library, for
// cross-checking. Slow and simple on purpose.

#include <cmath>
#include <vector>

namespace deltaclass::testing::oracle {

using Vec = std::vector<double>;

inline double cosine(const Vec& a, const Vec& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  double r = dot / (std::sqrt(na) * std::sqrt(nb));
  return r > 1 ? 1 : (r < -1 ? -1 : r);
}

inline double pair_sum(const std::vector<Vec>& x, const std::vector<std::size_t>& part) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      if (part[i] == part[j]) s += cosine(x[i], x[j]);
  return s;
}

// Farthest-first seeds starting from `first`.
inline std::vector<std::size_t> seeds_from(const std::vector<Vec>& x, std::size_t k, std::size_t first) {
  std::vector<std::size_t> seeds = {first};
  while (seeds.size() < k) {
    std::size_t best = x.size();
    double best_val = 2;
    for (std::size_t i = 0; i < x.size(); ++i) {
      bool taken = false;
      for (auto s : seeds) taken = taken || s == i;
      if (taken) continue;
      double worst = -2;
      for (auto s : seeds) worst = std::max(worst, cosine(x[i], x[s]));
      if (worst < best_val) best_val = worst, best = i;
    }
    seeds.push_back(best);
  }
  return seeds;
}

inline std::vector<std::size_t> nearest(const std::vector<Vec>& x, const std::vector<Vec>& centers) {
  std::vector<std::size_t> part(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t arg = 0;
    double best = cosine(x[i], centers[0]);
    for (std::size_t j = 1; j < centers.size(); ++j) {
      double s = cosine(x[i], centers[j]);
      if (s > best) best = s, arg = j;
    }
    part[i] = arg;
  }
  return part;
}

// Moves, for each empty cluster in turn, the member of the largest cluster
// least similar to that cluster's current center.
inline void refill_empty(const std::vector<Vec>& x, const std::vector<Vec>& centers, std::vector<std::size_t>& part) {
  const std::size_t k = centers.size();
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<std::size_t> count(k, 0);
    for (auto a : part) ++count[a];
    if (count[j]) continue;
    std::size_t big = 0;
    for (std::size_t b = 1; b < k; ++b)
      if (count[b] > count[big]) big = b;
    std::size_t pick = x.size();
    double low = 2;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (part[i] == big && cosine(x[i], centers[big]) < low) low = cosine(x[i], centers[big]), pick = i;
    part[pick] = j;
  }
}

inline std::vector<Vec> means(const std::vector<Vec>& x, const std::vector<std::size_t>& part, std::size_t k) {
  std::vector<Vec> m(k, Vec(x[0].size(), 0.0));
  std::vector<double> count(k, 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    count[part[i]] += 1;
    for (std::size_t d = 0; d < x[i].size(); ++d) m[part[i]][d] += x[i][d];
  }
  for (std::size_t j = 0; j < k; ++j)
    for (auto& v : m[j]) v = count[j] ? v / count[j] : 0;
  return m;
}

// Lloyd iterations from the given seeds until the partition repeats.
inline std::vector<std::size_t> lloyd(const std::vector<Vec>& x, const std::vector<std::size_t>& seeds,
                                      std::size_t max_iter = 300) {
  std::vector<Vec> centers;
  for (auto s : seeds) centers.push_back(x[s]);
  auto part = nearest(x, centers);
  refill_empty(x, centers, part);
  for (std::size_t it = 0; it < max_iter; ++it) {
    centers = means(x, part, seeds.size());
    auto next = nearest(x, centers);
    refill_empty(x, centers, next);
    if (next == part) break;
    part = next;
  }
  return part;
}

// Best pairwise-similarity sum over restarts seeded from every vector.
inline double best_restart_score(const std::vector<Vec>& x, std::size_t k) {
  double best = -1e300;
  for (std::size_t first = 0; first < x.size(); ++first)
    best = std::max(best, pair_sum(x, lloyd(x, seeds_from(x, k, first))));
  return best;
}

}  // namespace deltaclass::testing::oracle
