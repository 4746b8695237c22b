#include "deltaclass/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <boost/math/distributions/students_t.hpp>

#include "deltaclass/errors.hpp"
#include "deltaclass/random.hpp"

namespace deltaclass {

namespace {

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

ClusterClassMap sample_mapping(const Clustering& c, const ClusterClassMap& fixed_map,
                               const std::vector<VerifiedChange>& sample, const ClassSet& classes) {
  std::vector<ExpertLabel> labels;
  for (const auto& v : sample) labels.push_back({v.change_id, v.class_name, "verification", 0});
  auto m = map_clusters_to_classes(c, labels, classes);
  for (auto j : m.unresolved) {
    auto it = fixed_map.mapping.find(j);
    if (it != fixed_map.mapping.end()) m.mapping[j] = it->second;
  }
  m.unresolved.clear();
  return m;
}

}  // namespace

std::size_t ContingencyRow::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

std::size_t ContingencyRow::mapped_count() const { return mapped ? counts.at(*mapped) : 0; }

std::size_t ContingencyTable::grand_total() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.total();
  return n;
}

std::vector<std::size_t> ContingencyTable::column_totals() const {
  std::vector<std::size_t> t(classes.size(), 0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += r.counts[i];
  return t;
}

ContingencyTable ContingencyTable::from_counts(const ClassSet& classes,
                                               const std::vector<std::vector<std::size_t>>& counts,
                                               const std::vector<std::string>& mapped) {
  if (counts.size() != mapped.size()) throw Error("one mapped class is needed per row");
  ContingencyTable t;
  t.classes = classes.names();
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j].size() != classes.size()) throw DimensionMismatch(classes.size(), counts[j].size());
    auto idx = classes.index_of(mapped[j]);
    if (!idx) throw UnknownClassName(mapped[j]);
    t.rows.push_back({j, counts[j], idx});
  }
  return t;
}

ContingencyTable contingency(const Clustering& c, const ClusterClassMap& m,
                             const std::vector<VerifiedChange>& verif, const ClassSet& classes) {
  if (!m.resolved()) throw UnresolvedClusters(m.unresolved);
  std::unordered_map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < c.ids.size(); ++i) where.emplace(c.ids[i], c.assignment[i]);
  std::unordered_set<std::string> noop(c.noop_ids.begin(), c.noop_ids.end());

  ContingencyTable t;
  t.classes = classes.names();
  for (std::size_t j = 0; j < c.k; ++j) {
    ContingencyRow row{j, std::vector<std::size_t>(classes.size(), 0), std::nullopt};
    auto it = m.mapping.find(j);
    if (it != m.mapping.end()) {
      row.mapped = classes.index_of(it->second);
      if (!row.mapped) throw UnknownClassName(it->second);
    }
    t.rows.push_back(std::move(row));
  }
  for (const auto& v : verif) {
    auto cls = classes.index_of(v.class_name);
    if (!cls) throw UnknownClassName(v.class_name);
    auto it = where.find(v.change_id);
    if (it == where.end()) {
      if (noop.count(v.change_id)) {
        ++t.skipped_noop;
        continue;
      }
      throw UnclusteredVerificationChange(v.change_id);
    }
    ++t.rows[it->second].counts[*cls];
  }
  return t;
}

double cluster_purity(const ContingencyRow& row) {
  auto n = row.total();
  if (n == 0) return 1.0;
  return static_cast<double>(row.mapped_count()) / static_cast<double>(n);
}

double cluster_entropy(const ContingencyRow& row, std::size_t n_classes) {
  auto n = row.total();
  if (n == 0 || n_classes < 2) return 0.0;
  double h = 0.0;
  for (auto count : row.counts) {
    if (count == 0) continue;
    double p = static_cast<double>(count) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h / std::log(static_cast<double>(n_classes));
}

Quality corpus_quality(const ContingencyTable& t) {
  auto total = static_cast<double>(t.grand_total());
  if (total == 0.0) throw EmptyVerificationSet();
  Quality q;
  // Weighted purity sums n_j^a / N_e; counting first keeps it exact.
  std::size_t agreeing = 0;
  for (const auto& r : t.rows) {
    agreeing += r.total() ? r.mapped_count() : 0;
    q.entropy += static_cast<double>(r.total()) / total * cluster_entropy(r, t.classes.size());
  }
  q.purity = static_cast<double>(agreeing) / total;
  return q;
}

ContingencyTable merge_by_class(const ContingencyTable& t) {
  ContingencyTable merged;
  merged.classes = t.classes;
  merged.skipped_noop = t.skipped_noop;
  std::map<std::size_t, std::size_t> slot;  // class index -> merged row
  for (const auto& r : t.rows) {
    if (!r.mapped) throw UnresolvedClusters({r.cluster});
    auto [it, fresh] = slot.try_emplace(*r.mapped, merged.rows.size());
    if (fresh) merged.rows.push_back({*r.mapped, std::vector<std::size_t>(t.classes.size(), 0), r.mapped});
    auto& dst = merged.rows[it->second];
    for (std::size_t i = 0; i < dst.counts.size(); ++i) dst.counts[i] += r.counts[i];
  }
  std::sort(merged.rows.begin(), merged.rows.end(),
            [](const ContingencyRow& a, const ContingencyRow& b) { return *a.mapped < *b.mapped; });
  return merged;
}

Quality merged_class_quality(const ContingencyTable& t) { return corpus_quality(merge_by_class(t)); }

Interval student_t_interval(std::span<const double> samples, double alpha) {
  if (samples.size() < 2) throw Error("a t interval needs at least two samples");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  const double n = static_cast<double>(samples.size());
  Interval iv;
  iv.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - iv.mean) * (x - iv.mean);
  double sd = std::sqrt(ss / (n - 1.0));
  boost::math::students_t dist(n - 1.0);
  iv.half_width = boost::math::quantile(dist, 1.0 - alpha / 2.0) * sd / std::sqrt(n);
  return iv;
}

std::vector<std::vector<std::size_t>> partition_indices(std::size_t n, std::size_t parts, std::uint64_t seed) {
  if (parts < 2 || n < parts) throw TooFewForResampling(n, parts);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  seeded_shuffle(order, seed);
  std::vector<std::vector<std::size_t>> out(parts);
  for (std::size_t p = 0; p < parts; ++p) {
    auto lo = p * n / parts, hi = (p + 1) * n / parts;
    out[p].assign(order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(hi));
    std::sort(out[p].begin(), out[p].end());
  }
  return out;
}

ResampleResult resample_quality(const Clustering& c, const ClusterClassMap& m,
                                const std::vector<VerifiedChange>& verif, const ClassSet& classes,
                                const ResampleOptions& opts) {
  if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  // Parts are drawn over the verification set in change-id order so the
  // result does not depend on how the caller ordered it.
  auto sorted = verif;
  std::sort(sorted.begin(), sorted.end(),
            [](const VerifiedChange& a, const VerifiedChange& b) { return a.change_id < b.change_id; });
  auto parts = partition_indices(sorted.size(), opts.parts, opts.seed);

  ResampleResult r;
  r.parts = opts.parts;
  r.alpha = opts.alpha;
  r.seed = opts.seed;
  std::vector<double> purity, entropy;
  for (std::size_t left_out = 0; left_out < parts.size(); ++left_out) {
    r.part_sizes.push_back(parts[left_out].size());
    std::vector<VerifiedChange> sample;
    for (std::size_t p = 0; p < parts.size(); ++p)
      if (p != left_out)
        for (auto i : parts[p]) sample.push_back(sorted[i]);
    r.resampled_count += sample.size();
    const auto& mapping = opts.recompute_mapping ? sample_mapping(c, m, sample, classes) : m;
    auto q = merged_class_quality(contingency(c, mapping, sample, classes));
    r.samples.push_back(q);
    purity.push_back(q.purity);
    entropy.push_back(q.entropy);
  }
  r.purity = student_t_interval(purity, opts.alpha);
  r.entropy = student_t_interval(entropy, opts.alpha);
  return r;
}

QualityReport build_report(const ContingencyTable& t) {
  QualityReport r;
  r.classes = t.classes;
  for (const auto& row : t.rows) {
    r.cluster_purity.push_back(cluster_purity(row));
    r.cluster_entropy.push_back(cluster_entropy(row, t.classes.size()));
    r.correctly_assigned += row.mapped_count();
  }
  r.verification_size = t.grand_total();
  r.by_cluster = corpus_quality(t);
  r.by_class = merged_class_quality(t);
  return r;
}

Verdict hypothesis_check(const QualityReport& report, double p_min, double e_max) {
  Verdict v;
  if (report.resampled) {
    v.basis = "resampled P_C/E_C interval";
    v.purity_lower = report.resampled->purity.lower();
    v.entropy_upper = report.resampled->entropy.upper();
  } else {
    v.basis = "point P_C/E_C";
    v.purity_lower = report.by_class.purity;
    v.entropy_upper = report.by_class.entropy;
  }
  v.purity_margin = v.purity_lower - p_min;
  v.entropy_margin = e_max - v.entropy_upper;
  v.holds = v.purity_lower > p_min && v.entropy_upper < e_max;
  return v;
}

std::string render_contingency(const ContingencyTable& t) {
  std::size_t name_w = 7;
  for (const auto& c : t.classes) name_w = std::max(name_w, c.size());
  std::string out = pad("cluster", 7) + "  " + pad("mapping", name_w);
  for (const auto& c : t.classes) out += "  " + pad(c, std::max<std::size_t>(c.size(), 3));
  out += "  " + pad("n_e", 4) + "  " + pad("P", 5) + "  " + pad("E", 5) + "\n";
  for (const auto& r : t.rows) {
    out += pad(std::to_string(r.cluster), 7) + "  " + pad(r.mapped ? t.classes[*r.mapped] : "?", name_w);
    for (std::size_t i = 0; i < t.classes.size(); ++i)
      out += "  " + pad(std::to_string(r.counts[i]), std::max<std::size_t>(t.classes[i].size(), 3));
    out += "  " + pad(std::to_string(r.total()), 4) + "  " + pad(fixed(cluster_purity(r), 2), 5) + "  " +
           pad(fixed(cluster_entropy(r, t.classes.size()), 2), 5) + "\n";
  }
  out += pad("total", 7) + "  " + pad("", name_w);
  auto cols = t.column_totals();
  for (std::size_t i = 0; i < cols.size(); ++i)
    out += "  " + pad(std::to_string(cols[i]), std::max<std::size_t>(t.classes[i].size(), 3));
  out += "  " + pad(std::to_string(t.grand_total()), 4);
  if (t.grand_total() > 0) {
    auto q = corpus_quality(t);
    out += "  " + pad(fixed(q.purity, 2), 5) + "  " + pad(fixed(q.entropy, 2), 5);
  }
  out += "\n";
  return out;
}

std::string render_report(const QualityReport& r, const std::optional<Verdict>& verdict) {
  std::string out;
  out += "verification changes: " + std::to_string(r.verification_size) + "\n";
  out += "correctly assigned:   " + std::to_string(r.correctly_assigned) + "\n";
  out += "P_Q = " + fixed(r.by_cluster.purity, 4) + "  E_Q = " + fixed(r.by_cluster.entropy, 4) + "\n";
  out += "P_C = " + fixed(r.by_class.purity, 4) + "  E_C = " + fixed(r.by_class.entropy, 4) + "\n";
  if (r.resampled) {
    const auto& s = *r.resampled;
    out += "resampling: M = " + std::to_string(s.parts) + ", alpha = " + fixed(s.alpha, 3) +
           ", seed = " + std::to_string(s.seed) + ", method = " + s.method +
           ", resampled verification changes = " + std::to_string(s.resampled_count) + "\n";
    out += "P_C = " + fixed(s.purity.mean, 4) + " +/- " + fixed(s.purity.half_width, 4) + "\n";
    out += "E_C = " + fixed(s.entropy.mean, 4) + " +/- " + fixed(s.entropy.half_width, 4) + "\n";
  }
  if (verdict) {
    out += std::string("hypothesis: ") + (verdict->holds ? "holds" : "does not hold") + " (" + verdict->basis +
           "; purity lower bound " + fixed(verdict->purity_lower, 4) + ", margin " + fixed(verdict->purity_margin, 4) +
           "; entropy upper bound " + fixed(verdict->entropy_upper, 4) + ", margin " +
           fixed(verdict->entropy_margin, 4) + ")\n";
  }
  return out;
}

}  // namespace deltaclass
