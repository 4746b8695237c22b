#include "deltaclass/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "deltaclass/errors.hpp"
#include "deltaclass/metrics.hpp"

namespace deltaclass {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string representatives_to_csv(const std::vector<std::vector<std::string>>& reps) {
  std::string out = "cluster,rank,change_id\n";
  for (std::size_t j = 0; j < reps.size(); ++j)
    for (std::size_t r = 0; r < reps[j].size(); ++r)
      out += std::to_string(j) + "," + std::to_string(r) + "," + csv_field(reps[j][r]) + "\n";
  return out;
}

}  // namespace

std::vector<ChangeRecord> load_corpus(const Session& s) {
  s.require(Stage::Ingested);
  return corpus_from_json(s.read_artifact("corpus.json"));
}

VectorSet load_vectors(const Session& s) {
  s.require(Stage::Measured);
  return vectors_from_csv(s.read_artifact("vectors.csv"));
}

Clustering load_clustering(const Session& s) {
  s.require(Stage::Clustered);
  return clustering_from_files(s.read_artifact("clustering.csv"), s.read_artifact("clustering.json"));
}

ClusterClassMap load_mapping(const Session& s) {
  s.require(Stage::Mapped);
  return mapping_from_json(s.read_artifact("mapping.json"));
}

IngestSummary run_ingest(Session& s, const fs::path& source) {
  auto result = ingest_history(read_history(source));
  std::string report;
  for (const auto& issue : result.report) report += issue.change_id + ": " + issue.message + "\n";
  s.write_artifact("corpus.json", corpus_to_json(result.records), Stage::Ingested);
  s.write_artifact("ingest_report.txt", report, Stage::Ingested);
  s.complete(Stage::Ingested);
  return {result.records.size(), std::move(result.report)};
}

MeasureSummary run_measure(Session& s) {
  auto corpus = load_corpus(s);
  auto profiles = s.config().profile_set();
  const auto& sel = s.config().metrics;
  VectorSet vs(sel.size(), sel.to_string());
  MeasureSummary summary;
  for (const auto& change : corpus) {
    auto v = measure_change(change, profiles);
    if (v.is_zero()) ++summary.zero_vectors;
    vs.add(change.change_id, sel.project(v));
  }
  summary.changes = vs.size();
  s.write_artifact("vectors.csv", vectors_to_csv(vs, sel), Stage::Measured);
  s.complete(Stage::Measured);
  return summary;
}

SelectKResult run_cluster(Session& s) {
  auto vs = load_vectors(s);
  const auto& cfg = s.config();
  ClusterParams params;
  params.max_iterations = cfg.max_iterations;
  params.restarts = cfg.restarts;
  params.rng_seed = cfg.seed;
  params.zero_vector_policy = cfg.zero_vector_policy;
  auto result = select_k(vs, cfg.effective_k_min(), cfg.i_min, cfg.effective_k_max(), params);
  s.write_artifact("clustering.csv", clustering_to_csv(result.clustering), Stage::Clustered);
  s.write_artifact("clustering.json", clustering_meta_to_json(result.clustering, result.reached, result.trace),
                   Stage::Clustered);
  s.write_artifact("cluster_trace.txt", trace_to_text(result.trace, cfg.i_min, result.reached), Stage::Clustered);
  s.complete(Stage::Clustered);
  return result;
}

std::vector<std::vector<std::string>> current_representatives(const Session& s) {
  return select_representatives(load_clustering(s), load_vectors(s), s.config().representatives);
}

void begin_labeling(Session& s) {
  s.require(Stage::Clustered);
  if (s.stage() >= Stage::Labeling) return;
  s.write_artifact("representatives.csv", representatives_to_csv(current_representatives(s)), Stage::Labeling);
  s.complete(Stage::Labeling);
}

void validate_label(const Session& s, const ExpertLabel& label) {
  if (!s.config().classes.contains(label.class_name)) throw UnknownClassName(label.class_name);
  auto c = load_clustering(s);
  if (!c.cluster_of(label.change_id) &&
      std::find(c.noop_ids.begin(), c.noop_ids.end(), label.change_id) == c.noop_ids.end())
    throw LabelForUnknownChange(label.change_id);
}

std::size_t run_label_import(Session& s, const fs::path& file, const std::optional<std::string>& expert) {
  begin_labeling(s);
  auto labels = parse_label_log(slurp(file));
  auto c = load_clustering(s);
  std::unordered_set<std::string> known(c.ids.begin(), c.ids.end());
  known.insert(c.noop_ids.begin(), c.noop_ids.end());
  for (auto& l : labels) {
    if (expert) l.expert_id = *expert;
    if (!s.config().classes.contains(l.class_name)) throw UnknownClassName(l.class_name);
    if (!known.count(l.change_id)) throw LabelForUnknownChange(l.change_id);
  }
  for (const auto& l : labels) s.append_label(l);
  // New labels invalidate any earlier mapping.
  s.complete(Stage::Labeling);
  return labels.size();
}

MapOutcome run_map(Session& s) {
  s.require(Stage::Labeling);
  auto c = load_clustering(s);
  auto labels = latest_labels(s.read_labels());
  MapOutcome out;
  out.experts = experts_in(labels);
  std::vector<ExpertLabel> used = labels;
  if (out.experts.size() == 2) {
    std::vector<ExpertLabel> a, b;
    for (const auto& l : labels) (l.expert_id == out.experts[0] ? a : b).push_back(l);
    out.dual = build_verification_set(a, b);
    used.clear();
    for (const auto& v : out.dual->changes) used.push_back({v.change_id, v.class_name, "agreed", 0});
  }
  out.labels_used = used.size();
  out.map = map_clusters_to_classes(c, used, s.config().classes);
  s.write_artifact("mapping.json", mapping_to_json(out.map), Stage::Mapped);
  if (out.map.resolved()) s.complete(Stage::Mapped);
  return out;
}

ClassifiedCorpus run_classify(Session& s, const ClassifyOptions& opts) {
  auto c = load_clustering(s);
  auto m = load_mapping(s);
  auto labels = latest_labels(s.read_labels());
  auto corpus = classify_all(c, m, c.noop_ids, labels);
  if (opts.sample_per_class) {
    auto cfg = s.config();
    cfg.verification_sampling = "per-class-after-classification";
    s.update_config(cfg);
  }
  s.write_artifact("classified.csv", classified_to_csv(corpus), Stage::Classified);
  if (opts.sample_per_class) {
    auto ids = sample_per_class(corpus, *opts.sample_per_class, s.config().seed);
    std::string out = "change_id,auto_class\n";
    std::map<std::string, std::string> cls;
    for (const auto& ch : corpus.changes) cls[ch.change_id] = ch.class_name;
    for (const auto& id : ids) out += csv_field(id) + "," + csv_field(cls[id]) + "\n";
    s.write_artifact("verification_sample.csv", out, Stage::Classified);
  }
  s.complete(Stage::Classified);
  return corpus;
}

std::string report_to_json(const QualityReport& r, const std::optional<Verdict>& v, const ContingencyTable& t) {
  json clusters = json::array();
  for (std::size_t j = 0; j < t.rows.size(); ++j) {
    const auto& row = t.rows[j];
    clusters.push_back({{"cluster", row.cluster},
                        {"mapped", row.mapped ? json(t.classes[*row.mapped]) : json(nullptr)},
                        {"counts", row.counts},
                        {"n_e", row.total()},
                        {"purity", r.cluster_purity[j]},
                        {"entropy", r.cluster_entropy[j]}});
  }
  json j = {{"classes", r.classes},
            {"clusters", clusters},
            {"verification_size", r.verification_size},
            {"correctly_assigned", r.correctly_assigned},
            {"skipped_noop", t.skipped_noop},
            {"P_Q", r.by_cluster.purity},
            {"E_Q", r.by_cluster.entropy},
            {"P_C", r.by_class.purity},
            {"E_C", r.by_class.entropy}};
  if (r.resampled) {
    const auto& s = *r.resampled;
    json samples = json::array();
    for (const auto& q : s.samples) samples.push_back({{"P_C", q.purity}, {"E_C", q.entropy}});
    j["resampling"] = {{"parts", s.parts},
                       {"alpha", s.alpha},
                       {"seed", s.seed},
                       {"method", s.method},
                       {"part_sizes", s.part_sizes},
                       {"resampled_count", s.resampled_count},
                       {"samples", samples},
                       {"P_C", {{"mean", s.purity.mean}, {"half_width", s.purity.half_width}}},
                       {"E_C", {{"mean", s.entropy.mean}, {"half_width", s.entropy.half_width}}}};
  }
  if (v) {
    j["hypothesis"] = {{"holds", v->holds},
                       {"basis", v->basis},
                       {"purity_lower", v->purity_lower},
                       {"entropy_upper", v->entropy_upper},
                       {"purity_margin", v->purity_margin},
                       {"entropy_margin", v->entropy_margin}};
  }
  return j.dump(1) + "\n";
}

EvaluateOutcome run_evaluate(Session& s, const std::optional<fs::path>& verification) {
  s.require(Stage::Mapped);
  s.require(Stage::Classified);
  const auto& cfg = s.config();
  auto c = load_clustering(s);
  auto m = load_mapping(s);

  std::vector<VerifiedChange> verif;
  if (verification) {
    verif = verification_from_csv(slurp(*verification));
    s.write_artifact("verification.csv", verification_to_csv(verif), Stage::Evaluated);
  } else if (s.state().artifacts.count("verification.csv")) {
    verif = verification_from_csv(s.read_artifact("verification.csv"));
  } else {
    auto labels = latest_labels(s.read_labels());
    auto experts = experts_in(labels);
    if (experts.size() < 2)
      throw Error("no verification set: pass --verification FILE or label with two experts");
    std::vector<ExpertLabel> a, b;
    for (const auto& l : labels) {
      if (l.expert_id == experts[0]) a.push_back(l);
      else if (l.expert_id == experts[1]) b.push_back(l);
    }
    verif = build_verification_set(a, b).changes;
  }

  EvaluateOutcome out;
  out.table = contingency(c, m, verif, cfg.classes);
  out.report = build_report(out.table);
  std::string notes;
  if (cfg.resample_parts >= 2 && out.table.grand_total() >= cfg.resample_parts) {
    ResampleOptions opts;
    opts.parts = cfg.resample_parts;
    opts.alpha = cfg.alpha;
    opts.seed = cfg.seed;
    opts.recompute_mapping = cfg.recompute_mapping;
    // Zero-vector changes are not part of any cluster row.
    std::vector<VerifiedChange> clustered;
    for (const auto& v : verif)
      if (c.cluster_of(v.change_id)) clustered.push_back(v);
    out.report.resampled = resample_quality(c, m, clustered, cfg.classes, opts);
  } else {
    notes += "resampling skipped: " + std::to_string(out.table.grand_total()) +
             " verification changes cannot fill " + std::to_string(cfg.resample_parts) + " parts\n";
  }
  if (cfg.p_min && cfg.e_max) out.verdict = hypothesis_check(out.report, *cfg.p_min, *cfg.e_max);

  out.text = render_contingency(out.table) + "\n" + render_report(out.report, out.verdict) + notes;
  s.write_artifact("contingency.txt", render_contingency(out.table), Stage::Evaluated);
  s.write_artifact("report.txt", out.text, Stage::Evaluated);
  s.write_artifact("report.json", report_to_json(out.report, out.verdict, out.table), Stage::Evaluated);
  s.complete(Stage::Evaluated);
  return out;
}

std::string describe_session(const Session& s) {
  std::string out = "session: " + s.dir().string() + "\n";
  out += "stage:   " + std::string(stage_name(s.stage())) + "\n";
  out += "classes: " + s.config().classes.to_string() + "\n";
  out += "metrics: " + s.config().metrics.to_string() + "\n";
  if (s.state().labels_need_remap) out += "labels:  present, clustering changed since the last `map`\n";
  out += "artifacts:\n";
  for (const auto& [name, rec] : s.state().artifacts)
    out += "  " + name + " (" + std::string(stage_name(rec.stage)) + (rec.stale ? ", stale" : "") + ")\n";
  if (s.has_artifact("cluster_trace.txt")) out += "\n" + s.read_artifact("cluster_trace.txt");
  if (s.has_artifact("report.txt")) out += "\n" + s.read_artifact("report.txt");
  return out;
}

}  // namespace deltaclass
