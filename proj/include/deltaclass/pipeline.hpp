#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "deltaclass/classify.hpp"
#include "deltaclass/clustering.hpp"
#include "deltaclass/diff.hpp"
#include "deltaclass/evaluate.hpp"
#include "deltaclass/session.hpp"

namespace deltaclass {

// One function per pipeline verb. Each reads its inputs from the session,
// writes its artifacts and advances the stage. Callers hold the session lock.

struct IngestSummary {
  std::size_t records = 0;
  std::vector<IngestIssue> report;
};
IngestSummary run_ingest(Session& s, const std::filesystem::path& source);

struct MeasureSummary {
  std::size_t changes = 0;
  std::size_t zero_vectors = 0;
};
MeasureSummary run_measure(Session& s);

SelectKResult run_cluster(Session& s);

// Representatives per cluster for the current clustering and config.
std::vector<std::vector<std::string>> current_representatives(const Session& s);

// Enters the labeling stage (writes representatives.csv) if not there yet.
void begin_labeling(Session& s);

// Appends every label of a label-log formatted file. `expert` overrides the
// file's expert column when given. Returns the number of labels imported.
std::size_t run_label_import(Session& s, const std::filesystem::path& file,
                             const std::optional<std::string>& expert = std::nullopt);

// Checks a label against the session; throws UnknownClassName or
// LabelForUnknownChange.
void validate_label(const Session& s, const ExpertLabel& label);

struct MapOutcome {
  ClusterClassMap map;
  std::size_t labels_used = 0;
  std::vector<std::string> experts;
  std::optional<VerificationSet> dual;  // set when exactly two experts labelled
};
// Writes mapping.json. The stage only advances when every cluster resolved.
MapOutcome run_map(Session& s);

struct ClassifyOptions {
  std::optional<std::size_t> sample_per_class;  // draw a verification sample
};
ClassifiedCorpus run_classify(Session& s, const ClassifyOptions& opts = {});

struct EvaluateOutcome {
  ContingencyTable table;
  QualityReport report;
  std::optional<Verdict> verdict;
  std::string text;  // contingency table followed by the report
};
EvaluateOutcome run_evaluate(Session& s, const std::optional<std::filesystem::path>& verification = std::nullopt);

std::string report_to_json(const QualityReport& r, const std::optional<Verdict>& v, const ContingencyTable& t);

// Human summary of the session: stage, artifacts, latest report.
std::string describe_session(const Session& s);

std::vector<ChangeRecord> load_corpus(const Session& s);
VectorSet load_vectors(const Session& s);
Clustering load_clustering(const Session& s);
ClusterClassMap load_mapping(const Session& s);

}  // namespace deltaclass
