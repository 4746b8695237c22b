#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "deltaclass/classify.hpp"
#include "deltaclass/clustering.hpp"
#include "deltaclass/diff.hpp"
#include "deltaclass/metrics.hpp"

namespace deltaclass {

inline constexpr int kSessionFormatVersion = 1;

enum class Stage : int {
  Initialized = 0,
  Ingested,
  Measured,
  Clustered,
  Labeling,
  Mapped,
  Classified,
  Evaluated,
};

std::string_view stage_name(Stage s);
Stage stage_from_name(std::string_view name);
// The CLI verb whose success establishes `s`.
std::string_view stage_verb(Stage s);

struct SessionConfig {
  ClassSet classes;
  MetricSelection metrics;
  std::string default_profile = "c-family";
  std::map<std::string, std::string> extension_map = ProfileSet::default_extension_map();
  std::string profile_dir;  // extra *.profile files; empty for built-ins only

  std::optional<std::size_t> k_min;  // defaults to the number of classes
  std::optional<std::size_t> k_max;  // defaults to k_min
  double i_min = -1.0;
  std::size_t max_iterations = 300;
  std::size_t restarts = 1;  // see ClusterParams::restarts
  ZeroVectorPolicy zero_vector_policy = ZeroVectorPolicy::Exclude;

  std::size_t representatives = 6;
  std::size_t resample_parts = 5;
  double alpha = 0.05;
  bool recompute_mapping = false;
  std::optional<double> p_min;  // quality targets
  std::optional<double> e_max;
  std::uint64_t seed = 0;
  // "independent" or "per-class-after-classification"
  std::string verification_sampling = "independent";

  std::size_t effective_k_min() const { return k_min.value_or(classes.size()); }
  std::size_t effective_k_max() const { return std::max(k_max.value_or(effective_k_min()), effective_k_min()); }

  ProfileSet profile_set() const;

  bool operator==(const SessionConfig&) const = default;
};

std::string config_to_json(const SessionConfig& c);
SessionConfig config_from_json(std::string_view text);

// The last stage whose artifacts survive a config edit, or nullopt when the
// edit changes nothing that was already computed.
std::optional<Stage> config_change_stage(const SessionConfig& before, const SessionConfig& after);

struct ArtifactRecord {
  std::string sha256;
  Stage stage = Stage::Initialized;
  bool stale = false;

  bool operator==(const ArtifactRecord&) const = default;
};

struct SessionState {
  Stage stage = Stage::Initialized;
  std::map<std::string, ArtifactRecord> artifacts;  // file name -> record
  bool labels_need_remap = false;

  bool operator==(const SessionState&) const = default;
};

// Marks every artifact produced after `changed` stale and rolls the stage
// back. Labels are kept but flagged for re-mapping when clustering is stale.
SessionState invalidate_downstream(SessionState state, Stage changed);

std::string sha256_hex(std::string_view data);

// Writes the manifest. Artifact files themselves are written by Session.
void save_session(const std::filesystem::path& dir, const SessionState& state);
// Reads the manifest and verifies every recorded artifact hash.
// Throws VersionMismatch, CorruptArtifact.
SessionState load_session(const std::filesystem::path& dir);

// Exclusive writer lock on a session directory (a ".lock" file).
class SessionLock {
 public:
  explicit SessionLock(const std::filesystem::path& dir);  // throws SessionLocked
  ~SessionLock();
  SessionLock(const SessionLock&) = delete;
  SessionLock& operator=(const SessionLock&) = delete;

 private:
  std::filesystem::path file_;
};

class Session {
 public:
  static Session create(const std::filesystem::path& dir, const SessionConfig& config);
  static Session open(const std::filesystem::path& dir);

  const std::filesystem::path& dir() const { return dir_; }
  const SessionConfig& config() const { return config_; }
  const SessionState& state() const { return state_; }
  Stage stage() const { return state_.stage; }

  // Persists a new config and invalidates whatever it affects.
  void update_config(const SessionConfig& config);

  // Throws StageError naming the verb that has to run first.
  void require(Stage needed) const;

  // Records that `stage` was (re)computed: later artifacts go stale unless
  // nothing written since the previous complete() changed.
  void complete(Stage stage);

  void write_artifact(const std::string& name, std::string_view content, Stage stage);
  std::string read_artifact(const std::string& name) const;  // hash-checked
  bool has_artifact(const std::string& name) const;

  // Label log: append-only, one line per label, flushed per append.
  void append_label(const ExpertLabel& label);
  std::vector<ExpertLabel> read_labels() const;
  std::filesystem::path label_log_path() const { return dir_ / "labels.log"; }

 private:
  Session(std::filesystem::path dir, SessionConfig config, SessionState state);
  void save();

  std::filesystem::path dir_;
  SessionConfig config_;
  SessionState state_;
  bool dirty_ = false;  // an artifact or label changed since the last complete()
};

// Label log line format: change_id \t class \t expert_id \t unix_seconds
std::string format_label_line(const ExpertLabel& l);
std::vector<ExpertLabel> parse_label_log(std::string_view text);

// Artifact codecs.
std::string corpus_to_json(const std::vector<ChangeRecord>& records);
std::vector<ChangeRecord> corpus_from_json(std::string_view text);

std::string vectors_to_csv(const VectorSet& vs, const MetricSelection& selection);
VectorSet vectors_from_csv(std::string_view text);

std::string clustering_to_csv(const Clustering& c);
std::string clustering_meta_to_json(const Clustering& c, bool reached, const std::vector<KTraceEntry>& trace);
Clustering clustering_from_files(std::string_view csv, std::string_view meta_json);
std::string trace_to_text(const std::vector<KTraceEntry>& trace, double i_min, bool reached);

std::string mapping_to_json(const ClusterClassMap& m);
ClusterClassMap mapping_from_json(std::string_view text);

std::string classified_to_csv(const ClassifiedCorpus& c);

std::vector<VerifiedChange> verification_from_csv(std::string_view text);
std::string verification_to_csv(const std::vector<VerifiedChange>& v);

// Shortest round-trip decimal form.
std::string format_double(double x);
std::string csv_field(std::string_view s);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace deltaclass
