#include "deltaclass/session.hpp"

#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "deltaclass/errors.hpp"

namespace deltaclass {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 8> kStageNames = {
    "initialized", "ingested", "measured", "clustered", "labeling", "mapped", "classified", "evaluated",
};
constexpr std::array<std::string_view, 8> kStageVerbs = {
    "init", "ingest", "measure", "cluster", "label", "map", "classify", "evaluate",
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write to a sibling temp file, then rename over the target.
void write_atomically(const fs::path& p, std::string_view content) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string policy_name(ZeroVectorPolicy p) { return p == ZeroVectorPolicy::Exclude ? "exclude" : "own_cluster"; }

ZeroVectorPolicy policy_from_name(const std::string& s) {
  if (s == "exclude") return ZeroVectorPolicy::Exclude;
  if (s == "own_cluster") return ZeroVectorPolicy::OwnCluster;
  throw Error("unknown zero-vector policy '" + s + "'");
}

std::int64_t parse_int(std::string_view s, const char* what) {
  std::int64_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw Error(std::string("bad ") + what + " '" + std::string(s) + "'");
  return v;
}

double parse_double(std::string_view s) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw Error("bad number '" + std::string(s) + "'");
  return v;
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

std::string_view stage_name(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

Stage stage_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i)
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  throw Error("unknown session stage '" + std::string(name) + "'");
}

std::string_view stage_verb(Stage s) { return kStageVerbs[static_cast<std::size_t>(s)]; }

ProfileSet SessionConfig::profile_set() const {
  auto profiles = builtin_profiles();
  if (!profile_dir.empty()) {
    std::set<fs::path> files;
    for (const auto& entry : fs::directory_iterator(profile_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".profile") files.insert(entry.path());
    for (const auto& f : files) {
      auto p = load_profile(f);
      profiles[p.name] = std::move(p);
    }
  }
  return ProfileSet(std::move(profiles), extension_map, default_profile);
}

std::string config_to_json(const SessionConfig& c) {
  json j;
  j["classes"] = c.classes.names();
  j["metrics"] = c.metrics.to_string();
  j["profiles"] = {{"default", c.default_profile}, {"extensions", c.extension_map}, {"dir", c.profile_dir}};
  j["cluster"] = {{"k_min", optional_json(c.k_min)},
                  {"k_max", optional_json(c.k_max)},
                  {"i_min", c.i_min},
                  {"max_iterations", c.max_iterations},
                  {"restarts", c.restarts},
                  {"zero_vector_policy", policy_name(c.zero_vector_policy)}};
  j["representatives"] = c.representatives;
  j["resample"] = {{"parts", c.resample_parts}, {"alpha", c.alpha}, {"recompute_mapping", c.recompute_mapping}};
  j["targets"] = {{"p_min", optional_json(c.p_min)}, {"e_max", optional_json(c.e_max)}};
  j["seed"] = c.seed;
  j["verification_sampling"] = c.verification_sampling;
  return j.dump(2) + "\n";
}

SessionConfig config_from_json(std::string_view text) {
  try {
    auto j = json::parse(text);
    SessionConfig c;
    c.classes = ClassSet(j.at("classes").get<std::vector<std::string>>());
    c.metrics = MetricSelection::parse(j.at("metrics").get<std::string>());
    const auto& p = j.at("profiles");
    c.default_profile = p.at("default").get<std::string>();
    c.extension_map = p.at("extensions").get<std::map<std::string, std::string>>();
    c.profile_dir = p.at("dir").get<std::string>();
    const auto& k = j.at("cluster");
    c.k_min = optional_from<std::size_t>(k, "k_min");
    c.k_max = optional_from<std::size_t>(k, "k_max");
    c.i_min = k.at("i_min").get<double>();
    c.max_iterations = k.at("max_iterations").get<std::size_t>();
    c.restarts = k.value("restarts", std::size_t{1});
    c.zero_vector_policy = policy_from_name(k.at("zero_vector_policy").get<std::string>());
    c.representatives = j.at("representatives").get<std::size_t>();
    const auto& r = j.at("resample");
    c.resample_parts = r.at("parts").get<std::size_t>();
    c.alpha = r.at("alpha").get<double>();
    c.recompute_mapping = r.at("recompute_mapping").get<bool>();
    c.p_min = optional_from<double>(j.at("targets"), "p_min");
    c.e_max = optional_from<double>(j.at("targets"), "e_max");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.verification_sampling = j.at("verification_sampling").get<std::string>();
    return c;
  } catch (const json::exception& e) {
    throw Error(std::string("invalid session config: ") + e.what());
  }
}

std::optional<Stage> config_change_stage(const SessionConfig& a, const SessionConfig& b) {
  std::optional<Stage> s;
  auto touch = [&](bool changed, Stage keep) {
    if (changed && (!s || keep < *s)) s = keep;
  };
  touch(!(a.metrics == b.metrics) || a.default_profile != b.default_profile || a.extension_map != b.extension_map ||
            a.profile_dir != b.profile_dir,
        Stage::Ingested);
  touch(!(a.classes == b.classes) || a.k_min != b.k_min || a.k_max != b.k_max || a.i_min != b.i_min ||
            a.max_iterations != b.max_iterations || a.restarts != b.restarts || a.zero_vector_policy != b.zero_vector_policy,
        Stage::Measured);
  touch(a.representatives != b.representatives, Stage::Clustered);
  touch(a.seed != b.seed || a.verification_sampling != b.verification_sampling, Stage::Mapped);
  touch(a.resample_parts != b.resample_parts || a.alpha != b.alpha || a.recompute_mapping != b.recompute_mapping ||
            a.p_min != b.p_min || a.e_max != b.e_max,
        Stage::Classified);
  return s;
}

SessionState invalidate_downstream(SessionState state, Stage changed) {
  for (auto& [_, rec] : state.artifacts)
    if (rec.stage > changed) rec.stale = true;
  if (state.stage > changed) {
    if (changed < Stage::Mapped && state.stage >= Stage::Labeling) state.labels_need_remap = true;
    state.stage = changed;
  }
  return state;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

void save_session(const fs::path& dir, const SessionState& state) {
  json j;
  j["format"] = "deltaclass-session";
  j["version"] = kSessionFormatVersion;
  j["stage"] = std::string(stage_name(state.stage));
  j["labels_need_remap"] = state.labels_need_remap;
  json arts = json::object();
  for (const auto& [name, rec] : state.artifacts)
    arts[name] = {{"sha256", rec.sha256}, {"stage", std::string(stage_name(rec.stage))}, {"stale", rec.stale}};
  j["artifacts"] = arts;
  write_atomically(dir / "manifest.json", j.dump(2) + "\n");
}

SessionState load_session(const fs::path& dir) {
  auto path = dir / "manifest.json";
  if (!fs::exists(path)) throw Error("no session at " + dir.string() + " (run `init` first)");
  json j;
  try {
    j = json::parse(slurp(path));
  } catch (const json::exception&) {
    throw CorruptArtifact("manifest.json");
  }
  if (j.value("format", "") != "deltaclass-session" || j.value("version", -1) != kSessionFormatVersion)
    throw VersionMismatch("session format " + j.value("format", std::string("?")) + " version " +
                          std::to_string(j.value("version", -1)) + " is not supported (expected version " +
                          std::to_string(kSessionFormatVersion) + ")");
  SessionState s;
  s.stage = stage_from_name(j.at("stage").get<std::string>());
  s.labels_need_remap = j.value("labels_need_remap", false);
  for (const auto& [name, rec] : j.at("artifacts").items()) {
    ArtifactRecord r{rec.at("sha256").get<std::string>(), stage_from_name(rec.at("stage").get<std::string>()),
                     rec.at("stale").get<bool>()};
    auto file = dir / name;
    if (!fs::exists(file) || sha256_hex(slurp(file)) != r.sha256) throw CorruptArtifact(name);
    s.artifacts.emplace(name, std::move(r));
  }
  return s;
}

SessionLock::SessionLock(const fs::path& dir) : file_(dir / ".lock") {
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (FILE* f = std::fopen(file_.c_str(), "wx")) {
      std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
      std::fclose(f);
      return;
    }
    if (errno != EEXIST) throw Error("cannot create lock file " + file_.string() + ": " + std::strerror(errno));
    long pid = 0;
    if (FILE* f = std::fopen(file_.c_str(), "r")) {
      if (std::fscanf(f, "%ld", &pid) != 1) pid = 0;
      std::fclose(f);
    }
    // A lock left behind by a dead process is taken over.
    if (pid > 0 && ::kill(static_cast<pid_t>(pid), 0) != 0 && errno == ESRCH) {
      std::error_code ec;
      fs::remove(file_, ec);
      continue;
    }
    break;
  }
  throw SessionLocked("session " + file_.parent_path().string() + " is locked by another process");
}

SessionLock::~SessionLock() {
  std::error_code ec;
  fs::remove(file_, ec);
}

Session::Session(fs::path dir, SessionConfig config, SessionState state)
    : dir_(std::move(dir)), config_(std::move(config)), state_(std::move(state)) {}

Session Session::create(const fs::path& dir, const SessionConfig& config) {
  if (fs::exists(dir / "manifest.json")) {
    auto s = open(dir);
    s.update_config(config);
    return s;
  }
  fs::create_directories(dir);
  Session s(dir, config, SessionState{});
  s.write_artifact("config.json", config_to_json(config), Stage::Initialized);
  return s;
}

Session Session::open(const fs::path& dir) {
  auto state = load_session(dir);
  auto config = config_from_json(slurp(dir / "config.json"));
  return Session(dir, std::move(config), std::move(state));
}

void Session::update_config(const SessionConfig& config) {
  auto changed = config_change_stage(config_, config);
  config_ = config;
  if (changed) state_ = invalidate_downstream(state_, *changed);
  write_artifact("config.json", config_to_json(config_), Stage::Initialized);
}

void Session::require(Stage needed) const {
  if (state_.stage >= needed) return;
  std::string msg = "run `" + std::string(stage_verb(needed)) + "` first (session is at stage '" +
                    std::string(stage_name(state_.stage)) + "'";
  for (const auto& [name, rec] : state_.artifacts)
    if (rec.stale && rec.stage == needed) {
      msg += "; its previous output is stale";
      break;
    }
  throw StageError(msg + ")");
}

void Session::complete(Stage stage) {
  // Re-running a verb that reproduced identical bytes keeps later stages.
  if (!dirty_ && state_.stage >= stage) {
    save();
    return;
  }
  dirty_ = false;
  state_ = invalidate_downstream(state_, stage);
  state_.stage = stage;
  if (stage >= Stage::Mapped) state_.labels_need_remap = false;
  save();
}

void Session::write_artifact(const std::string& name, std::string_view content, Stage stage) {
  write_atomically(dir_ / name, content);
  ArtifactRecord rec{sha256_hex(content), stage, false};
  auto it = state_.artifacts.find(name);
  if (it == state_.artifacts.end() || !(it->second == rec)) dirty_ = true;
  state_.artifacts[name] = rec;
  save();
}

std::string Session::read_artifact(const std::string& name) const {
  auto it = state_.artifacts.find(name);
  if (it == state_.artifacts.end()) throw Error("session has no artifact '" + name + "'");
  auto content = slurp(dir_ / name);
  if (sha256_hex(content) != it->second.sha256) throw CorruptArtifact(name);
  return content;
}

bool Session::has_artifact(const std::string& name) const {
  auto it = state_.artifacts.find(name);
  return it != state_.artifacts.end() && !it->second.stale;
}

void Session::append_label(const ExpertLabel& label) {
  auto line = format_label_line(label);
  FILE* f = std::fopen(label_log_path().c_str(), "a");
  if (!f) throw Error("cannot open label log " + label_log_path().string());
  std::fwrite(line.data(), 1, line.size(), f);
  std::fflush(f);
  ::fsync(::fileno(f));
  std::fclose(f);
  dirty_ = true;
}

std::vector<ExpertLabel> Session::read_labels() const {
  if (!fs::exists(label_log_path())) return {};
  return parse_label_log(slurp(label_log_path()));
}

void Session::save() { save_session(dir_, state_); }

std::string format_label_line(const ExpertLabel& l) {
  for (const auto* field : {&l.change_id, &l.class_name, &l.expert_id})
    if (field->find_first_of("\t\n\r") != std::string::npos) throw Error("label fields may not contain tabs or newlines");
  return l.change_id + '\t' + l.class_name + '\t' + l.expert_id + '\t' + std::to_string(l.labeled_at) + '\n';
}

std::vector<ExpertLabel> parse_label_log(std::string_view text) {
  std::vector<ExpertLabel> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> f;
    std::size_t p = 0;
    while (true) {
      auto tab = line.find('\t', p);
      f.push_back(line.substr(p, tab == std::string_view::npos ? std::string_view::npos : tab - p));
      if (tab == std::string_view::npos) break;
      p = tab + 1;
    }
    if (f.size() != 4) throw Error("label log line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
    out.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2]), parse_int(f[3], "timestamp")});
  }
  return out;
}

std::string corpus_to_json(const std::vector<ChangeRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) {
    json files = json::array();
    for (const auto& f : r.file_diffs) {
      json hunks = json::array();
      for (const auto& h : f.hunks)
        hunks.push_back({{"old_start", h.old_start}, {"new_start", h.new_start}, {"old", h.old_lines}, {"new", h.new_lines}});
      files.push_back({{"before", optional_json(f.path_before)},
                       {"after", optional_json(f.path_after)},
                       {"is_add", f.is_add},
                       {"is_delete", f.is_delete},
                       {"hunks", hunks}});
    }
    arr.push_back({{"id", r.change_id}, {"timestamp", r.timestamp}, {"author", r.author}, {"message", r.message}, {"files", files}});
  }
  return arr.dump(1) + "\n";
}

std::vector<ChangeRecord> corpus_from_json(std::string_view text) {
  std::vector<ChangeRecord> out;
  try {
    for (const auto& jr : json::parse(text)) {
      ChangeRecord r;
      r.change_id = jr.at("id").get<std::string>();
      r.timestamp = jr.at("timestamp").get<std::int64_t>();
      r.author = jr.at("author").get<std::string>();
      r.message = jr.at("message").get<std::string>();
      for (const auto& jf : jr.at("files")) {
        FileDiff f;
        f.path_before = optional_from<std::string>(jf, "before");
        f.path_after = optional_from<std::string>(jf, "after");
        f.is_add = jf.at("is_add").get<bool>();
        f.is_delete = jf.at("is_delete").get<bool>();
        for (const auto& jh : jf.at("hunks"))
          f.hunks.push_back({jh.at("old_start").get<std::size_t>(), jh.at("new_start").get<std::size_t>(),
                             jh.at("old").get<std::vector<std::string>>(), jh.at("new").get<std::vector<std::string>>()});
        r.file_diffs.push_back(std::move(f));
      }
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("invalid corpus file: ") + e.what());
  }
  return out;
}

std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), r.ptr);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string vectors_to_csv(const VectorSet& vs, const MetricSelection& selection) {
  std::string out = "change_id";
  for (auto m : selection.metrics()) out += "," + std::string(metric_name(m));
  out += "\n";
  for (std::size_t i = 0; i < vs.size(); ++i) {
    out += csv_field(vs.id(i));
    for (double x : vs.vector(i)) out += "," + format_double(x);
    out += "\n";
  }
  return out;
}

VectorSet vectors_from_csv(std::string_view text) {
  auto rows = parse_csv(text);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "change_id") throw Error("vectors file lacks a header");
  std::vector<Metric> metrics;
  for (std::size_t i = 1; i < rows[0].size(); ++i) {
    auto m = metric_from_name(rows[0][i]);
    if (!m) throw Error("unknown metric column '" + rows[0][i] + "'");
    metrics.push_back(*m);
  }
  MetricSelection sel(metrics);
  VectorSet vs(sel.size(), sel.to_string());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != sel.size() + 1) throw Error("vectors row " + std::to_string(r) + " has the wrong width");
    Vector v;
    for (std::size_t i = 1; i < rows[r].size(); ++i) v.push_back(parse_double(rows[r][i]));
    vs.add(rows[r][0], std::move(v));
  }
  return vs;
}

std::string clustering_to_csv(const Clustering& c) {
  std::string out = "change_id,cluster\n";
  for (std::size_t i = 0; i < c.ids.size(); ++i) out += csv_field(c.ids[i]) + "," + std::to_string(c.assignment[i]) + "\n";
  return out;
}

std::string clustering_meta_to_json(const Clustering& c, bool reached, const std::vector<KTraceEntry>& trace) {
  json centroids = json::array();
  for (const auto& v : c.centroids) {
    json row = json::array();
    for (double x : v) row.push_back(format_double(x));
    centroids.push_back(row);
  }
  json t = json::array();
  for (const auto& e : trace) {
    json mean = json::array(), mn = json::array();
    for (double x : e.mean_similarity) mean.push_back(format_double(x));
    for (double x : e.min_similarity) mn.push_back(format_double(x));
    t.push_back({{"k", e.k},
                 {"I", format_double(e.functional_I)},
                 {"iterations", e.iterations},
                 {"converged", e.converged},
                 {"sizes", e.sizes},
                 {"mean_similarity", mean},
                 {"min_similarity", mn}});
  }
  json j = {{"k", c.k},
            {"iterations", c.iterations},
            {"converged", c.converged},
            {"I", format_double(c.functional_I)},
            {"first_seed", c.first_seed},
            {"i_min_reached", reached},
            {"centroids", centroids},
            {"noop_ids", c.noop_ids},
            {"trace", t}};
  return j.dump(1) + "\n";
}

Clustering clustering_from_files(std::string_view csv, std::string_view meta_json) {
  Clustering c;
  try {
    auto j = json::parse(meta_json);
    c.k = j.at("k").get<std::size_t>();
    c.iterations = j.at("iterations").get<std::size_t>();
    c.converged = j.at("converged").get<bool>();
    c.functional_I = parse_double(j.at("I").get<std::string>());
    for (const auto& row : j.at("centroids")) {
      Vector v;
      for (const auto& x : row) v.push_back(parse_double(x.get<std::string>()));
      c.centroids.push_back(std::move(v));
    }
    c.noop_ids = j.at("noop_ids").get<std::vector<std::string>>();
    c.first_seed = j.value("first_seed", std::string());
  } catch (const json::exception& e) {
    throw Error(std::string("invalid clustering metadata: ") + e.what());
  }
  auto rows = parse_csv(csv);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2) throw Error("clustering row " + std::to_string(r) + " has the wrong width");
    c.ids.push_back(rows[r][0]);
    auto j = static_cast<std::size_t>(parse_int(rows[r][1], "cluster index"));
    if (j >= c.k) throw InconsistentClustering("cluster index out of range for " + rows[r][0]);
    c.assignment.push_back(j);
  }
  return c;
}

std::string trace_to_text(const std::vector<KTraceEntry>& trace, double i_min, bool reached) {
  std::string out = "# k-selection trace, I_min = " + format_double(i_min) + (reached ? "" : " (not reached)") + "\n";
  for (const auto& e : trace) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "k=%zu iterations=%zu%s I=%.6f\n", e.k, e.iterations,
                  e.converged ? "" : " (not converged)", e.functional_I);
    out += buf;
    for (std::size_t j = 0; j < e.k; ++j) {
      std::snprintf(buf, sizeof buf, "  cluster %zu: size=%zu mean_sim=%.4f min_sim=%.4f\n", j, e.sizes[j],
                    e.mean_similarity[j], e.min_similarity[j]);
      out += buf;
    }
  }
  return out;
}

std::string mapping_to_json(const ClusterClassMap& m) {
  json mapping = json::object();
  for (const auto& [j, cls] : m.mapping) mapping[std::to_string(j)] = cls;
  json tally = json::array();
  for (const auto& t : m.tally) tally.push_back(t);
  json j = {{"mapping", mapping}, {"tally", tally}, {"unresolved", m.unresolved}};
  return j.dump(1) + "\n";
}

ClusterClassMap mapping_from_json(std::string_view text) {
  ClusterClassMap m;
  try {
    auto j = json::parse(text);
    for (const auto& [key, cls] : j.at("mapping").items())
      m.mapping[static_cast<std::size_t>(parse_int(key, "cluster index"))] = cls.get<std::string>();
    for (const auto& t : j.at("tally")) m.tally.push_back(t.get<std::map<std::string, std::size_t>>());
    m.unresolved = j.at("unresolved").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw Error(std::string("invalid mapping file: ") + e.what());
  }
  return m;
}

std::string classified_to_csv(const ClassifiedCorpus& c) {
  std::string out = "change_id,class,provenance\n";
  for (const auto& ch : c.changes)
    out += csv_field(ch.change_id) + "," + csv_field(ch.class_name) + "," + std::string(provenance_name(ch.provenance)) + "\n";
  return out;
}

std::vector<VerifiedChange> verification_from_csv(std::string_view text) {
  std::vector<VerifiedChange> out;
  auto rows = parse_csv(text);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r == 0 && !rows[r].empty() && rows[r][0] == "change_id") continue;
    if (rows[r].size() != 2) throw Error("verification row " + std::to_string(r + 1) + ": expected change_id,class");
    out.push_back({rows[r][0], rows[r][1]});
  }
  return out;
}

std::string verification_to_csv(const std::vector<VerifiedChange>& v) {
  std::string out = "change_id,class\n";
  for (const auto& x : v) out += csv_field(x.change_id) + "," + csv_field(x.class_name) + "\n";
  return out;
}

}  // namespace deltaclass
