#include "deltaclass/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "deltaclass/errors.hpp"

namespace deltaclass {

namespace {

constexpr std::array<std::string_view, kMetricCount> kNames = {
    "loc_add", "loc_del",   "loc_mod",   "cc_add", "cc_del", "cc_mod",
    "files_mod", "iface_add", "iface_del", "cs_add", "cs_del",
};

std::string lowercase_extension(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

struct LineCounts {
  std::int64_t cc = 0;
  std::map<std::string, std::int64_t> iface;
  std::map<std::string, std::int64_t> types;
};

LineCounts count_line(const Lexer& lexer, const std::string& line) {
  LineCounts c;
  const auto& p = lexer.profile();
  for (const auto& lexeme : lexer.lex(line)) {
    c.cc += static_cast<std::int64_t>(p.control_flow.count(lexeme));
    if (p.interface_decl.count(lexeme)) ++c.iface[lexeme];
    if (p.type_decl.count(lexeme)) ++c.types[lexeme];
  }
  return c;
}

std::int64_t total(const std::map<std::string, std::int64_t>& m) {
  std::int64_t s = 0;
  for (const auto& [_, n] : m) s += n;
  return s;
}

// Per-lexeme count delta between the two sides of a modified line.
void add_delta(const std::map<std::string, std::int64_t>& before,
               const std::map<std::string, std::int64_t>& after, std::int64_t& added,
               std::int64_t& deleted) {
  std::set<std::string> keys;
  for (const auto& [k, _] : before) keys.insert(k);
  for (const auto& [k, _] : after) keys.insert(k);
  for (const auto& k : keys) {
    auto b = before.count(k) ? before.at(k) : 0;
    auto a = after.count(k) ? after.at(k) : 0;
    if (a > b) added += a - b;
    else deleted += b - a;
  }
}

void accumulate(MetricVector& v, const EditScript& script, const Lexer& lexer) {
  if (script.empty()) return;
  ++v.files_mod;
  v.loc_add += static_cast<std::int64_t>(script.added.size());
  v.loc_del += static_cast<std::int64_t>(script.deleted.size());
  v.loc_mod += static_cast<std::int64_t>(script.modified.size());
  for (const auto& line : script.added) {
    auto c = count_line(lexer, line);
    v.cc_add += c.cc;
    v.iface_add += total(c.iface);
    v.cs_add += total(c.types);
  }
  for (const auto& line : script.deleted) {
    auto c = count_line(lexer, line);
    v.cc_del += c.cc;
    v.iface_del += total(c.iface);
    v.cs_del += total(c.types);
  }
  for (const auto& [before, after] : script.modified) {
    auto b = count_line(lexer, before);
    auto a = count_line(lexer, after);
    v.cc_mod += a.cc - b.cc;
    add_delta(b.iface, a.iface, v.iface_add, v.iface_del);
    add_delta(b.types, a.types, v.cs_add, v.cs_del);
  }
}

void check_arity(const ChangeRecord& change, std::span<const EditScript> scripts) {
  if (scripts.size() != change.file_diffs.size())
    throw Error("change " + change.change_id + ": " + std::to_string(scripts.size()) +
                " edit scripts for " + std::to_string(change.file_diffs.size()) + " files");
}

}  // namespace

std::string_view metric_name(Metric m) { return kNames[static_cast<std::size_t>(m)]; }

std::optional<Metric> metric_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<Metric>(i);
  return std::nullopt;
}

std::int64_t MetricVector::get(Metric m) const { return values()[static_cast<std::size_t>(m)]; }

std::array<std::int64_t, kMetricCount> MetricVector::values() const {
  return {loc_add, loc_del, loc_mod, cc_add, cc_del, cc_mod, files_mod, iface_add, iface_del, cs_add, cs_del};
}

bool MetricVector::is_zero() const {
  auto v = values();
  return std::all_of(v.begin(), v.end(), [](auto x) { return x == 0; });
}

MetricSelection::MetricSelection() {
  for (std::size_t i = 0; i < kMetricCount; ++i) metrics_.push_back(static_cast<Metric>(i));
}

MetricSelection::MetricSelection(std::vector<Metric> metrics) : metrics_(std::move(metrics)) {
  if (metrics_.empty()) throw Error("metric selection is empty");
  std::set<Metric> seen(metrics_.begin(), metrics_.end());
  if (seen.size() != metrics_.size()) throw Error("metric selection contains duplicates");
}

MetricSelection MetricSelection::parse(std::string_view text) {
  std::vector<Metric> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    auto name = text.substr(pos, comma - pos);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (!name.empty()) {
      auto m = metric_from_name(name);
      if (!m) throw Error("unknown metric '" + std::string(name) + "'");
      out.push_back(*m);
    }
    pos = comma + 1;
  }
  return MetricSelection(std::move(out));
}

std::string MetricSelection::to_string() const {
  std::string s;
  for (auto m : metrics_) {
    if (!s.empty()) s += ',';
    s += metric_name(m);
  }
  return s;
}

std::vector<double> MetricSelection::project(const MetricVector& v) const {
  std::vector<double> out;
  out.reserve(metrics_.size());
  for (auto m : metrics_) out.push_back(static_cast<double>(v.get(m)));
  return out;
}

ProfileSet::ProfileSet(std::map<std::string, LexerProfile> profiles,
                       std::map<std::string, std::string> extension_map, std::string default_profile)
    : profiles_(std::move(profiles)),
      extension_map_(std::move(extension_map)),
      default_profile_(std::move(default_profile)) {
  rebuild();
}

ProfileSet ProfileSet::builtin() {
  return ProfileSet(builtin_profiles(), default_extension_map(), "c-family");
}

std::map<std::string, std::string> ProfileSet::default_extension_map() {
  std::map<std::string, std::string> m;
  for (auto ext : {".c", ".h", ".cc", ".cpp", ".cxx", ".hh", ".hpp", ".hxx", ".m", ".mm"}) m[ext] = "c-family";
  m[".cs"] = "csharp";
  m[".java"] = "java";
  return m;
}

void ProfileSet::load_directory(const std::filesystem::path& dir) {
  std::set<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".profile") files.insert(entry.path());
  for (const auto& f : files) {
    auto p = load_profile(f);
    profiles_[p.name] = std::move(p);
  }
  rebuild();
}

void ProfileSet::rebuild() {
  for (const auto& [ext, name] : extension_map_)
    if (!profiles_.count(name)) throw ProfileMissing("extension " + ext + " maps to unknown profile '" + name + "'");
  if (!profiles_.count(default_profile_)) throw ProfileMissing("unknown default profile '" + default_profile_ + "'");
  lexers_.clear();
  for (const auto& [name, p] : profiles_) {
    p.validate();
    lexers_.emplace(name, std::make_shared<const Lexer>(p));
  }
}

const Lexer& ProfileSet::lexer(const std::string& profile_name) const {
  auto it = lexers_.find(profile_name);
  if (it == lexers_.end()) throw ProfileMissing("no lexer profile named '" + profile_name + "'");
  return *it->second;
}

const Lexer& ProfileSet::lexer_for(const std::string& path) const {
  auto it = extension_map_.find(lowercase_extension(path));
  return lexer(it == extension_map_.end() ? default_profile_ : it->second);
}

MetricVector compute_metric_vector(const ChangeRecord& change, std::span<const EditScript> scripts,
                                   const LexerProfile& profile) {
  check_arity(change, scripts);
  profile.validate();
  Lexer lexer(profile);
  MetricVector v;
  for (const auto& s : scripts) accumulate(v, s, lexer);
  return v;
}

MetricVector compute_metric_vector(const ChangeRecord& change, std::span<const EditScript> scripts,
                                   const ProfileSet& profiles) {
  check_arity(change, scripts);
  MetricVector v;
  for (std::size_t i = 0; i < scripts.size(); ++i)
    accumulate(v, scripts[i], profiles.lexer_for(change.file_diffs[i].path()));
  return v;
}

MetricVector measure_change(const ChangeRecord& change, const ProfileSet& profiles) {
  std::vector<EditScript> scripts;
  scripts.reserve(change.file_diffs.size());
  for (const auto& f : change.file_diffs) scripts.push_back(build_edit_script(f));
  return compute_metric_vector(change, scripts, profiles);
}

}  // namespace deltaclass
