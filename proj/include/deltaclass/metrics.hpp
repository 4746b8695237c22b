#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deltaclass/diff.hpp"
#include "deltaclass/lexer.hpp"

namespace deltaclass {

enum class Metric : std::uint8_t {
  LocAdd,
  LocDel,
  LocMod,
  CcAdd,
  CcDel,
  CcMod,
  FilesMod,
  IfaceAdd,
  IfaceDel,
  CsAdd,
  CsDel,
};

inline constexpr std::size_t kMetricCount = 11;

std::string_view metric_name(Metric m);
std::optional<Metric> metric_from_name(std::string_view name);

struct MetricVector {
  std::int64_t loc_add = 0;
  std::int64_t loc_del = 0;
  std::int64_t loc_mod = 0;
  std::int64_t cc_add = 0;
  std::int64_t cc_del = 0;
  std::int64_t cc_mod = 0;  // may be negative
  std::int64_t files_mod = 0;
  std::int64_t iface_add = 0;
  std::int64_t iface_del = 0;
  std::int64_t cs_add = 0;
  std::int64_t cs_del = 0;

  std::int64_t get(Metric m) const;
  std::array<std::int64_t, kMetricCount> values() const;
  bool is_zero() const;

  bool operator==(const MetricVector&) const = default;
};

// Ordered, duplicate-free subset of the eleven metrics; fixes the vector
// dimension and component order.
class MetricSelection {
 public:
  // All eleven metrics in table order.
  MetricSelection();
  explicit MetricSelection(std::vector<Metric> metrics);

  static MetricSelection parse(std::string_view comma_separated);

  const std::vector<Metric>& metrics() const { return metrics_; }
  std::size_t size() const { return metrics_.size(); }
  std::string to_string() const;  // comma separated names

  std::vector<double> project(const MetricVector& v) const;

  bool operator==(const MetricSelection&) const = default;

 private:
  std::vector<Metric> metrics_;
};

// Maps file extensions to lexer profiles.
class ProfileSet {
 public:
  ProfileSet(std::map<std::string, LexerProfile> profiles,
             std::map<std::string, std::string> extension_map, std::string default_profile);

  // Built-in profiles with the default extension map.
  static ProfileSet builtin();
  static std::map<std::string, std::string> default_extension_map();

  // Adds (or replaces) every "*.profile" file found in the directory.
  void load_directory(const std::filesystem::path& dir);

  const Lexer& lexer_for(const std::string& path) const;
  const Lexer& lexer(const std::string& profile_name) const;

 private:
  void rebuild();

  std::map<std::string, LexerProfile> profiles_;
  std::map<std::string, std::string> extension_map_;
  std::string default_profile_;
  std::map<std::string, std::shared_ptr<const Lexer>> lexers_;
};

// `scripts[i]` is the edit script of `change.file_diffs[i]`.
// Throws ProfileMissing when the profile is unusable.
MetricVector compute_metric_vector(const ChangeRecord& change, std::span<const EditScript> scripts,
                                   const LexerProfile& profile);
MetricVector compute_metric_vector(const ChangeRecord& change, std::span<const EditScript> scripts,
                                   const ProfileSet& profiles);

// Builds the edit scripts of every file and measures the change.
MetricVector measure_change(const ChangeRecord& change, const ProfileSet& profiles);

}  // namespace deltaclass
