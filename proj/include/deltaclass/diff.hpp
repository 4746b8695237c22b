#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace deltaclass {

struct Hunk {
  std::size_t old_start = 1;
  std::size_t new_start = 1;
  // Only the "-" and "+" payloads; context lines are not kept.
  std::vector<std::string> old_lines;
  std::vector<std::string> new_lines;

  bool operator==(const Hunk&) const = default;
};

struct FileDiff {
  std::optional<std::string> path_before;
  std::optional<std::string> path_after;
  std::vector<Hunk> hunks;
  bool is_add = false;
  bool is_delete = false;

  // The path used for profile lookup: the new path, or the old one for deletions.
  const std::string& path() const;

  bool operator==(const FileDiff&) const = default;
};

struct ChangeRecord {
  std::string change_id;
  std::int64_t timestamp = 0;
  std::string author;
  std::string message;
  std::vector<FileDiff> file_diffs;

  bool operator==(const ChangeRecord&) const = default;
};

// L+, L-, L* of one hunk (or the concatenation over a file).
struct EditScript {
  std::vector<std::string> added;
  std::vector<std::string> deleted;
  std::vector<std::pair<std::string, std::string>> modified;  // (before, after)

  bool empty() const { return added.empty() && deleted.empty() && modified.empty(); }
  void append(const EditScript& other);

  bool operator==(const EditScript&) const = default;
};

// Non-fatal observations made while parsing (binary files, ignored lines).
struct DiffNote {
  std::size_t line_no = 0;
  std::string message;
};

// Parses unified-diff text ("--- / +++ / @@"), optionally with "diff --git"
// extended headers. Throws MalformedDiff or UnexpectedEOF.
std::vector<FileDiff> parse_unified_diff(std::string_view text,
                                         std::vector<DiffNote>* notes = nullptr);

enum class LineTag : char { Common = '=', Added = '+', Deleted = '-', Modified = '*' };

struct HunkAlignment {
  std::vector<LineTag> old_tags;  // one per old_lines entry
  std::vector<LineTag> new_tags;  // one per new_lines entry
};

// Line-level LCS alignment of a hunk, as a tag per line.
HunkAlignment align_hunk(const Hunk& hunk);

// Line-level LCS alignment of a hunk. Unmatched lines between two LCS anchors
// are paired positionally into L*; the surplus goes to L+ or L-.
EditScript build_edit_script(const Hunk& hunk);

// All hunks of a file concatenated.
EditScript build_edit_script(const FileDiff& file);

struct ChangeMetadata {
  std::string change_id;
  std::int64_t timestamp = 0;
  std::string author;
  std::string message;
};

struct HistoryEntry {
  ChangeMetadata meta;
  std::string diff_text;
};

struct IngestIssue {
  std::string change_id;
  std::string message;
};

struct IngestResult {
  std::vector<ChangeRecord> records;  // sorted by timestamp, stable
  std::vector<IngestIssue> report;
};

// Throws DuplicateChangeId; malformed diffs land in the report and the change
// is dropped.
IngestResult ingest_history(const std::vector<HistoryEntry>& source);

// Splits the batch-history format: blocks introduced by "commit <id>" followed
// by optional "author", "date", "message" header lines, then diff text.
std::vector<HistoryEntry> split_history_text(std::string_view text);

// Reads either a batch-history file or a directory of "<change_id>.diff"
// files (each may carry its own header block).
std::vector<HistoryEntry> read_history(const std::filesystem::path& path);

}  // namespace deltaclass
