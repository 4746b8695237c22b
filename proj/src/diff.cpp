#include "deltaclass/diff.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "deltaclass/errors.hpp"

namespace deltaclass {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

// "--- a/src/x.cpp\t2020-01-01" -> "src/x.cpp"; "/dev/null" -> nullopt.
std::optional<std::string> header_path(std::string_view raw) {
  auto tab = raw.find('\t');
  if (tab != std::string_view::npos) raw = raw.substr(0, tab);
  while (!raw.empty() && raw.back() == ' ') raw.remove_suffix(1);
  if (raw == "/dev/null") return std::nullopt;
  if (starts_with(raw, "a/") || starts_with(raw, "b/")) raw.remove_prefix(2);
  return std::string(raw);
}

bool parse_range(std::string_view s, std::size_t& start, std::size_t& count) {
  auto comma = s.find(',');
  auto head = s.substr(0, comma);
  auto r = std::from_chars(head.data(), head.data() + head.size(), start);
  if (r.ec != std::errc{} || r.ptr != head.data() + head.size()) return false;
  count = 1;
  if (comma != std::string_view::npos) {
    auto tail = s.substr(comma + 1);
    auto r2 = std::from_chars(tail.data(), tail.data() + tail.size(), count);
    if (r2.ec != std::errc{} || r2.ptr != tail.data() + tail.size()) return false;
  }
  return true;
}

// "@@ -a,b +c,d @@ optional section"
bool parse_hunk_header(std::string_view line, std::size_t& old_start, std::size_t& old_count,
                       std::size_t& new_start, std::size_t& new_count) {
  if (!starts_with(line, "@@ -")) return false;
  auto rest = line.substr(4);
  auto sp = rest.find(' ');
  if (sp == std::string_view::npos) return false;
  if (!parse_range(rest.substr(0, sp), old_start, old_count)) return false;
  rest = rest.substr(sp + 1);
  if (!starts_with(rest, "+")) return false;
  rest.remove_prefix(1);
  sp = rest.find(' ');
  if (sp == std::string_view::npos) return false;
  if (!parse_range(rest.substr(0, sp), new_start, new_count)) return false;
  return starts_with(rest.substr(sp + 1), "@@");
}

class DiffParser {
 public:
  DiffParser(std::string_view text, std::vector<DiffNote>* notes)
      : lines_(split_lines(text)), notes_(notes) {}

  std::vector<FileDiff> run() {
    while (pos_ < lines_.size()) {
      auto line = lines_[pos_];
      if (starts_with(line, "diff --git ")) {
        flush();
        open_git_header(line.substr(11));
        ++pos_;
      } else if (starts_with(line, "--- ") && pos_ + 1 < lines_.size() &&
                 starts_with(lines_[pos_ + 1], "+++ ")) {
        // A second ---/+++ pair without a git header starts a new file.
        if (!current_ || !current_->hunks.empty() || !git_header_) {
          flush();
          current_ = FileDiff{};
        }
        git_header_ = false;
        current_->path_before = header_path(line.substr(4));
        current_->path_after = header_path(lines_[pos_ + 1].substr(4));
        if (!current_->path_before) current_->is_add = true;
        if (!current_->path_after) current_->is_delete = true;
        pos_ += 2;
      } else if (starts_with(line, "--- ")) {
        throw MalformedDiff(pos_ + 1, "'---' header not followed by '+++'");
      } else if (starts_with(line, "@@")) {
        if (!current_) throw MalformedDiff(pos_ + 1, "hunk outside of a file section");
        read_hunk();
      } else if (current_ && git_header_) {
        read_extended_header(line);
        ++pos_;
      } else {
        // Preamble, "\ No newline at end of file", "index ..." and similar.
        ++pos_;
      }
    }
    flush();
    return std::move(files_);
  }

 private:
  void note(std::string msg) {
    if (notes_) notes_->push_back({pos_ + 1, std::move(msg)});
  }

  void open_git_header(std::string_view rest) {
    current_ = FileDiff{};
    git_header_ = true;
    binary_ = false;
    auto split = rest.rfind(" b/");
    if (split != std::string_view::npos) {
      current_->path_before = header_path(rest.substr(0, split));
      current_->path_after = header_path(rest.substr(split + 1));
    }
  }

  void read_extended_header(std::string_view line) {
    if (starts_with(line, "new file mode")) {
      current_->is_add = true;
    } else if (starts_with(line, "deleted file mode")) {
      current_->is_delete = true;
    } else if (starts_with(line, "rename from ")) {
      current_->path_before = std::string(line.substr(12));
    } else if (starts_with(line, "rename to ")) {
      current_->path_after = std::string(line.substr(10));
    } else if (starts_with(line, "Binary files ") || starts_with(line, "GIT binary patch")) {
      binary_ = true;
    }
  }

  void read_hunk() {
    std::size_t old_start = 0, old_count = 0, new_start = 0, new_count = 0;
    if (!parse_hunk_header(lines_[pos_], old_start, old_count, new_start, new_count))
      throw MalformedDiff(pos_ + 1, "cannot parse hunk header '" + std::string(lines_[pos_]) + "'");
    ++pos_;
    Hunk h;
    h.old_start = std::max<std::size_t>(old_start, 1);
    h.new_start = std::max<std::size_t>(new_start, 1);
    while (old_count > 0 || new_count > 0) {
      if (pos_ >= lines_.size()) throw UnexpectedEOF(pos_);
      auto line = lines_[pos_];
      char tag = line.empty() ? ' ' : line[0];
      auto payload = line.empty() ? line : line.substr(1);
      switch (tag) {
        case ' ':
          if (old_count == 0 || new_count == 0)
            throw MalformedDiff(pos_ + 1, "context line exceeds hunk length");
          --old_count;
          --new_count;
          break;
        case '-':
          if (old_count == 0) throw MalformedDiff(pos_ + 1, "more '-' lines than the header declares");
          h.old_lines.emplace_back(payload);
          --old_count;
          break;
        case '+':
          if (new_count == 0) throw MalformedDiff(pos_ + 1, "more '+' lines than the header declares");
          h.new_lines.emplace_back(payload);
          --new_count;
          break;
        case '\\':
          break;
        default:
          throw MalformedDiff(pos_ + 1, "hunk body is shorter than its header declares");
      }
      ++pos_;
    }
    current_->hunks.push_back(std::move(h));
  }

  void flush() {
    if (!current_) return;
    if (binary_) {
      note("binary file skipped: " + current_->path());
    } else {
      if (current_->is_add) current_->path_before.reset();
      if (current_->is_delete) current_->path_after.reset();
      if (current_->is_add && current_->is_delete)
        throw MalformedDiff(pos_, "file is marked both added and deleted");
      files_.push_back(std::move(*current_));
    }
    current_.reset();
    git_header_ = false;
    binary_ = false;
  }

  std::vector<std::string_view> lines_;
  std::vector<DiffNote>* notes_;
  std::size_t pos_ = 0;
  std::optional<FileDiff> current_;
  bool git_header_ = false;
  bool binary_ = false;
  std::vector<FileDiff> files_;
};

}  // namespace

const std::string& FileDiff::path() const {
  static const std::string empty;
  if (path_after) return *path_after;
  if (path_before) return *path_before;
  return empty;
}

void EditScript::append(const EditScript& other) {
  added.insert(added.end(), other.added.begin(), other.added.end());
  deleted.insert(deleted.end(), other.deleted.begin(), other.deleted.end());
  modified.insert(modified.end(), other.modified.begin(), other.modified.end());
}

std::vector<FileDiff> parse_unified_diff(std::string_view text, std::vector<DiffNote>* notes) {
  return DiffParser(text, notes).run();
}

HunkAlignment align_hunk(const Hunk& hunk) {
  const auto& a = hunk.old_lines;
  const auto& b = hunk.new_lines;
  const std::size_t n = a.size(), m = b.size();

  // Common prefix and suffix always belong to some LCS.
  std::size_t pre = 0;
  while (pre < n && pre < m && a[pre] == b[pre]) ++pre;
  std::size_t suf = 0;
  while (suf < n - pre && suf < m - pre && a[n - 1 - suf] == b[m - 1 - suf]) ++suf;

  const std::size_t rn = n - pre - suf, rm = m - pre - suf;

  // Intern the middle section so the DP compares integers.
  std::unordered_map<std::string_view, std::uint32_t> ids;
  std::vector<std::uint32_t> ia(rn), ib(rm);
  for (std::size_t i = 0; i < rn; ++i) ia[i] = ids.try_emplace(a[pre + i], ids.size()).first->second;
  for (std::size_t j = 0; j < rm; ++j) ib[j] = ids.try_emplace(b[pre + j], ids.size()).first->second;

  // Matched (old, new) index pairs in the middle section.
  std::vector<std::pair<std::size_t, std::size_t>> anchors;
  constexpr std::size_t kMaxCells = std::size_t{1} << 25;
  if ((rn + 1) * (rm + 1) <= kMaxCells) {
    // suffix[i][j] = LCS length of ia[i..] and ib[j..]
    const std::size_t w = rm + 1;
    std::vector<std::uint32_t> suffix((rn + 1) * w, 0);
    for (std::size_t i = rn; i-- > 0;)
      for (std::size_t j = rm; j-- > 0;)
        suffix[i * w + j] = ia[i] == ib[j] ? suffix[(i + 1) * w + j + 1] + 1
                                           : std::max(suffix[(i + 1) * w + j], suffix[i * w + j + 1]);
    std::size_t i = 0, j = 0;
    while (i < rn && j < rm) {
      if (ia[i] == ib[j]) {
        anchors.emplace_back(i++, j++);
        continue;
      }
      auto skip_old = suffix[(i + 1) * w + j];
      auto skip_new = suffix[i * w + j + 1];
      // On a tie the lexicographically smaller line is skipped, which keeps
      // the alignment symmetric when old and new are swapped.
      if (skip_old > skip_new || (skip_old == skip_new && a[pre + i] < b[pre + j]))
        ++i;
      else
        ++j;
    }
  }
  // TODO: replace the quadratic table with a linear-space alignment so very
  // large hunks get a real LCS instead of a single replacement block.

  HunkAlignment out;
  out.old_tags.assign(n, LineTag::Common);
  out.new_tags.assign(m, LineTag::Common);
  auto tag_block = [&](std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1) {
    std::size_t paired = std::min(i1 - i0, j1 - j0);
    for (std::size_t i = i0; i < i1; ++i)
      out.old_tags[pre + i] = i - i0 < paired ? LineTag::Modified : LineTag::Deleted;
    for (std::size_t j = j0; j < j1; ++j)
      out.new_tags[pre + j] = j - j0 < paired ? LineTag::Modified : LineTag::Added;
  };
  std::size_t i = 0, j = 0;
  for (auto [ai, bj] : anchors) {
    tag_block(i, ai, j, bj);
    i = ai + 1;
    j = bj + 1;
  }
  tag_block(i, rn, j, rm);
  return out;
}

EditScript build_edit_script(const Hunk& hunk) {
  auto al = align_hunk(hunk);
  EditScript script;
  // The k-th modified old line pairs with the k-th modified new line.
  std::vector<const std::string*> mod_old;
  for (std::size_t i = 0; i < al.old_tags.size(); ++i) {
    if (al.old_tags[i] == LineTag::Deleted) script.deleted.push_back(hunk.old_lines[i]);
    if (al.old_tags[i] == LineTag::Modified) mod_old.push_back(&hunk.old_lines[i]);
  }
  std::size_t k = 0;
  for (std::size_t j = 0; j < al.new_tags.size(); ++j) {
    if (al.new_tags[j] == LineTag::Added) script.added.push_back(hunk.new_lines[j]);
    if (al.new_tags[j] == LineTag::Modified) script.modified.emplace_back(*mod_old[k++], hunk.new_lines[j]);
  }
  return script;
}

EditScript build_edit_script(const FileDiff& file) {
  EditScript out;
  for (const auto& h : file.hunks) out.append(build_edit_script(h));
  return out;
}

IngestResult ingest_history(const std::vector<HistoryEntry>& source) {
  std::unordered_set<std::string> seen;
  for (const auto& e : source)
    if (!seen.insert(e.meta.change_id).second) throw DuplicateChangeId(e.meta.change_id);

  IngestResult result;
  for (const auto& e : source) {
    std::vector<DiffNote> notes;
    try {
      ChangeRecord rec;
      rec.change_id = e.meta.change_id;
      rec.timestamp = e.meta.timestamp;
      rec.author = e.meta.author;
      rec.message = e.meta.message;
      rec.file_diffs = parse_unified_diff(e.diff_text, &notes);
      result.records.push_back(std::move(rec));
    } catch (const MalformedDiff& err) {
      result.report.push_back({e.meta.change_id, err.what()});
    }
    for (auto& n : notes)
      result.report.push_back({e.meta.change_id, "line " + std::to_string(n.line_no) + ": " + n.message});
  }
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const ChangeRecord& x, const ChangeRecord& y) { return x.timestamp < y.timestamp; });
  return result;
}

std::vector<HistoryEntry> split_history_text(std::string_view text) {
  std::vector<HistoryEntry> entries;
  bool in_header = false;
  for (auto line : split_lines(text)) {
    if (starts_with(line, "commit ")) {
      entries.emplace_back();
      entries.back().meta.change_id = std::string(line.substr(7));
      in_header = true;
      continue;
    }
    if (entries.empty()) continue;
    auto& meta = entries.back().meta;
    if (in_header) {
      if (starts_with(line, "author ")) {
        meta.author = std::string(line.substr(7));
        continue;
      }
      if (starts_with(line, "date ")) {
        auto v = line.substr(5);
        auto r = std::from_chars(v.data(), v.data() + v.size(), meta.timestamp);
        if (r.ec != std::errc{}) throw Error("bad date for change " + meta.change_id);
        continue;
      }
      if (starts_with(line, "message ")) {
        if (!meta.message.empty()) meta.message += '\n';
        meta.message += line.substr(8);
        continue;
      }
      in_header = false;
    }
    auto& body = entries.back().diff_text;
    body.append(line);
    body.push_back('\n');
  }
  return entries;
}

std::vector<HistoryEntry> read_history(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  if (!fs::is_directory(path)) return split_history_text(slurp(path));

  std::set<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path))
    if (entry.is_regular_file() && entry.path().extension() == ".diff") files.insert(entry.path());

  std::vector<HistoryEntry> out;
  for (const auto& p : files) {
    auto text = slurp(p);
    auto parsed = split_history_text(text);
    HistoryEntry e;
    if (parsed.size() == 1) e = std::move(parsed.front());
    else e.diff_text = std::move(text);
    e.meta.change_id = p.stem().string();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace deltaclass
