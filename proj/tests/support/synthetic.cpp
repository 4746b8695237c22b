#include "synthetic.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "deltaclass/random.hpp"

namespace deltaclass::testing {

namespace {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::size_t range(std::size_t lo, std::size_t hi) { return lo + bounded(rng_, hi - lo + 1); }
  bool coin() { return bounded(rng_, 2) == 1; }

  std::string plain() {
    auto n = next_++;
    switch (bounded(rng_, 4)) {
      case 0: return "  int v" + std::to_string(n) + " = compute(" + std::to_string(n % 7) + ");";
      case 1: return "  total += items[" + std::to_string(n) + "];";
      case 2: return "  log_value(v" + std::to_string(n) + ");";
      default: return "  buf[" + std::to_string(n) + "] = 0;";
    }
  }

  std::string control() {
    auto n = next_++;
    switch (bounded(rng_, 3)) {
      case 0: return "  if (v" + std::to_string(n) + " > limit) {";
      case 1: return "  for (int i = 0; i < " + std::to_string(n) + "; ++i) {";
      default: return "  while (queue_" + std::to_string(n) + ".pending()) {";
    }
  }

  // n lines, about a quarter of them opening a control block.
  std::vector<std::string> block(std::size_t n) {
    std::vector<std::string> out;
    while (out.size() < n) {
      if (out.size() + 2 <= n && bounded(rng_, 4) == 0) {
        out.push_back(control());
        out.push_back("  }");
      } else {
        out.push_back(plain());
      }
    }
    return out;
  }

  std::string path() { return "src/mod" + std::to_string(bounded(rng_, 40)) + ".c"; }
  std::string context() { return "  step(" + std::to_string(next_++) + ");"; }

 private:
  std::mt19937_64 rng_;
  std::size_t next_ = 0;
};

struct FilePatch {
  std::string path;
  std::vector<std::string> old_lines, new_lines;  // changed lines of one hunk
  bool new_file = false, deleted_file = false;
};

std::string render(Gen& g, const FilePatch& f) {
  std::string out = "diff --git a/" + f.path + " b/" + f.path + "\n";
  if (f.new_file) {
    out += "--- /dev/null\n+++ b/" + f.path + "\n";
    out += "@@ -0,0 +1," + std::to_string(f.new_lines.size()) + " @@\n";
    for (const auto& l : f.new_lines) out += "+" + l + "\n";
    return out;
  }
  if (f.deleted_file) {
    out += "--- a/" + f.path + "\n+++ /dev/null\n";
    out += "@@ -1," + std::to_string(f.old_lines.size()) + " +0,0 @@\n";
    for (const auto& l : f.old_lines) out += "-" + l + "\n";
    return out;
  }
  auto before = g.context(), after = g.context();
  std::size_t start = g.range(5, 200);
  out += "--- a/" + f.path + "\n+++ b/" + f.path + "\n";
  out += "@@ -" + std::to_string(start) + "," + std::to_string(f.old_lines.size() + 2) + " +" +
         std::to_string(start) + "," + std::to_string(f.new_lines.size() + 2) + " @@\n";
  out += " " + before + "\n";
  for (const auto& l : f.old_lines) out += "-" + l + "\n";
  for (const auto& l : f.new_lines) out += "+" + l + "\n";
  out += " " + after + "\n";
  return out;
}

// Whitespace-only rewrite of a line; lexemes and CC stay the same.
std::string reformat(const std::string& line) {
  std::string out;
  for (char ch : line)
    if (ch != ' ') out.push_back(ch);
  return "\t" + out;
}

std::vector<FilePatch> make_add(Gen& g) {
  FilePatch f{g.path(), {}, g.block(g.range(5, 14))};
  f.new_file = g.coin();
  return {f};
}

std::vector<FilePatch> make_delete(Gen& g) {
  FilePatch f{g.path(), g.block(g.range(5, 14)), {}};
  f.deleted_file = g.coin();
  return {f};
}

std::vector<FilePatch> make_format(Gen& g) {
  FilePatch f{g.path(), g.block(g.range(4, 12)), {}};
  for (const auto& l : f.old_lines) f.new_lines.push_back(reformat(l));
  return {f};
}

// Code moved from one file to another plus a rename elsewhere.
std::vector<FilePatch> make_refactor(Gen& g) {
  auto moved = g.block(g.range(2, 5));
  FilePatch from{g.path(), moved, {}};
  FilePatch to{g.path(), {}, moved};
  auto old_name = g.plain();
  auto new_name = old_name;
  new_name.insert(new_name.find(';'), "_renamed");
  FilePatch rename{g.path(), {old_name}, {new_name}};
  if (to.path == from.path) to.path += "x";
  if (rename.path == from.path || rename.path == to.path) rename.path += "y";
  return {from, to, rename};
}

// A condition tightened in place, sometimes with a new guard line.
std::vector<FilePatch> make_fix(Gen& g) {
  FilePatch f{g.path(), {}, {}};
  auto n = g.range(1, 2);
  for (std::size_t i = 0; i < n; ++i) {
    auto line = g.control();
    f.old_lines.push_back(line);
    auto fixed = line;
    fixed.insert(fixed.rfind(')'), " && ok");
    f.new_lines.push_back(fixed);
  }
  if (g.coin()) f.new_lines.push_back("  if (p == NULL) return -1;");
  return {f};
}

}  // namespace

SyntheticCorpus generate_synthetic(std::uint64_t seed, std::size_t per_bundle) {
  std::vector<std::size_t> order;
  for (std::size_t b = 0; b < kSyntheticClasses.size(); ++b)
    for (std::size_t i = 0; i < per_bundle; ++i) order.push_back(b);
  seeded_shuffle(order, seed);

  Gen g(seed ^ 0x5eed);
  static const char* authors[] = {"ana", "ben", "chen", "dara"};
  SyntheticCorpus out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::string id = "s";
    auto num = std::to_string(i + 1);
    id += std::string(num.size() < 3 ? 3 - num.size() : 0, '0') + num;
    std::vector<FilePatch> patches;
    switch (order[i]) {
      case 0: patches = make_add(g); break;
      case 1: patches = make_delete(g); break;
      case 2: patches = make_format(g); break;
      case 3: patches = make_refactor(g); break;
      default: patches = make_fix(g); break;
    }
    // Unrelated stray edits in a second file blur the bundle directions.
    if (g.range(0, 9) < 3) {
      FilePatch stray{g.path() + "h", {}, {}};
      if (g.coin()) stray.new_lines.push_back(g.plain());
      else stray.old_lines.push_back(g.plain());
      if (g.coin()) {
        stray.old_lines.push_back(g.plain());
        stray.new_lines.push_back(g.plain());
      }
      patches.push_back(stray);
    }
    out.history += "commit " + id + "\n";
    out.history += std::string("author ") + authors[i % 4] + "\n";
    out.history += "date " + std::to_string(1700000000 + 3600 * i) + "\n";
    out.history += "message " + kSyntheticClasses[order[i]] + " change " + num + "\n";
    for (const auto& p : patches) out.history += render(g, p);
    out.changes.push_back({id, kSyntheticClasses[order[i]]});
  }
  return out;
}

std::string truth_labels(const SyntheticCorpus& corpus, const std::vector<std::string>& ids,
                         const std::string& expert) {
  std::map<std::string, std::string> truth;
  for (const auto& c : corpus.changes) truth[c.change_id] = c.truth;
  std::string out;
  for (const auto& id : ids) out += id + "\t" + truth.at(id) + "\t" + expert + "\t0\n";
  return out;
}

std::string truth_verification_csv(const SyntheticCorpus& corpus, std::size_t n, std::uint64_t seed) {
  auto changes = corpus.changes;
  seeded_shuffle(changes, seed);
  changes.resize(std::min(n, changes.size()));
  std::sort(changes.begin(), changes.end(),
            [](const auto& a, const auto& b) { return a.change_id < b.change_id; });
  std::string out = "change_id,class\n";
  for (const auto& c : changes) out += c.change_id + "," + c.truth + "\n";
  return out;
}

}  // namespace deltaclass::testing
