#include "deltaclass/lexer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "deltaclass/errors.hpp"

namespace deltaclass {

namespace {

constexpr std::string_view kCFamily = R"(# C, C++ and Objective-C sources
name = c-family
word_chars = alnum _
control_flow = if else while for do switch case catch goto && || ?
interface_decl = __interface
type_decl = class struct union
line_comment = //
block_comment = /* */
string_delimiters = " '
)";

constexpr std::string_view kCSharp = R"(# C# sources
name = csharp
word_chars = alnum _
control_flow = if else while for foreach do switch case catch goto && || ? ??
interface_decl = interface
type_decl = class struct record
line_comment = //
block_comment = /* */
string_delimiters = " '
)";

constexpr std::string_view kJava = R"(# Java sources
name = java
word_chars = alnum _ $
control_flow = if else while for do switch case catch && || ?
interface_decl = interface
type_decl = class enum record
line_comment = //
block_comment = /* */
string_delimiters = " '
)";

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::bitset<256> word_table(std::string_view spec) {
  std::bitset<256> t;
  for (const auto& token : words(spec)) {
    for (int c = 0; c < 256; ++c) {
      if ((token == "alnum" && std::isalnum(c)) || (token == "alpha" && std::isalpha(c)) ||
          (token == "digit" && std::isdigit(c)) || (token == "upper" && std::isupper(c)) ||
          (token == "lower" && std::islower(c)))
        t.set(c);
    }
    if (token != "alnum" && token != "alpha" && token != "digit" && token != "upper" &&
        token != "lower")
      for (unsigned char c : token) t.set(c);
  }
  // Bytes of multi-byte UTF-8 sequences glue to identifiers.
  for (int c = 0x80; c < 256; ++c) t.set(c);
  return t;
}

std::string join(const auto& items) {
  std::string s;
  for (const auto& x : items) {
    if (!s.empty()) s += ' ';
    s += x;
  }
  return s;
}

}  // namespace

void LexerProfile::validate() const {
  auto missing = [&](const char* what) {
    return ProfileMissing("lexer profile '" + name + "' has an empty " + what + " set");
  };
  if (control_flow.empty()) throw missing("control_flow");
  if (interface_decl.empty()) throw missing("interface_decl");
  if (type_decl.empty()) throw missing("type_decl");
  for (const auto& t : type_decl)
    if (control_flow.count(t))
      throw ProfileMissing("lexer profile '" + name + "': '" + t +
                           "' is both a control-flow and a type-declaration lexeme");
}

LexerProfile parse_profile(std::string_view text) {
  LexerProfile p;
  p.word_chars_spec.clear();
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error("profile line " + std::to_string(line_no) + ": expected 'key = value'");
    auto key = std::string(trim(line.substr(0, eq)));
    auto value = trim(line.substr(eq + 1));
    auto items = words(value);
    if (key == "name") {
      p.name = std::string(value);
    } else if (key == "word_chars") {
      p.word_chars_spec = std::string(value);
    } else if (key == "control_flow") {
      p.control_flow.insert(items.begin(), items.end());
    } else if (key == "interface_decl") {
      p.interface_decl.insert(items.begin(), items.end());
    } else if (key == "type_decl") {
      p.type_decl.insert(items.begin(), items.end());
    } else if (key == "line_comment") {
      p.line_comment_prefixes.insert(p.line_comment_prefixes.end(), items.begin(), items.end());
    } else if (key == "block_comment") {
      if (items.size() % 2 != 0)
        throw Error("profile line " + std::to_string(line_no) + ": block_comment needs open/close pairs");
      for (std::size_t i = 0; i < items.size(); i += 2) p.block_comments.emplace_back(items[i], items[i + 1]);
    } else if (key == "string_delimiters") {
      for (const auto& d : items) p.string_delimiters += d;
    } else {
      throw Error("profile line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (p.word_chars_spec.empty()) p.word_chars_spec = "alnum _";
  return p;
}

std::string format_profile(const LexerProfile& p) {
  std::ostringstream out;
  out << "name = " << p.name << '\n';
  out << "word_chars = " << p.word_chars_spec << '\n';
  out << "control_flow = " << join(p.control_flow) << '\n';
  out << "interface_decl = " << join(p.interface_decl) << '\n';
  out << "type_decl = " << join(p.type_decl) << '\n';
  out << "line_comment = " << join(p.line_comment_prefixes) << '\n';
  std::vector<std::string> blocks;
  for (const auto& [open, close] : p.block_comments) blocks.push_back(open + " " + close);
  out << "block_comment = " << join(blocks) << '\n';
  std::vector<std::string> delims;
  for (char c : p.string_delimiters) delims.emplace_back(1, c);
  out << "string_delimiters = " << join(delims) << '\n';
  return out.str();
}

LexerProfile load_profile(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read lexer profile " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto p = parse_profile(ss.str());
  if (p.name.empty()) p.name = file.stem().string();
  return p;
}

const std::map<std::string, LexerProfile>& builtin_profiles() {
  static const std::map<std::string, LexerProfile> profiles = [] {
    std::map<std::string, LexerProfile> m;
    for (auto text : {kCFamily, kCSharp, kJava}) {
      auto p = parse_profile(text);
      m.emplace(p.name, std::move(p));
    }
    return m;
  }();
  return profiles;
}

Lexer::Lexer(const LexerProfile& profile) : profile_(profile), word_(word_table(profile.word_chars_spec)) {
  auto collect = [&](const std::set<std::string>& set) {
    for (const auto& lexeme : set) {
      if (lexeme.size() < 2) continue;
      bool symbolic = std::none_of(lexeme.begin(), lexeme.end(),
                                   [&](char c) { return is_word(static_cast<unsigned char>(c)); });
      if (symbolic) operators_.push_back(lexeme);
    }
  };
  collect(profile_.control_flow);
  collect(profile_.interface_decl);
  collect(profile_.type_decl);
  std::sort(operators_.begin(), operators_.end(), [](const std::string& a, const std::string& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  operators_.erase(std::unique(operators_.begin(), operators_.end()), operators_.end());
}

std::vector<std::string> Lexer::lex(std::string_view line) const {
  std::vector<std::string> out;
  const std::size_t n = line.size();
  std::size_t i = 0;
  auto at = [&](std::string_view token) { return line.substr(i, token.size()) == token; };

  while (i < n) {
    auto c = static_cast<unsigned char>(line[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (std::any_of(profile_.line_comment_prefixes.begin(), profile_.line_comment_prefixes.end(),
                    [&](const std::string& p) { return !p.empty() && at(p); }))
      break;

    bool in_block = false;
    for (const auto& [open, close] : profile_.block_comments) {
      if (open.empty() || !at(open)) continue;
      auto end = line.find(close, i + open.size());
      if (end == std::string_view::npos) return out;
      i = end + close.size();
      in_block = true;
      break;
    }
    if (in_block) continue;

    if (profile_.string_delimiters.find(static_cast<char>(c)) != std::string::npos) {
      std::size_t j = i + 1;
      while (j < n && line[j] != static_cast<char>(c)) j += line[j] == '\\' ? 2 : 1;
      if (j >= n) return out;
      i = j + 1;
      continue;
    }

    if (is_word(c)) {
      std::size_t j = i;
      while (j < n && is_word(static_cast<unsigned char>(line[j]))) ++j;
      out.emplace_back(line.substr(i, j - i));
      i = j;
      continue;
    }

    auto op = std::find_if(operators_.begin(), operators_.end(), [&](const std::string& o) { return at(o); });
    if (op != operators_.end()) {
      out.push_back(*op);
      i += op->size();
    } else {
      out.emplace_back(1, static_cast<char>(c));
      ++i;
    }
  }
  return out;
}

std::size_t Lexer::cc(std::string_view line) const {
  std::size_t count = 0;
  for (const auto& lexeme : lex(line)) count += profile_.control_flow.count(lexeme);
  return count;
}

std::vector<std::string> lex_line(std::string_view line, const LexerProfile& profile) {
  return Lexer(profile).lex(line);
}

std::size_t cc_of_line(std::string_view line, const LexerProfile& profile) {
  return Lexer(profile).cc(line);
}

}  // namespace deltaclass
