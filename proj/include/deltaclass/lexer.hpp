#pragma once

#include <bitset>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace deltaclass {

// Language description used to split a changed line into lexemes.
struct LexerProfile {
  std::string name;
  std::set<std::string> control_flow;    // S_CF
  std::set<std::string> interface_decl;
  std::set<std::string> type_decl;       // class/struct introducers
  std::vector<std::string> line_comment_prefixes;
  std::vector<std::pair<std::string, std::string>> block_comments;
  std::string string_delimiters;
  std::string word_chars_spec = "alnum _";

  // Throws ProfileMissing when a lexeme set is empty or control_flow and
  // type_decl overlap.
  void validate() const;

  bool operator==(const LexerProfile&) const = default;
};

// Parses the key/value profile format:
//
//   name = c-family
//   word_chars = alnum _
//   control_flow = if else while for && || ?
//   interface_decl = __interface
//   type_decl = class struct union
//   line_comment = //
//   block_comment = /* */
//   string_delimiters = " '
//
// Lists are whitespace separated; block_comment is read as open/close pairs.
LexerProfile parse_profile(std::string_view text);
std::string format_profile(const LexerProfile& p);
LexerProfile load_profile(const std::filesystem::path& file);

// Built-in profiles: "c-family", "csharp", "java".
const std::map<std::string, LexerProfile>& builtin_profiles();

// A profile compiled into lookup tables. Construct once, lex many lines.
class Lexer {
 public:
  explicit Lexer(const LexerProfile& profile);

  // Word lexemes (maximal runs of word characters) and symbol lexemes
  // (profile operators by longest match, otherwise single characters).
  // Comments and string literals produce nothing; an unterminated one runs
  // to the end of the line.
  std::vector<std::string> lex(std::string_view line) const;

  // Simplified cyclomatic complexity: number of control-flow lexemes.
  std::size_t cc(std::string_view line) const;

  const LexerProfile& profile() const { return profile_; }

 private:
  bool is_word(unsigned char c) const { return word_[c]; }

  LexerProfile profile_;
  std::bitset<256> word_;
  std::vector<std::string> operators_;  // multi-character symbols, longest first
};

std::vector<std::string> lex_line(std::string_view line, const LexerProfile& profile);
std::size_t cc_of_line(std::string_view line, const LexerProfile& profile);

}  // namespace deltaclass
