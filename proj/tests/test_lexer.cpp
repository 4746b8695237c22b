#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "deltaclass/errors.hpp"
#include "deltaclass/lexer.hpp"

using namespace deltaclass;
using Lexemes = std::vector<std::string>;

namespace {

const LexerProfile& cfamily() { return builtin_profiles().at("c-family"); }

LexerProfile small_profile() {
  auto p = cfamily();
  p.control_flow = {"if", "while", "for", "case", "catch", "&&", "||", "?"};
  return p;
}

}  // namespace

TEST_CASE("lexing examples") {
  CHECK(lex_line("", cfamily()).empty());
  CHECK(lex_line("if (x) { while (y) z(); }", cfamily()) ==
        Lexemes{"if", "(", "x", ")", "{", "while", "(", "y", ")", "z", "(", ")", ";", "}"});
  CHECK(lex_line("// if while for", cfamily()).empty());
}

TEST_CASE("cyclomatic examples") {
  auto p = small_profile();
  CHECK(cc_of_line("x = 1;", p) == 0);
  CHECK(cc_of_line("if (x) { while (y) }", p) == 2);
  CHECK(cc_of_line("ifdef(x)", p) == 0);
  CHECK(cc_of_line("format_if(x) + fork()", p) == 0);
}

TEST_CASE("operators use the longest profile match") {
  CHECK(lex_line("a&&b||c", cfamily()) == Lexemes{"a", "&&", "b", "||", "c"});
  CHECK(lex_line("a & b", cfamily()) == Lexemes{"a", "&", "b"});
  CHECK(cc_of_line("a ? b : c && d", cfamily()) == 2);
  const auto& cs = builtin_profiles().at("csharp");
  CHECK(lex_line("x ?? y", cs) == Lexemes{"x", "??", "y"});
  CHECK(cc_of_line("x ?? y", cs) == 1);
  CHECK(cc_of_line("int? x = a ?? b;", cs) == 2);
  // "??" is not an operator in the C profile: two single "?" lexemes.
  CHECK(cc_of_line("x ?? y", cfamily()) == 2);
}

TEST_CASE("strings and comments produce no lexemes") {
  const auto& p = cfamily();
  CHECK(lex_line("s = \"if (a) while\";", p) == Lexemes{"s", "=", ";"});
  CHECK(lex_line("c = '\\'' ; if", p) == Lexemes{"c", "=", ";", "if"});
  CHECK(lex_line("s = \"a\\\"b\" + t", p) == Lexemes{"s", "=", "+", "t"});
  CHECK(lex_line("x /* if */ y", p) == Lexemes{"x", "y"});
  CHECK(lex_line("x /* if while", p) == Lexemes{"x"});
  CHECK(lex_line("x = \"unterminated if", p) == Lexemes{"x", "="});
  CHECK(lex_line("y; // while", p) == Lexemes{"y", ";"});
}

TEST_CASE("word characters") {
  CHECK(lex_line("$x = a$b", cfamily()) == Lexemes{"$", "x", "=", "a", "$", "b"});
  CHECK(lex_line("$x = a$b", builtin_profiles().at("java")) == Lexemes{"$x", "=", "a$b"});
  CHECK(lex_line("na\xc3\xafve+1", cfamily()) == Lexemes{"na\xc3\xafve", "+", "1"});
  CHECK(lex_line("\tfoo_bar2  baz", cfamily()) == Lexemes{"foo_bar2", "baz"});
}

TEST_CASE("bundled profile files equal the built-in profiles") {
  for (const auto& name : {"c-family", "csharp", "java"}) {
    CAPTURE(name);
    auto loaded = load_profile(std::string(DELTACLASS_DATA "/profiles/") + name + ".profile");
    CHECK(loaded == builtin_profiles().at(name));
  }
}

TEST_CASE("profile format round trip") {
  for (const auto& [name, p] : builtin_profiles()) {
    CAPTURE(name);
    CHECK(parse_profile(format_profile(p)) == p);
  }
}

TEST_CASE("profile validation") {
  auto p = cfamily();
  p.control_flow.clear();
  CHECK_THROWS_AS(p.validate(), ProfileMissing);
  p = cfamily();
  p.type_decl.insert("if");
  CHECK_THROWS_AS(p.validate(), ProfileMissing);
  CHECK_THROWS_AS(parse_profile("name = x\nbogus_key = 1\n"), Error);
  CHECK_THROWS_AS(parse_profile("name = x\ncontrol_flow = if\n").validate(), ProfileMissing);
  CHECK_THROWS_AS(load_profile("/nonexistent/x.profile"), Error);
}

TEST_CASE("cc never exceeds the lexeme count") {
  std::mt19937_64 rng(5);
  const std::string pieces[] = {"if", " ", "(", ")", "&&", "||", "?", "\"", "//", "/*", "*/", "x", "while", "'", "\\", "for", ";"};
  const auto& p = cfamily();
  for (int i = 0; i < 3000; ++i) {
    std::string line;
    for (int n = rng() % 12; n > 0; --n) line += pieces[rng() % std::size(pieces)];
    REQUIRE(cc_of_line(line, p) <= lex_line(line, p).size());
  }
}
