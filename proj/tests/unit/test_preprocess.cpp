#include <algorithm>
#include <array>
#include <functional>

#include "doctest.h"
#include "recomp/corpus.hpp"
#include "recomp/error.hpp"
#include "recomp/preprocess.hpp"
#include "test_support.hpp"

using namespace recomp;
namespace fs = std::filesystem;
using recomp::testing::data_dir;
using recomp::testing::read_file;

namespace {

SourceUnit unit_of(std::string code) { return SourceUnit{"t", std::move(code), {}, {}}; }

std::vector<fs::path> fixture_sources() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(data_dir() / "preprocess"))
    if (e.path().string().ends_with(".in.c")) out.push_back(e.path());
  for (const auto& e : fs::directory_iterator(data_dir() / "corpus/src")) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

using Rule = std::function<SourceUnit(SourceUnit)>;

const std::array<std::pair<const char*, Rule>, 3>& rules() {
  static const std::array<std::pair<const char*, Rule>, 3> r = {{
      {"elf", [](SourceUnit u) { return strip_elf_runtime_symbols(std::move(u)); }},
      {"canary", [](SourceUnit u) { return strip_security_checks(std::move(u)); }},
      {"decl", [](SourceUnit u) { return fix_declarations(std::move(u)); }},
  }};
  return r;
}

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("fixtures match their reviewed expected output") {
    int checked = 0;
    for (const auto& e : fs::directory_iterator(data_dir() / "preprocess")) {
      std::string in = e.path().string();
      if (!in.ends_with(".in.c")) continue;
      std::string expected_path = in.substr(0, in.size() - 5) + ".expected.c";
      CAPTURE(in);
      CHECK(preprocess(unit_of(read_file(in))).code == read_file(expected_path));
      ++checked;
    }
    CHECK(checked >= 7);
  }

  TEST_CASE("__cxa_finalize call is removed") {
    std::string code = "void f()\n{\n  g();\n  __cxa_finalize(&dso);\n  h();\n}\n";
    CHECK(strip_elf_runtime_symbols(unit_of(code)).code == "void f()\n{\n  g();\n  h();\n}\n");
  }

  TEST_CASE("two denylisted calls are removed, other lines intact") {
    std::string code = "void f()\n{\n  a();\n  __gmon_start__();\n  b();\n  _ITM_deregisterTMCloneTable(0);\n  c();\n}\n";
    CHECK(strip_elf_runtime_symbols(unit_of(code)).code == "void f()\n{\n  a();\n  b();\n  c();\n}\n");
  }

  TEST_CASE("code without runtime symbols is unchanged") {
    std::string code = "int gmon = 1; // __gmon_start__\nconst char *s = \"__cxa_finalize\";\n";
    CHECK(strip_elf_runtime_symbols(unit_of(code)).code == code);
  }

  TEST_CASE("unbraced if around a runtime call goes with it") {
    std::string code = "void f()\n{\n  if ( &__gmon_start__ )\n    __gmon_start__();\n  g();\n}\n";
    CHECK(strip_elf_runtime_symbols(unit_of(code)).code == "void f()\n{\n  g();\n}\n");
  }

  TEST_CASE("sole body of if with else becomes an empty statement") {
    std::string code = "void f(int x)\n{\n  if ( x )\n    __cxa_finalize(0);\n  else\n    g();\n}\n";
    CHECK(strip_elf_runtime_symbols(unit_of(code)).code == "void f(int x)\n{\n  if ( x )\n    ;\n  else\n    g();\n}\n");
  }

  TEST_CASE("canary read, compare and fail branch are all removed") {
    std::string code =
        "int f()\n{\n  unsigned __int64 v2; // [rsp+8h]\n\n  v2 = __readfsqword(0x28u);\n  g();\n"
        "  if ( __readfsqword(0x28u) != v2 )\n    __stack_chk_fail();\n  return 0;\n}\n";
    CHECK(strip_security_checks(unit_of(code)).code == "int f()\n{\n  g();\n  return 0;\n}\n");
  }

  TEST_CASE("canary pattern inside a string literal is preserved") {
    std::string code = "int main()\n{\n  puts(\"v1 = __readfsqword(0x28u);\");\n  return 0;\n}\n";
    CHECK(strip_security_checks(unit_of(code)).code == code);
  }

  TEST_CASE("canary-free code is unchanged") {
    std::string code = "int main()\n{\n  return 0;\n}\n";
    CHECK(strip_security_checks(unit_of(code)).code == code);
  }

  TEST_CASE("guard variable still in use keeps its declaration") {
    std::string code = "void f()\n{\n  long v3;\n\n  v3 = __readfsqword(0x28u);\n  printf(\"%ld\", v3);\n}\n";
    std::string out = strip_security_checks(unit_of(code)).code;
    CHECK(out.find("long v3;") != std::string::npos);
    CHECK(out.find("__readfsqword") == std::string::npos);
  }

  TEST_CASE("fastcall main with IDA parameter names is canonicalized") {
    std::string code = "int __fastcall main(int a1, char **a2)\n{\n  return a1 + (a2 != 0);\n}\n";
    CHECK(fix_declarations(unit_of(code)).code == "int main(int argc, char **argv)\n{\n  return argc + (argv != 0);\n}\n");
  }

  TEST_CASE("conforming main is unchanged") {
    for (std::string code : {"int main()\n{\n  return 0;\n}\n", "int main(int argc, char **argv)\n{\n  return argc;\n}\n"}) {
      CAPTURE(code);
      CHECK(fix_declarations(unit_of(code)).code == code);
    }
  }

  TEST_CASE("calling convention removed from non-main function, name and params kept") {
    std::string code = "int __cdecl add(int a, int b)\n{\n  return a + b;\n}\n";
    CHECK(fix_declarations(unit_of(code)).code == "int add(int a, int b)\n{\n  return a + b;\n}\n");
  }

  TEST_CASE("main keeps envp only when it is used") {
    std::string unused = "int __cdecl main(int argc, const char **argv, const char **envp)\n{\n  return 0;\n}\n";
    CHECK(fix_declarations(unit_of(unused)).code == "int main(int argc, char **argv)\n{\n  return 0;\n}\n");
    std::string used = "int main(int a1, char **a2, char **a3)\n{\n  return a3 != 0;\n}\n";
    CHECK(fix_declarations(unit_of(used)).code == "int main(int argc, char **argv, char **envp)\n{\n  return envp != 0;\n}\n");
  }

  TEST_CASE("main rename is skipped when the body already uses the canonical names") {
    std::string code = "int main(int a1, char **a2)\n{\n  int argc = a1;\n  return argc;\n}\n";
    CHECK(fix_declarations(unit_of(code)).code == code);
  }

  TEST_CASE("calls and comments mentioning main are not rewritten") {
    std::string code = "// int __fastcall main(int a1)\nint f()\n{\n  return main(1, 0);\n}\n";
    CHECK(fix_declarations(unit_of(code)).code == code);
  }

  TEST_CASE("preprocess sets origin Preprocessed") {
    auto u = preprocess(unit_of("int main() { return 0; }\n"));
    CHECK(u.origin.kind == OriginKind::Preprocessed);
  }

  TEST_CASE("apply_decrule prefixes the header hint") {
    const std::string hint = "#include <bits/stdc++.h>\nusing namespace std;";
    auto raw = unit_of("int __fastcall main(int a1, char **a2)\n{\n  puts(\"x\");\n  return 0;\n}\n");
    auto fixed = apply_decrule(raw, hint);
    CHECK(fixed.code.starts_with(hint + "\n"));
    CHECK(fixed.origin.kind == OriginKind::BaselineFixed);
    CHECK(fixed.code.substr(hint.size() + 1) == preprocess(raw).code);

    auto no_hint = apply_decrule(raw, std::nullopt);
    CHECK(no_hint.code == preprocess(raw).code);

    auto clean = unit_of("int main()\n{\n  return 0;\n}\n");
    auto same = apply_decrule(clean, std::string());
    CHECK(same.code == clean.code);
    CHECK(same.origin.kind == OriginKind::BaselineFixed);
    CHECK(apply_decrule(fixed, hint).code == fixed.code);
  }

  TEST_CASE("each rule is idempotent over the fixture corpus") {
    for (const auto& path : fixture_sources()) {
      auto unit = unit_of(read_file(path));
      for (const auto& [name, rule] : rules()) {
        const std::string rule_name = name;
        CAPTURE(path.string());
        CAPTURE(rule_name);
        auto once = rule(unit);
        CHECK(rule(once).code == once.code);
      }
      CHECK(preprocess(preprocess(unit)).code == preprocess(unit).code);
    }
  }

  TEST_CASE("rules commute over the fixture corpus") {
    std::array<int, 3> order = {0, 1, 2};
    for (const auto& path : fixture_sources()) {
      CAPTURE(path.string());
      auto unit = unit_of(read_file(path));
      const std::string reference = preprocess(unit).code;
      std::sort(order.begin(), order.end());
      do {
        SourceUnit u = unit;
        for (int i : order) u = rules()[i].second(std::move(u));
        CAPTURE(order[0]);
        CAPTURE(order[1]);
        CHECK(u.code == reference);
      } while (std::next_permutation(order.begin(), order.end()));
    }
  }

  TEST_CASE("index_functions finds two functions with bodies") {
    std::string code = "int f(int a)\n{\n  return a;\n}\n\nint main()\n{\n  return f(1);\n}\n";
    auto idx = index_functions(code);
    REQUIRE(idx.size() == 2);
    CHECK(idx[0].name == "f");
    CHECK(idx[1].name == "main");
    CHECK_FALSE(idx[0].body_is_empty_or_missing);
    CHECK_FALSE(idx[1].body_is_empty_or_missing);
    CHECK(code.substr(idx[0].body_span.begin, idx[0].body_span.end - idx[0].body_span.begin) == "{\n  return a;\n}");
    CHECK(idx[0].signature_text == "int f(int a)");
  }

  TEST_CASE("prototypes produce no record") {
    auto idx = index_functions("int f();\nint main()\n{\n  return f();\n}\n");
    REQUIRE(idx.size() == 1);
    CHECK(idx[0].name == "main");
  }

  TEST_CASE("string literal brace inside a body stays balanced") {
    auto idx = index_functions("int main()\n{\n  puts(\"{\");\n  return 0;\n}\n");
    REQUIRE(idx.size() == 1);
    CHECK(idx[0].name == "main");
  }

  TEST_CASE("empty and comment-only bodies are flagged") {
    auto idx = index_functions("void a() {}\nvoid b()\n{\n  // nothing\n}\nvoid c() { x(); }\n");
    REQUIRE(idx.size() == 3);
    CHECK(idx[0].body_is_empty_or_missing);
    CHECK(idx[1].body_is_empty_or_missing);
    CHECK_FALSE(idx[2].body_is_empty_or_missing);
  }

  TEST_CASE("structs, control blocks and initializers are not functions") {
    std::string code =
        "struct P { int x; int get() const { return x; } };\n"
        "int table[] = { 1, 2 };\n"
        "namespace n {\nint g() { return 1; }\n}\n"
        "extern \"C\" {\nint h(void) { return 2; }\n}\n"
        "int main()\n{\n  if (1) { table[0] = 3; }\n  auto l = [](int v) { return v; };\n  return l(0);\n}\n";
    auto idx = index_functions(code);
    std::vector<std::string> names;
    for (const auto& r : idx) names.push_back(r.name);
    CHECK(names == std::vector<std::string>{"g", "h", "main"});
  }

  TEST_CASE("qualified names, operators and trailing qualifiers are recognized") {
    std::string code =
        "int Foo::bar(int a) const noexcept\n{\n  return a;\n}\n"
        "Foo::Foo() : x(1), y{2}\n{\n  z();\n}\n"
        "bool operator<(const A &a, const B &b) { return a.v < b.v; }\n"
        "auto g(int v) -> int\n{\n  return v;\n}\n"
        "template <typename T> T id(T v) { return v; }\n"
        "void *operator new[](unsigned long n) { return nullptr; }\n"
        "int Fn::operator()(int v) const { return v; }\n";
    auto idx = index_functions(code);
    std::vector<std::string> names;
    for (const auto& r : idx) names.push_back(r.name);
    CHECK(names == std::vector<std::string>{"Foo::bar", "Foo::Foo", "operator<", "g", "id", "operator new[]",
                                            "Fn::operator()"});
    REQUIRE(idx.size() >= 2);
    CHECK(idx[1].signature_text == "Foo::Foo() : x(1), y{2}");
    CHECK_FALSE(idx[1].body_is_empty_or_missing);
  }

  TEST_CASE("preprocessor lines do not confuse the brace scan") {
    auto idx = index_functions("#define OPEN {\n#define CLOSE \\\n  }\nint main()\n{\n  return 0;\n}\n");
    REQUIRE(idx.size() == 1);
    CHECK(idx[0].name == "main");
  }

  TEST_CASE("unbalanced braces raise UnbalancedBraces") {
    CHECK_THROWS_AS(index_functions("int main()\n{\n  if (x) {\n  return 0;\n}\n"), UnbalancedBraces);
    CHECK_THROWS_AS(index_functions("int main() { } }"), UnbalancedBraces);
  }

  TEST_CASE("stripped_functions reports lost and emptied bodies") {
    auto prev = index_functions("int solve(int a) { return a; }\nint aux() { return 1; }\nint main() { return solve(1); }\n");
    auto pruned = index_functions("int solve(int a);\nint aux() {}\nint main() { return solve(1); }\n");
    CHECK(stripped_functions(prev, pruned, default_rules()) == std::vector<std::string>{"aux", "solve"});
    auto same = index_functions("int solve(int v) { return v * 1; }\nint aux() { return 2; }\nint main() { return 0; }\n");
    CHECK(stripped_functions(prev, same, default_rules()).empty());
  }

  TEST_CASE("guard-exempt runtime helpers may disappear") {
    auto prev = index_functions("void _init_proc() { x(); }\nvoid frame_dummy() { y(); }\nint main() { return 0; }\n");
    auto cand = index_functions("int main() { return 0; }\n");
    CHECK(stripped_functions(prev, cand, default_rules()).empty());
    RuleSet strict = default_rules();
    strict.guard_exempt.clear();
    CHECK(stripped_functions(prev, cand, strict) == std::vector<std::string>{"_init_proc", "frame_dummy"});
  }

  TEST_CASE("bundled rules file matches the built-in defaults") {
    CHECK(parse_rules_json(default_rules_json()) == default_rules());
    CHECK(load_rules(fs::path(RECOMP_TEST_DATA_DIR) / "../../core/config/default_rules.json") == default_rules());
  }

  TEST_CASE("partial rules files fall back to defaults per key") {
    auto r = parse_rules_json(R"({"elf_symbols": ["my_runtime_hook"]})");
    CHECK(r.elf_symbols == std::vector<std::string>{"my_runtime_hook"});
    CHECK(r.canary_patterns == default_rules().canary_patterns);
    auto u = strip_elf_runtime_symbols(unit_of("void f()\n{\n  my_runtime_hook();\n  __gmon_start__();\n}\n"), r);
    CHECK(u.code == "void f()\n{\n  __gmon_start__();\n}\n");
  }

  TEST_CASE("bad rules files raise ConfigError") {
    CHECK_THROWS_AS(parse_rules_json("{"), ConfigError);
    CHECK_THROWS_AS(parse_rules_json(R"({"canary_patterns": ["(unclosed"]})"), ConfigError);
    CHECK_THROWS_AS(parse_rules_json(R"({"elf_symbols": "notalist"})"), ConfigError);
    CHECK_THROWS_AS(load_rules("/nonexistent/rules.json"), Error);
  }
}
