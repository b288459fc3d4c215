#include <gtest/gtest.h>

#include <random>

#include "loopinv/parser.h"
#include "loopinv/printer.h"
#include "support.h"

using namespace loopinv;
using loopinv::test::walk;
using loopinv::test::fixture;

namespace {

DiagCode diag_of(const std::string& src) {
  try {
    parse_program(src);
  } catch (const ParseError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no diagnostic for:\n" << src;
  return DiagCode::Syntax;
}

}  // namespace

TEST(Frontend, WalkShape) {
  Program p = walk();
  EXPECT_EQ(p.state_vars(), (std::vector<std::string>{"a", "j", "m"}));
  EXPECT_EQ(to_string(p.loop_cond), "j <= m");
  EXPECT_EQ(to_string(p.assertion), "a >= -m && a <= m");
  // a = 0; assume(m > 0); j = 1
  ASSERT_EQ(p.pre.size(), 3u);
  EXPECT_TRUE(std::holds_alternative<Assume>(p.pre[1].node));
  EXPECT_EQ(to_string(std::get<Assume>(p.pre[1].node).cond), "m > 0");
  // if (*) a++ else a--; j++
  ASSERT_EQ(p.body.size(), 3u);
  EXPECT_TRUE(std::holds_alternative<Havoc>(p.body[0].node));
  EXPECT_TRUE(std::holds_alternative<If>(p.body[1].node));
}

TEST(Frontend, RoundTripIsStructural) {
  for (const char* rel : {"walkthrough/walk.c", "flag_counter.c"}) {
    Program p = parse_program(fixture(rel));
    Program q = parse_program(to_string(p));
    EXPECT_EQ(q, p) << rel << "\n" << to_string(p);
    EXPECT_EQ(to_string(q), to_string(p));
  }
}

TEST(Frontend, Diagnostics) {
  EXPECT_EQ(diag_of("int main(){int x=0; while(x<3){ while(x<2){x++;} } assert(x>0);}"), DiagCode::NestedLoop);
  EXPECT_EQ(diag_of("int main(){int x=0; while(x<3){x++;} while(x<5){x++;} assert(x>0);}"), DiagCode::MultipleLoops);
  EXPECT_EQ(diag_of("int main(){int x=0; assert(x==0);}"), DiagCode::MissingLoop);
  EXPECT_EQ(diag_of("int main(){int x=0; while(x<3){x++;}}"), DiagCode::MissingAssertion);
  EXPECT_EQ(diag_of("int main(){int x=0; while(x<3){x++;} assert(x>0); assert(x>1);}"), DiagCode::MultipleAssertions);
  EXPECT_EQ(diag_of("int main(){int x=0; while(x<3){x++; return 0;} assert(x>0);}"), DiagCode::ReturnInLoop);
  EXPECT_EQ(diag_of("int main(){int x=0; while(x<3){x = x + 1.5;} assert(x>0);}"), DiagCode::FloatLiteral);
  EXPECT_EQ(diag_of("int main(){int x=0; while(x<3){y++;} assert(x>0);}"), DiagCode::UndeclaredVariable);
  EXPECT_EQ(diag_of("int main(){int x=0; while(x<3){x = (x < 2);} assert(x>0);}"), DiagCode::TypeError);
  EXPECT_EQ(diag_of("int main(){int x=0; while(x<3 {x++;} assert(x>0);}"), DiagCode::Syntax);
}

TEST(Frontend, DiagnosticCarriesPosition) {
  try {
    parse_program("int main() {\n  int x = 0;\n  while (x < 3) { x = x + 1.5; }\n  assert(x > 0);\n}\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_GT(e.column(), 0);
    EXPECT_NE(std::string(e.what()).find("float-literal"), std::string::npos) << e.what();
  }
}

TEST(Frontend, ForLoopDesugars) {
  Program p = parse_program("int main(){int s=0; int i; for(i=0; i<4; i++){ s += i; } assert(s>=0);}");
  EXPECT_EQ(to_string(p.loop_cond), "i < 4");
  ASSERT_EQ(p.body.size(), 2u);
  EXPECT_EQ(to_string(std::get<Assign>(p.body[0].node).value), "s + i");
  EXPECT_EQ(to_string(std::get<Assign>(p.body[1].node).value), "i + 1");
}

TEST(Frontend, NondetLoopCondition) {
  Program p = parse_program("extern int unknown();\nint main(){int x=0; while(unknown()){x++;} assert(x>=0);}");
  ASSERT_EQ(p.cond_havoc.size(), 1u);
  EXPECT_TRUE(p.nondet_vars.count(p.cond_havoc[0]));
  EXPECT_EQ(p.state_vars(), std::vector<std::string>{"x"});
  EXPECT_EQ(parse_program(to_string(p)), p);
}

TEST(Invariants, AnnotationAndAssertForms) {
  Program p = walk();
  InvariantSet a = test::load_inv("walkthrough/weak.inv", p);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a.items[0].id, "i1");
  EXPECT_EQ(to_string(a.items[0].formula), "a >= -(j - 1) && a <= (j - 1)");
  InvariantSet b = parse_invariant_block("Here:\n```c\n  assert(j >= 1);\n  assert(m > 0);\n```\n", p);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b.items[1].id, "i2");
  EXPECT_EQ(to_string(b.items[1].formula), "m > 0");
}

TEST(Invariants, LastFenceWinsAndEmptyFenceIsEmpty) {
  Program p = walk();
  auto inv = parse_invariant_block("```c\nassert(j >= 1);\n```\nbetter:\n```c\nassert(m > 0);\n```\n", p);
  ASSERT_EQ(inv.size(), 1u);
  EXPECT_EQ(to_string(inv.items[0].formula), "m > 0");
  EXPECT_TRUE(parse_invariant_block("```c\n```", p).empty());
}

TEST(Invariants, Rejections) {
  Program p = walk();
  auto code = [&](const std::string& text) {
    try {
      parse_invariant_block(text, p);
    } catch (const ParseError& e) {
      return e.code();
    }
    return DiagCode::Syntax;
  };
  EXPECT_EQ(code("the invariant is j >= 1"), DiagCode::NoCodeBlock);
  EXPECT_EQ(code("```c\nassert(q >= 1);\n```"), DiagCode::UndeclaredVariable);
  EXPECT_EQ(code("```c\nj >= 1\n```"), DiagCode::Syntax);
}

TEST(Printer, MinimalParentheses) {
  EXPECT_EQ(to_string(parse_formula("a - (b - c) > 0")), "a - (b - c) > 0");
  EXPECT_EQ(to_string(parse_formula("a == 2 * (b + 1)")), "a == 2 * (b + 1)");
  EXPECT_EQ(to_string(parse_formula("x ==> y ==> z")), "x != 0 ==> y != 0 ==> z != 0");
  EXPECT_EQ(to_string(parse_formula("-(-x) > 0")), "-(-x) > 0");
  EXPECT_EQ(to_string_parenthesized(parse_formula("(j > m)")), "(j > m)");
  EXPECT_EQ(to_string_parenthesized(parse_formula("j == m + 1")), "(j == m + 1)");
}

TEST(Printer, NormalizeClause) {
  EXPECT_EQ(normalize_clause(parse_formula("m > 0")), "0 < m");
  EXPECT_EQ(normalize_clause(parse_formula("!!(x <= y)")), "x <= y");
  EXPECT_EQ(normalize_clause(parse_formula("b == a")), normalize_clause(parse_formula("a == b")));
  EXPECT_EQ(normalize_clause(parse_formula("(a<=j-1) && (a>=-(j-1))")),
            normalize_clause(parse_formula("a >= -(j-1) && a <= (j-1)")));
}

// ---- property: printing then parsing a random expression gives it back ----

namespace {

Expr random_int(std::mt19937_64& rng, int depth) {
  static const char* vars[] = {"x", "y", "z"};
  if (depth == 0 || rng() % 3 == 0) {
    if (rng() % 2) return Expr::var(vars[rng() % 3]);
    return Expr::int_lit(static_cast<std::int64_t>(rng() % 9) - 4);
  }
  switch (rng() % 5) {
    case 0: return Expr::unary(UnOp::Neg, random_int(rng, depth - 1));
    case 1: return Expr::binary(BinOp::Add, random_int(rng, depth - 1), random_int(rng, depth - 1));
    case 2: return Expr::binary(BinOp::Sub, random_int(rng, depth - 1), random_int(rng, depth - 1));
    case 3: return Expr::binary(BinOp::Mul, random_int(rng, depth - 1), random_int(rng, depth - 1));
    default: return Expr::binary(BinOp::Mod, random_int(rng, depth - 1), random_int(rng, depth - 1));
  }
}

Expr random_bool(std::mt19937_64& rng, int depth) {
  static const BinOp rel[] = {BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne};
  static const BinOp logic[] = {BinOp::And, BinOp::Or, BinOp::Implies};
  if (depth == 0 || rng() % 3 == 0) return Expr::binary(rel[rng() % 6], random_int(rng, 2), random_int(rng, 2));
  if (rng() % 4 == 0) return Expr::unary(UnOp::Not, random_bool(rng, depth - 1));
  return Expr::binary(logic[rng() % 3], random_bool(rng, depth - 1), random_bool(rng, depth - 1));
}

}  // namespace

TEST(PrinterProperty, ParsePrintRoundTrip) {
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 2000; ++i) {
    Expr e = random_bool(rng, 4);
    const std::string text = to_string(e);
    Expr back = parse_formula(text);
    ASSERT_EQ(back, e) << text;
    ASSERT_EQ(to_string(back), text);
  }
}

TEST(PrinterProperty, NormalizeIsIdempotentOnMirrors) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    Expr a = random_int(rng, 2), b = random_int(rng, 2);
    ASSERT_EQ(normalize_clause(Expr::binary(BinOp::Gt, a, b)), normalize_clause(Expr::binary(BinOp::Lt, b, a)));
    ASSERT_EQ(normalize_clause(Expr::binary(BinOp::Eq, a, b)), normalize_clause(Expr::binary(BinOp::Eq, b, a)));
    Expr c = Expr::binary(BinOp::Le, a, b);
    ASSERT_EQ(normalize_clause(parse_formula(normalize_clause(c))), normalize_clause(c));
  }
}
