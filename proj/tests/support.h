#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "loopinv/parser.h"
#include "loopinv/smt.h"

namespace loopinv::test {

inline std::string source_path(const std::string& rel) { return std::string(LOOPINV_SOURCE_DIR) + "/" + rel; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing test file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fixture(const std::string& rel) { return read_file(source_path("tests/fixtures/" + rel)); }

inline Program walk() { return parse_program(fixture("walkthrough/walk.c"), "walk"); }

/// Invariant file as checked in: an annotation block without a fence.
inline InvariantSet load_inv(const std::string& rel, const Program& p) {
  return parse_invariant_block("```\n" + fixture(rel) + "```\n", p);
}

inline SolverPool& shared_pool() {
  static SolverPool pool(SolverConfig{}, 4);
  return pool;
}

}  // namespace loopinv::test
