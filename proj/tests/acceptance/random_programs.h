#pragma once

#include <random>
#include <string>
#include <vector>

namespace loopinv::acceptance {

/// A generated single-loop program over x, y, z with its candidate invariants.
struct RandomProgram {
  std::string source;
  std::vector<std::string> candidates;
};

/// Program text in the accepted C subset. Constants stay within [-3, 3] so the
/// bounded interpreter's initial-value window covers every literal.
/// `assertion` replaces the generated assertion when non-empty.
RandomProgram random_program(std::mt19937_64& rng, const std::string& assertion = "");

/// Same program with a different assertion.
std::string with_assertion(const std::string& source, const std::string& assertion);

/// A random linear atom over x, y, z.
std::string random_atom(std::mt19937_64& rng);

}  // namespace loopinv::acceptance
