#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace loopinv {

enum class VcStatus { Valid, Invalid, Unknown, Timeout };

const char* status_name(VcStatus s);

/// Concrete integer assignment: a counterexample or an oracle witness.
using Assignment = std::map<std::string, std::int64_t>;

std::string to_string(const Assignment& a);

}  // namespace loopinv
