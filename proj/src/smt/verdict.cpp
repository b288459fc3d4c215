#include "loopinv/verdict.h"

namespace loopinv {

const char* status_name(VcStatus s) {
  switch (s) {
    case VcStatus::Valid: return "Valid";
    case VcStatus::Invalid: return "Invalid";
    case VcStatus::Unknown: return "Unknown";
    case VcStatus::Timeout: return "Timeout";
  }
  return "Unknown";
}

std::string to_string(const Assignment& a) {
  std::string out;
  for (const auto& [k, v] : a) {
    if (!out.empty()) out += ", ";
    out += k + " = " + std::to_string(v);
  }
  return out;
}

}  // namespace loopinv
