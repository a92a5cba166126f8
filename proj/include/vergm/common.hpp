#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vergm {

using NodeIndex = std::int32_t;
using Count = std::int64_t;

struct EdgeTriple {
  NodeIndex origin = 0;
  NodeIndex dest = 0;
  Count count = 0;

  friend bool operator==(const EdgeTriple&, const EdgeTriple&) = default;
};

/// Thrown by the estimator when the pseudolikelihood Hessian is rank
/// deficient; carries the names of the terms spanning the null space.
class CollinearityError : public std::runtime_error {
 public:
  CollinearityError(std::string message, std::vector<std::string> term_names)
      : std::runtime_error(std::move(message)), terms(std::move(term_names)) {}

  std::vector<std::string> terms;
};

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace vergm
