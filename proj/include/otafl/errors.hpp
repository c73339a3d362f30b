#pragma once

#include <stdexcept>
#include <string>

namespace otafl {

// Precondition or shape violation by the caller.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// No point satisfies the constraints (DLR bounds, beamforming bisection).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A device whose (equivalent) channel has zero norm.
class DegenerateChannelError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace otafl
