#include "xbar/errors.hpp"

namespace xbar {

SolverError::SolverError(const std::string& what, double residual)
    : Error(what), residual_(residual) {}

void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace xbar
