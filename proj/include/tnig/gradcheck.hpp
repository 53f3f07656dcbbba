#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tnig {

struct GradCheckResult {
  std::string name;
  double max_rel_err;
  bool pass;
};

// Central finite-difference verification of every loss adjoint and of the
// composite forward pass (model-parameter gradients) on 8x8 inputs.
std::vector<GradCheckResult> gradcheck_all(double eps, double tol, std::uint64_t seed);

}  // namespace tnig
