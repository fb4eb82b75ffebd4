#ifndef UNIREP_VERIFICATION_HPP_
#define UNIREP_VERIFICATION_HPP_

#include <string>
#include <vector>

#include "unirep/gradcheck.hpp"

namespace unirep {

struct LayerCheckResult {
  std::string name;
  GradCheckReport report;
};

/// Central-difference checks for every primitive's analytic gradient (conv,
/// linear, relu, pool, softmax-CE, BN, IN, scale), each input slot class
/// included. Analytic gradients run in the 32-bit production path; the
/// numeric oracle evaluates in 64-bit.
std::vector<LayerCheckResult> gradcheck_layers(double tol, unsigned threads);

/// End-to-end check of backward() on the preset architecture: every bank
/// entry and scale parameter of a small random batch's loss.
LayerCheckResult gradcheck_whole_model(const std::string& preset, double tol,
                                       unsigned threads);

}  // namespace unirep

#endif  // UNIREP_VERIFICATION_HPP_
