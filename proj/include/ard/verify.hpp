#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ard {

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;  // measured bound on success, failure message otherwise
};

// Runs every module's named invariants as live property checks on freshly
// sampled instances (plus the shipped environments).  Deterministic for a
// fixed seed.  Names are stable identifiers like "designer.base-reward-
// feasible" so failures can be reported precisely.
std::vector<VerifyCheck> run_verification_suite(std::uint64_t seed);

bool all_passed(const std::vector<VerifyCheck>& checks);

}  // namespace ard
