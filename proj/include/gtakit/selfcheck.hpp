#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gtakit/groups.hpp"

namespace gtakit {

struct CheckResult {
  std::string name;
  double max_err = 0.0;
  double tol = 0.0;
  bool pass = false;  // max_err < tol, or a direct predicate for boolean checks
};

// Random element helpers shared by the check suites and the test binaries.
Se3Pose sample_pose(std::mt19937_64& rng);
ProductElement sample_product(std::mt19937_64& rng);
// Rotation-only pose; its homogeneous matrix is orthogonal.
ProductElement sample_rotation_only_product(std::mt19937_64& rng);

std::vector<CheckResult> check_groups(std::uint64_t seed);
std::vector<CheckResult> check_reps(std::uint64_t seed);
std::vector<CheckResult> check_attn(std::uint64_t seed);
std::vector<CheckResult> check_grads(std::uint64_t seed);

// suite in {groups, reps, attn, grads, all}.
std::vector<CheckResult> run_checks(const std::string& suite, std::uint64_t seed);

}  // namespace gtakit
