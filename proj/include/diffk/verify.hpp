#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffk/contraction.hpp"

namespace diffk {

struct VerifyCheck {
  std::string suite;
  std::string name;
  bool pass = false;
  double value = 0.0;      // observed quantity
  double threshold = 0.0;  // what it was compared against
  std::string detail;
};

struct VerifyReport {
  std::string suite;
  std::vector<VerifyCheck> checks;

  bool pass() const;
  int failures() const;
  nlohmann::json to_json() const;
};

/// Routines under test that a caller may replace, e.g. to confirm that a
/// deliberately broken implementation makes its suite fail.
struct VerifyHooks {
  std::function<Vector(const std::function<Matrix(const Vector&)>&, const Vector&, const Vector&, const Vector&,
                       double)>
      linear_family_inverse_derivative = diffk::linear_family_inverse_derivative;
  std::function<Matrix(const ContractionFamily&, const Vector&, const Vector&, double)> fixed_point_sensitivity =
      diffk::fixed_point_sensitivity;
};

const std::vector<std::string>& verify_suites();  // without "all"

/// Runs one suite or "all". Throws DomainError for an unknown suite name.
VerifyReport verify(const std::string& suite, std::uint64_t seed = 0, const VerifyHooks& hooks = {});

}  // namespace diffk
