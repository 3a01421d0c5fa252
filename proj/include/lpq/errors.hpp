#pragma once

#include <stdexcept>
#include <string>

namespace lpq {

enum class Errc {
  invalid_regime,
  shape_mismatch,
  not_even,
  degree_too_large,
  degenerate_point,
  degenerate_form,
  singular_hessian,
  non_convergence,
  non_finite,
  equal_exponents,
  inadmissible_sobolev_exponent,
  region_outside_domain,
  scalar_only,
  precondition_violation,
  domain_violation,
  lower_bound_violation,
  config_syntax,
  config_semantic,
};

const char* errc_name(Errc code) noexcept;

/// Library-wide exception; the code identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace lpq
