#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace delaydense {

enum class Errc {
  MissingParam,
  InvalidParam,
  Overflow,
  DomainError,
  SingularTime,
  NotImplementedWindow,
  DegenerateSegment,
  EquilibriumTrap,
  EmptyBin,
  NoConvergence,
  UnsupportedModel,
  LostClassification,
  BasinAmbiguity,
  NoInteriorMaximum,
  StaggerExhausted,
  DegenerateTangent,
  Undefined,
  InsufficientPairs,
  ParseError,
  ValidationError,
  Usage,
  Io,
};

std::string_view errc_name(Errc code) noexcept;

// Numerical errors map to CLI exit code 3, configuration/usage errors to 2.
bool is_usage_error(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace delaydense
