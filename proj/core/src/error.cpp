#include "delaydense/error.hpp"

namespace delaydense {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingParam: return "MissingParam";
    case Errc::InvalidParam: return "InvalidParam";
    case Errc::Overflow: return "Overflow";
    case Errc::DomainError: return "DomainError";
    case Errc::SingularTime: return "SingularTime";
    case Errc::NotImplementedWindow: return "NotImplementedWindow";
    case Errc::DegenerateSegment: return "DegenerateSegment";
    case Errc::EquilibriumTrap: return "EquilibriumTrap";
    case Errc::EmptyBin: return "EmptyBin";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::UnsupportedModel: return "UnsupportedModel";
    case Errc::LostClassification: return "LostClassification";
    case Errc::BasinAmbiguity: return "BasinAmbiguity";
    case Errc::NoInteriorMaximum: return "NoInteriorMaximum";
    case Errc::StaggerExhausted: return "StaggerExhausted";
    case Errc::DegenerateTangent: return "DegenerateTangent";
    case Errc::Undefined: return "Undefined";
    case Errc::InsufficientPairs: return "InsufficientPairs";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::Usage: return "Usage";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

bool is_usage_error(Errc code) noexcept {
  switch (code) {
    case Errc::MissingParam:
    case Errc::InvalidParam:
    case Errc::ParseError:
    case Errc::ValidationError:
    case Errc::Usage:
    case Errc::Io:
      return true;
    default:
      return false;
  }
}

}  // namespace delaydense
