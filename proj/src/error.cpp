#include "eac/error.hpp"

namespace eac {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MalformedManifest: return "MalformedManifest";
    case Errc::EmptyConceptSet: return "EmptyConceptSet";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::RleLengthMismatch: return "RleLengthMismatch";
    case Errc::NegativeRun: return "NegativeRun";
    case Errc::MissingArtifact: return "MissingArtifact";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::ProbeFailure: return "ProbeFailure";
    case Errc::BackendFailure: return "BackendFailure";
    case Errc::CoalitionSizeMismatch: return "CoalitionSizeMismatch";
    case Errc::ConceptAlreadyInCoalition: return "ConceptAlreadyInCoalition";
    case Errc::TooManyConcepts: return "TooManyConcepts";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace eac
