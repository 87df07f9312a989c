#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grasp {

enum class Errc {
  MalformedHeader,
  NonFiniteCoordinate,
  NormalCountMismatch,
  InvalidNormal,
  TooFewPoints,
  DegenerateNeighborhood,
  EmptyCloud,
  NotUnitVector,
  MissingNormals,
  BinSizeMismatch,
  ModelExceedsGrid,
  ResolutionMismatch,
  MalformedModel,
  MalformedScene,
  InvalidArgument,
  Io,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case Errc::NormalCountMismatch: return "NormalCountMismatch";
    case Errc::InvalidNormal: return "InvalidNormal";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::DegenerateNeighborhood: return "DegenerateNeighborhood";
    case Errc::EmptyCloud: return "EmptyCloud";
    case Errc::NotUnitVector: return "NotUnitVector";
    case Errc::MissingNormals: return "MissingNormals";
    case Errc::BinSizeMismatch: return "BinSizeMismatch";
    case Errc::ModelExceedsGrid: return "ModelExceedsGrid";
    case Errc::ResolutionMismatch: return "ResolutionMismatch";
    case Errc::MalformedModel: return "MalformedModel";
    case Errc::MalformedScene: return "MalformedScene";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above so
// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace grasp
