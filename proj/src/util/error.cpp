#include "sdyn/error.hpp"

namespace sdyn {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
    case Errc::EmptyMesh: return "EmptyMesh";
    case Errc::NoneConstrained: return "NoneConstrained";
    case Errc::AllConstrained: return "AllConstrained";
    case Errc::UnembeddableVertex: return "UnembeddableVertex";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::DegenerateTet: return "DegenerateTet";
    case Errc::SolveDiverged: return "SolveDiverged";
    case Errc::NonFiniteState: return "NonFiniteState";
    case Errc::GenerationFailed: return "GenerationFailed";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::CorruptCheckpoint: return "CorruptCheckpoint";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::ConstrainedCenter: return "ConstrainedCenter";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::NonFinitePrediction: return "NonFinitePrediction";
  }
  return "Unknown";
}

namespace {
std::string format_message(Errc code, const std::string& message,
                           std::optional<std::size_t> index) {
  std::string out(to_string(code));
  if (index) out += "[" + std::to_string(*index) + "]";
  if (!message.empty()) out += ": " + message;
  return out;
}
}  // namespace

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> index)
    : std::runtime_error(format_message(code, message, index)), code_(code), index_(index) {}

}  // namespace sdyn
