#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sdyn {

enum class Errc {
  InvalidArgument,
  Io,
  EmptyMesh,
  NoneConstrained,
  AllConstrained,
  UnembeddableVertex,
  LengthMismatch,
  DegenerateTet,
  SolveDiverged,
  NonFiniteState,
  GenerationFailed,
  ShapeMismatch,
  CorruptCheckpoint,
  VersionMismatch,
  ConstrainedCenter,
  EmptyDataset,
  NonFiniteLoss,
  NonFinitePrediction,
};

std::string_view to_string(Errc code) noexcept;

// Domain error carrying a machine-readable code and, where it applies, the
// offending vertex / tet / frame index.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  Errc code_;
  std::optional<std::size_t> index_;
};

}  // namespace sdyn
