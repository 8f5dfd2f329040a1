#pragma once

#include <cstdint>
#include <vector>

#include "sdyn/meshkit/tet_mesh.hpp"

namespace sdyn {

// Per-vertex constraint flags c_i. At least one vertex is constrained and at
// least one is free.
class ConstraintSet {
 public:
  ConstraintSet() = default;
  // Throws Error(NoneConstrained) / Error(AllConstrained).
  explicit ConstraintSet(std::vector<std::uint8_t> flags);

  std::size_t size() const { return flags_.size(); }
  bool constrained(std::size_t i) const { return flags_[i] != 0; }
  const std::vector<std::uint8_t>& flags() const { return flags_; }
  const std::vector<std::uint32_t>& constrained_indices() const { return constrained_; }
  const std::vector<std::uint32_t>& free_indices() const { return free_; }

 private:
  std::vector<std::uint8_t> flags_;
  std::vector<std::uint32_t> constrained_;
  std::vector<std::uint32_t> free_;
};

ConstraintSet build_core_constraints(const TetMesh& mesh, const Aabb& core);

}  // namespace sdyn
