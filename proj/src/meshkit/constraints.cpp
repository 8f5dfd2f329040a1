#include "sdyn/meshkit/constraints.hpp"

#include "sdyn/error.hpp"

namespace sdyn {

ConstraintSet::ConstraintSet(std::vector<std::uint8_t> flags) : flags_(std::move(flags)) {
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    flags_[i] = flags_[i] ? 1 : 0;
    (flags_[i] ? constrained_ : free_).push_back(static_cast<std::uint32_t>(i));
  }
  if (constrained_.empty()) throw Error(Errc::NoneConstrained, "no vertex is constrained");
  if (free_.empty()) throw Error(Errc::AllConstrained, "every vertex is constrained");
}

ConstraintSet build_core_constraints(const TetMesh& mesh, const Aabb& core) {
  std::vector<std::uint8_t> flags(mesh.size(), 0);
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    flags[i] = core.contains(mesh.vertices()[i]) ? 1 : 0;
  }
  return ConstraintSet(std::move(flags));
}

}  // namespace sdyn
