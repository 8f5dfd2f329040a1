#include "sdyn/integrators/reference.hpp"

#include "sdyn/error.hpp"

namespace sdyn {

ReferenceMotion::ReferenceMotion(std::vector<Positions> frames, double dt)
    : frames_(std::move(frames)), dt_(dt) {
  if (frames_.size() < 3) throw Error(Errc::InvalidArgument, "reference needs at least 3 frames");
  if (!(dt_ > 0.0)) throw Error(Errc::InvalidArgument, "dt must be positive");
  for (std::size_t t = 1; t < frames_.size(); ++t) {
    if (frames_[t].size() != frames_.front().size()) {
      throw Error(Errc::LengthMismatch, "reference frames differ in length", t);
    }
  }
}

Vec3 ReferenceMotion::velocity(std::size_t t, std::size_t i) const {
  const std::size_t last = frames_.size() - 1;
  if (t == 0) return (frames_[1][i] - frames_[0][i]) / dt_;
  if (t == last) return (frames_[last][i] - frames_[last - 1][i]) / dt_;
  return (frames_[t + 1][i] - frames_[t - 1][i]) / (2.0 * dt_);
}

Vec3 ReferenceMotion::acceleration(std::size_t t, std::size_t i) const {
  const std::size_t last = frames_.size() - 1;
  const std::size_t c = t == 0 ? 1 : (t == last ? last - 1 : t);
  return (frames_[c + 1][i] - 2.0 * frames_[c][i] + frames_[c - 1][i]) / (dt_ * dt_);
}

}  // namespace sdyn
