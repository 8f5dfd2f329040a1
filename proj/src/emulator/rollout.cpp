#include "sdyn/emulator/rollout.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "sdyn/error.hpp"

namespace sdyn {

namespace {

constexpr std::size_t kChunk = 256;  // centers per batched evaluation

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

void check_sizes(const TetMesh& mesh, const MaterialField& material,
                 const ConstraintSet& constraints) {
  material.validate(mesh.size());
  if (constraints.size() != mesh.size()) {
    throw Error(Errc::LengthMismatch, "constraint flags do not match the mesh");
  }
}

}  // namespace

struct FramePredictor::Impl {
  const EmulatorModel& model;
  const TetMesh& mesh;
  const MaterialField& material;
  const ConstraintSet& constraints;
  InferencePrecision precision;
  std::size_t threads;
  FeatureConfig features;
  MlpF32 inertia32, internal32, head32;
  std::vector<std::uint32_t> centers;

  // Writes predicted deltas for centers[begin, end) into `out` columns.
  template <typename S>
  void gather(const FrameWindow& w, std::size_t begin, std::size_t end, Mat<S>& xc,
              Mat<S>& xn, std::vector<std::size_t>& seg) const {
    std::size_t edges = 0;
    for (std::size_t c = begin; c < end; ++c) edges += mesh.neighbors(centers[c]).size();
    xc.resize(kInertiaWidth, static_cast<Eigen::Index>(end - begin));
    xn.resize(kNeighborWidth, static_cast<Eigen::Index>(edges));
    seg.assign(1, 0);
    std::size_t e = 0;
    for (std::size_t c = begin; c < end; ++c) {
      const std::uint32_t i = centers[c];
      S* center = xc.col(static_cast<Eigen::Index>(c - begin)).data();
      write_center_features(w, material, i, features, center);
      for (std::uint32_t j : mesh.neighbors(i)) {
        write_neighbor_features(w, material, constraints, i, j, features, center,
                                xn.col(static_cast<Eigen::Index>(e++)).data());
      }
      seg.push_back(e);
    }
  }

  template <typename S>
  static Mat<S> segment_sum(const Mat<S>& z, const std::vector<std::size_t>& seg) {
    Mat<S> sum(z.rows(), static_cast<Eigen::Index>(seg.size() - 1));
    for (std::size_t c = 0; c + 1 < seg.size(); ++c) {
      sum.col(static_cast<Eigen::Index>(c)) =
          z.middleCols(static_cast<Eigen::Index>(seg[c]), static_cast<Eigen::Index>(seg[c + 1] - seg[c]))
              .rowwise()
              .sum();
    }
    return sum;
  }

  void run_chunk(const FrameWindow& w, std::size_t begin, std::size_t end, Positions& next) const {
    std::vector<std::size_t> seg;
    Eigen::MatrixXd delta;
    if (precision == InferencePrecision::F64) {
      Eigen::MatrixXd xc, xn;
      gather(w, begin, end, xc, xn, seg);
      const Eigen::MatrixXd z1 = forward_batch(model.inertia, xc).output();
      const Eigen::MatrixXd z2 = segment_sum<double>(forward_batch(model.internal, xn).output(), seg);
      Eigen::MatrixXd h(z1.rows() + z2.rows(), z1.cols());
      h << z1, z2;
      delta = forward_batch(model.head, h).output();
    } else {
      Eigen::MatrixXf xc, xn, z1, z2, out, scratch[2];
      gather(w, begin, end, xc, xn, seg);
      inertia32.forward(xc, z1, scratch);
      internal32.forward(xn, z2, scratch);
      Eigen::MatrixXf h(z1.rows() + z2.rows(), z1.cols());
      h << z1, segment_sum<float>(z2, seg);
      head32.forward(h, out, scratch);
      delta = out.cast<double>();
    }
    for (std::size_t c = begin; c < end; ++c) {
      const std::uint32_t i = centers[c];
      next[i] = (*w.dynamic[0])[i] + delta.col(static_cast<Eigen::Index>(c - begin));
    }
  }
};

FramePredictor::FramePredictor(const EmulatorModel& model, const TetMesh& mesh,
                               const MaterialField& material, const ConstraintSet& constraints,
                               InferencePrecision precision, std::size_t threads)
    : impl_(new Impl{model, mesh, material, constraints, precision, std::max<std::size_t>(1, threads),
                     model.config.features(), {}, {}, {}, constraints.free_indices()}) {
  check_sizes(mesh, material, constraints);
  if (precision == InferencePrecision::F32) {
    impl_->inertia32 = MlpF32(model.inertia);
    impl_->internal32 = MlpF32(model.internal);
    impl_->head32 = MlpF32(model.head);
  }
}

FramePredictor::~FramePredictor() = default;

Positions FramePredictor::predict(const FrameWindow& w) const {
  const Impl& im = *impl_;
  Positions next(im.mesh.size());
  for (std::uint32_t i : im.constraints.constrained_indices()) next[i] = (*w.reference[0])[i];
  const std::size_t chunks = (im.centers.size() + kChunk - 1) / kChunk;
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t k = first; k < chunks; k += stride) {
      im.run_chunk(w, k * kChunk, std::min(im.centers.size(), (k + 1) * kChunk), next);
    }
  };
  const std::size_t threads = std::min(im.threads, chunks);
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work, t, threads);
    work(0, threads);
    for (auto& t : pool) t.join();
  }
  return next;
}

namespace {

bool all_finite(const Positions& p) {
  for (const Vec3& v : p) {
    if (!v.allFinite()) return false;
  }
  return true;
}

}  // namespace

RolloutResult rollout(const EmulatorModel& model, const TetMesh& mesh,
                      const MaterialField& material, const ConstraintSet& constraints,
                      const ReferenceMotion& ref, const std::vector<Positions>& init,
                      const RolloutOptions& options) {
  if (ref.frame_count() < 4) throw Error(Errc::InvalidArgument, "rollout needs at least 4 reference frames");
  if (init.size() != 3) throw Error(Errc::InvalidArgument, "rollout needs exactly 3 initial frames");
  if (ref.vertex_count() != mesh.size()) throw Error(Errc::LengthMismatch, "reference does not match the mesh");
  for (const Positions& p : init) {
    if (p.size() != mesh.size()) throw Error(Errc::LengthMismatch, "initial frame does not match the mesh");
  }
  const FramePredictor predictor(model, mesh, material, constraints, options.precision, options.threads);
  RolloutResult result;
  result.sequence.dt = ref.dt();
  auto& frames = result.sequence.frames;
  frames = init;
  for (std::size_t f = 0; f < 3; ++f) {
    for (std::uint32_t i : constraints.constrained_indices()) frames[f][i] = ref.frame(f)[i];
  }
  frames.reserve(ref.frame_count());
  for (std::size_t t = 2; t + 1 < ref.frame_count(); ++t) {
    const FrameWindow w{{&frames[t], &frames[t - 1], &frames[t - 2]},
                        {&ref.frame(t + 1), &ref.frame(t), &ref.frame(t - 1)}};
    const auto start = std::chrono::steady_clock::now();
    Positions next = predictor.predict(w);
    result.frame_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (!all_finite(next)) {
      if (options.halt_on_nonfinite) {
        throw Error(Errc::NonFinitePrediction, "emulator produced a non-finite position", t + 1);
      }
      result.exploded_at = t + 1;
      const Vec3 nan = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
      while (frames.size() < ref.frame_count()) frames.emplace_back(mesh.size(), nan);
      break;
    }
    frames.push_back(std::move(next));
  }
  return result;
}

SimSequence teacher_forced_sequence(const EmulatorModel& model, const TetMesh& mesh,
                                    const MaterialField& material,
                                    const ConstraintSet& constraints, const ReferenceMotion& ref,
                                    const SimSequence& gt, const RolloutOptions& options) {
  if (gt.frame_count() != ref.frame_count() || gt.vertex_count() != ref.vertex_count()) {
    throw Error(Errc::ShapeMismatch, "ground truth is not aligned with the reference");
  }
  if (ref.frame_count() < 4) throw Error(Errc::InvalidArgument, "need at least 4 frames");
  const FramePredictor predictor(model, mesh, material, constraints, options.precision, options.threads);
  SimSequence out{gt.dt, {gt.frames[0], gt.frames[1], gt.frames[2]}};
  for (std::size_t t = 2; t + 1 < ref.frame_count(); ++t) {
    const FrameWindow w{{&gt.frames[t], &gt.frames[t - 1], &gt.frames[t - 2]},
                        {&ref.frame(t + 1), &ref.frame(t), &ref.frame(t - 1)}};
    out.frames.push_back(predictor.predict(w));
  }
  return out;
}

}  // namespace sdyn
