#include "sdyn/emulator/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <thread>

#include "sdyn/error.hpp"
#include "sdyn/meshkit/mesh_io.hpp"

namespace sdyn {

namespace {

constexpr std::size_t kGradChunk = 64;

struct EntryData {
  MaterialField material;
  std::vector<Positions> gt;
  std::vector<Positions> ref;
};

// (entry, frame t, vertex) packed into 64 bits; the sample predicts t + 1.
struct Sample {
  std::uint32_t entry_and_frame;  // entry << 16 | t
  std::uint32_t vertex;
  std::uint32_t entry() const { return entry_and_frame >> 16; }
  std::uint32_t frame() const { return entry_and_frame & 0xFFFF; }
};

EntryData load_entry(const Dataset& d, std::size_t e) {
  const auto dir = d.entry_dir(e);
  EntryData data{read_material_json(dir / "material.json"), read_pdsq(dir / "gt.pdsq").frames,
                 read_pdsq(dir / "ref.pdsq").frames};
  data.material.validate(d.mesh.size());
  if (data.gt.size() != data.ref.size() || data.gt.size() < 4 || data.gt.front().size() != d.mesh.size() ||
      data.ref.front().size() != d.mesh.size()) {
    throw Error(Errc::ShapeMismatch, "dataset entry " + d.entries[e].id + " has inconsistent sequences");
  }
  if (data.gt.size() > 0xFFFF || e > 0xFFFF) {
    throw Error(Errc::InvalidArgument, "dataset too large for the sample index");
  }
  return data;
}

std::vector<Sample> make_samples(const Dataset& d, const std::vector<EntryData>& data,
                                 const std::vector<std::size_t>& entries) {
  std::vector<Sample> out;
  for (std::size_t e : entries) {
    for (std::size_t t = 2; t + 1 < data[e].gt.size(); ++t) {
      for (std::uint32_t i : d.constraints.free_indices()) {
        out.push_back({static_cast<std::uint32_t>(e << 16 | t), i});
      }
    }
  }
  return out;
}

class BatchEvaluator {
 public:
  BatchEvaluator(const TetMesh& mesh, const ConstraintSet& constraints,
                 const std::vector<EntryData>& data)
      : mesh_(mesh), constraints_(constraints), data_(data) {}

  // Loss sum over the samples; when `grads` is set, adds the gradient of
  // loss_sum * grad_scale into it. With noise_std > 0 the dynamic history is
  // perturbed using `noise_seed`.
  double run(const EmulatorModel& model, const Sample* samples, std::size_t count,
             Eigen::VectorXd* grads, double grad_scale, double noise_std = 0.0,
             std::uint64_t noise_seed = 0) const {
    Rng noise_rng(noise_seed);
    // Random walk over u(t-2), u(t-1), u(t) whose last step has std noise_std.
    auto draw_walk = [&](std::array<Vec3, 3>& walk) {
      const double step = noise_std / std::sqrt(3.0);
      Vec3 acc = Vec3::Zero();
      for (int s = 2; s >= 0; --s) {
        acc += step * Vec3(noise_rng.normal(), noise_rng.normal(), noise_rng.normal());
        walk[static_cast<std::size_t>(s)] = acc;
      }
    };
    auto add_walk = [](const std::array<Vec3, 3>& walk, double* slots) {
      for (int s = 0; s < 3; ++s)
        for (int a = 0; a < 3; ++a) slots[3 * s + a] += walk[static_cast<std::size_t>(s)][a];
    };
    const FeatureConfig fc = model.config.features();
    Eigen::MatrixXd xc(kInertiaWidth, static_cast<Eigen::Index>(count));
    Eigen::MatrixXd target(3, static_cast<Eigen::Index>(count));
    std::size_t edges = 0;
    for (std::size_t s = 0; s < count; ++s) edges += mesh_.neighbors(samples[s].vertex).size();
    Eigen::MatrixXd xn(kNeighborWidth, static_cast<Eigen::Index>(edges));
    std::vector<std::size_t> seg{0};
    std::size_t e = 0;
    for (std::size_t s = 0; s < count; ++s) {
      const EntryData& d = data_[samples[s].entry()];
      const std::size_t t = samples[s].frame();
      const std::uint32_t i = samples[s].vertex;
      const FrameWindow w{{&d.gt[t], &d.gt[t - 1], &d.gt[t - 2]}, {&d.ref[t + 1], &d.ref[t], &d.ref[t - 1]}};
      double* center = xc.col(static_cast<Eigen::Index>(s)).data();
      write_center_features(w, d.material, i, fc, center);
      std::array<Vec3, 3> walk{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
      if (noise_std > 0.0) {
        draw_walk(walk);
        add_walk(walk, center + feature::kDynamic);
      }
      for (std::uint32_t j : mesh_.neighbors(i)) {
        double* col = xn.col(static_cast<Eigen::Index>(e++)).data();
        write_neighbor_features(w, d.material, constraints_, i, j, fc, center, col);
        if (noise_std > 0.0 && !constraints_.constrained(j)) {
          std::array<Vec3, 3> wj;
          draw_walk(wj);
          add_walk(wj, col + feature::kNeighborDynamic);
        }
      }
      seg.push_back(e);
      target.col(static_cast<Eigen::Index>(s)) = d.gt[t + 1][i] - (d.gt[t][i] + walk[0]);
    }

    const MlpTape t1 = forward_batch(model.inertia, xc);
    const MlpTape t2 = forward_batch(model.internal, xn);
    const auto& z2 = t2.output();
    Eigen::MatrixXd h(t1.output().rows() + z2.rows(), static_cast<Eigen::Index>(count));
    h.topRows(t1.output().rows()) = t1.output();
    for (std::size_t s = 0; s < count; ++s) {
      h.col(static_cast<Eigen::Index>(s)).tail(z2.rows()) =
          z2.middleCols(static_cast<Eigen::Index>(seg[s]), static_cast<Eigen::Index>(seg[s + 1] - seg[s]))
              .rowwise()
              .sum();
    }
    const MlpTape t3 = forward_batch(model.head, h);
    const Eigen::MatrixXd diff = t3.output() - target;
    const double loss = diff.squaredNorm();
    if (!grads) return loss;

    const auto n1 = static_cast<Eigen::Index>(model.inertia.parameter_count());
    const auto n2 = static_cast<Eigen::Index>(model.internal.parameter_count());
    const auto n3 = static_cast<Eigen::Index>(model.head.parameter_count());
    Eigen::VectorXd g1 = Eigen::VectorXd::Zero(n1), g2 = Eigen::VectorXd::Zero(n2),
                    g3 = Eigen::VectorXd::Zero(n3);
    const Eigen::MatrixXd dh = backward_batch(model.head, t3, (2.0 * grad_scale) * diff, g3);
    Eigen::MatrixXd dz2(z2.rows(), z2.cols());
    for (std::size_t s = 0; s < count; ++s) {
      for (std::size_t k = seg[s]; k < seg[s + 1]; ++k) {
        dz2.col(static_cast<Eigen::Index>(k)) = dh.col(static_cast<Eigen::Index>(s)).tail(z2.rows());
      }
    }
    backward_batch(model.inertia, t1, dh.topRows(t1.output().rows()), g1, false);
    backward_batch(model.internal, t2, dz2, g2, false);
    grads->segment(0, n1) += g1;
    grads->segment(n1, n2) += g2;
    grads->segment(n1 + n2, n3) += g3;
    return loss;
  }

 private:
  const TetMesh& mesh_;
  const ConstraintSet& constraints_;
  const std::vector<EntryData>& data_;
};

// Runs `fn(chunk_index)` for every chunk over up to `threads` workers.
template <typename Fn>
void for_chunks(std::size_t chunks, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, chunks));
  if (threads == 1) {
    for (std::size_t k = 0; k < chunks; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t k = t; k < chunks; k += threads) fn(k);
    });
  }
  for (auto& th : pool) th.join();
}

double mean_loss(const BatchEvaluator& eval, const EmulatorModel& model,
                 const std::vector<Sample>& samples, std::size_t threads) {
  if (samples.empty()) return 0.0;
  const std::size_t chunks = (samples.size() + 255) / 256;
  std::vector<double> sums(chunks, 0.0);
  for_chunks(chunks, threads, [&](std::size_t k) {
    const std::size_t b = k * 256, n = std::min<std::size_t>(256, samples.size() - b);
    sums[k] = eval.run(model, samples.data() + b, n, nullptr, 0.0);
  });
  double total = 0.0;
  for (double s : sums) total += s;
  return total / static_cast<double>(samples.size());
}

void shuffle(std::vector<Sample>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::vector<Sample> stride_subset(const std::vector<Sample>& v, std::size_t cap) {
  if (cap == 0 || cap >= v.size()) return v;
  std::vector<Sample> out;
  out.reserve(cap);
  for (std::size_t k = 0; k < cap; ++k) out.push_back(v[k * v.size() / cap]);
  return out;
}

}  // namespace

void split_sequences(const std::vector<std::size_t>& sequences, double fraction,
                     std::vector<std::size_t>& train, std::vector<std::size_t>& validation) {
  std::vector<std::size_t> sorted = sequences;
  std::sort(sorted.begin(), sorted.end());
  std::size_t held = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(sorted.size())));
  held = std::max<std::size_t>(held, 1);
  if (sorted.size() < 2 || held >= sorted.size()) {
    throw Error(Errc::EmptyDataset, "need at least one training and one validation sequence");
  }
  train.assign(sorted.begin(), sorted.end() - static_cast<std::ptrdiff_t>(held));
  validation.assign(sorted.end() - static_cast<std::ptrdiff_t>(held), sorted.end());
}

double dataset_loss(const EmulatorModel& model, const Dataset& dataset,
                    const std::vector<std::size_t>& entries) {
  std::vector<EntryData> data;
  for (std::size_t e = 0; e < dataset.entries.size(); ++e) {
    data.push_back(std::find(entries.begin(), entries.end(), e) != entries.end() ? load_entry(dataset, e)
                                                                                : EntryData{});
  }
  const BatchEvaluator eval(dataset.mesh, dataset.constraints, data);
  return mean_loss(eval, model, make_samples(dataset, data, entries), 1);
}

TrainResult train_emulator(EmulatorModel model, const Dataset& dataset, const TrainConfig& config) {
  if (config.batch_size == 0 || config.epochs == 0) {
    throw Error(Errc::InvalidArgument, "batch_size and epochs must be positive");
  }
  TrainResult result{model, {}, 0, {}, {}};
  split_sequences(dataset.sequences(), config.validation_fraction, result.train_sequences,
                  result.validation_sequences);
  std::vector<EntryData> data;
  std::vector<std::size_t> train_entries, val_entries;
  for (std::size_t e = 0; e < dataset.entries.size(); ++e) {
    data.push_back(load_entry(dataset, e));
    const std::size_t s = dataset.entries[e].sequence;
    const bool val = std::find(result.validation_sequences.begin(), result.validation_sequences.end(), s) !=
                     result.validation_sequences.end();
    (val ? val_entries : train_entries).push_back(e);
  }
  std::vector<Sample> train = make_samples(dataset, data, train_entries);
  const std::vector<Sample> val = stride_subset(make_samples(dataset, data, val_entries), config.validation_samples);
  if (train.empty() || val.empty()) throw Error(Errc::EmptyDataset, "no trainable samples");

  const BatchEvaluator eval(dataset.mesh, dataset.constraints, data);
  Eigen::VectorXd params = model.flat_parameters();
  AdamState adam(static_cast<std::size_t>(params.size()), config.adam);
  double best_val = std::numeric_limits<double>::infinity();
  const std::size_t per_epoch =
      config.samples_per_epoch == 0 ? train.size() : std::min(config.samples_per_epoch, train.size());

  std::ofstream csv;
  if (!config.loss_csv.empty()) {
    csv.open(config.loss_csv);
    if (!csv) throw Error(Errc::Io, "cannot write " + config.loss_csv.string());
    csv << "epoch,lr,train_loss,validation_loss,seconds,best\n" << std::setprecision(10);
  }
  nlohmann::json meta = {{"train_sequences", result.train_sequences},
                         {"validation_sequences", result.validation_sequences},
                         {"seed", config.seed},
                         {"input_noise", config.input_noise},
                         {"batch_size", config.batch_size}};
  auto save_best = [&] {
    if (!config.checkpoint.empty()) save_emulator(config.checkpoint, result.model, adam, meta);
  };

  std::vector<Eigen::VectorXd> chunk_grads;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(derive_seed(config.seed, epoch));
    shuffle(train, rng);
    const std::uint64_t noise_seed = derive_seed(config.seed ^ 0x6E6F697365ull, epoch);
    EpochLog log;
    log.epoch = epoch;
    log.lr = adam.lr;
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < per_epoch; b += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, per_epoch - b);
      const std::size_t chunks = (n + kGradChunk - 1) / kGradChunk;
      chunk_grads.resize(std::max(chunk_grads.size(), chunks));
      std::vector<double> losses(chunks);
      for_chunks(chunks, config.threads, [&](std::size_t k) {
        chunk_grads[k].setZero(params.size());
        const std::size_t off = k * kGradChunk;
        losses[k] = eval.run(model, train.data() + b + off, std::min(kGradChunk, n - off),
                             &chunk_grads[k], 1.0 / static_cast<double>(n), config.input_noise,
                             derive_seed(noise_seed, b + off));
      });
      double batch_loss = 0.0;
      for (std::size_t k = 0; k < chunks; ++k) batch_loss += losses[k];
      if (!std::isfinite(batch_loss)) {
        save_best();
        throw Error(Errc::NonFiniteLoss, "training loss became non-finite", epoch);
      }
      loss_sum += batch_loss;
      for (std::size_t k = 1; k < chunks; ++k) chunk_grads[0] += chunk_grads[k];
      adam_step(params, chunk_grads[0], adam);
      model.set_flat_parameters(params);
    }
    log.train_loss = loss_sum / static_cast<double>(per_epoch);
    log.validation_loss = mean_loss(eval, model, val, config.threads);
    if (!std::isfinite(log.validation_loss)) {
      save_best();
      throw Error(Errc::NonFiniteLoss, "validation loss became non-finite", epoch);
    }
    adam.end_epoch();
    if (log.validation_loss < best_val) {
      best_val = log.validation_loss;
      result.model = model;
      result.best_epoch = epoch;
      log.best = true;
      meta["best_epoch"] = epoch;
      meta["validation_loss"] = best_val;
      save_best();
    }
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(log);
    if (csv) {
      csv << log.epoch << ',' << log.lr << ',' << log.train_loss << ',' << log.validation_loss << ','
          << log.seconds << ',' << (log.best ? 1 : 0) << '\n'
          << std::flush;
    }
    if (config.on_epoch) config.on_epoch(log);
  }
  return result;
}

}  // namespace sdyn
