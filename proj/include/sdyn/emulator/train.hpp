#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "sdyn/datagen/dataset.hpp"
#include "sdyn/emulator/model.hpp"
#include "sdyn/neuralnet/adam.hpp"

namespace sdyn {

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;       // mean squared delta error over the epoch
  double validation_loss = 0.0;  // same metric on held-out sequences
  double seconds = 0.0;
  bool best = false;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 256;
  AdamConfig adam;
  double validation_fraction = 0.25;  // share of whole sequences held out
  std::size_t samples_per_epoch = 0;    // 0 uses every training sample
  std::size_t validation_samples = 0;   // 0 uses every validation sample
  std::uint64_t seed = 1;
  // Standard deviation of random-walk noise added to the free vertices'
  // dynamic history in training samples; the target is corrected so the
  // model learns to return to the ground-truth trajectory. 0 is plain
  // teacher forcing. Validation is always noise free.
  double input_noise = 0.0;
  std::size_t threads = 1;
  std::filesystem::path checkpoint;  // best-validation model, when set
  std::filesystem::path loss_csv;    // per-epoch log, when set
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  EmulatorModel model;  // best-validation parameters
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  std::vector<std::size_t> train_sequences;
  std::vector<std::size_t> validation_sequences;
};

// Splits whole sequences: the last ceil(fraction * S) sequence ids (at least
// one) validate, the rest train. Throws Error(EmptyDataset) unless both sides
// are non-empty.
void split_sequences(const std::vector<std::size_t>& sequences, double validation_fraction,
                     std::vector<std::size_t>& train, std::vector<std::size_t>& validation);

// Teacher-forced training on per-frame displacement deltas. Gradients are
// reduced over fixed 64-sample chunks in order, so results do not depend on
// the thread count. Throws Error(EmptyDataset), and Error(NonFiniteLoss)
// after writing the best checkpoint so far.
TrainResult train_emulator(EmulatorModel model, const Dataset& dataset, const TrainConfig& config);

// Mean squared delta error of `model` over every free vertex and frame of the
// given dataset entries (teacher forced, double precision).
double dataset_loss(const EmulatorModel& model, const Dataset& dataset,
                    const std::vector<std::size_t>& entries);

}  // namespace sdyn
