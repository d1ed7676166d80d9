#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

#include "monoattn/rng.hpp"

namespace monoattn {

// Synthetic monotonic expansion task: each token expands into a run of
// frames carrying the token's pattern vector plus a progress channel, the
// desk-scale analog of phone-to-acoustic-frame decompression.
struct TaskConfig {
  int vocab = 8;
  int dur_min = 2;
  int dur_max = 5;
  int len_min = 5;
  int len_max = 12;
  int frame_width = 9;  // pattern width + 1 progress channel
  std::uint64_t pattern_seed = 7;
  int train_size = 2000;
  int test_size = 200;
  std::uint64_t split_seed = 11;
};

struct TaskSample {
  std::vector<int> tokens;
  std::vector<int> durations;
  Eigen::MatrixXd frames;  // (sum durations) x frame_width
  std::vector<int> gold;   // frame index -> token index (0-based, staircase)
};

// One pattern vector per vocab entry, standard normal, drawn row by row so a
// table for a smaller vocab is a prefix of a larger one's.
Eigen::MatrixXd patternTable(int vocab, int frame_width,
                             std::uint64_t pattern_seed);

Eigen::MatrixXd renderFrames(const std::vector<int>& tokens,
                             const std::vector<int>& durations,
                             const Eigen::MatrixXd& patterns);

std::vector<int> goldAlignment(const std::vector<int>& durations);

TaskSample genSample(Rng& rng, const TaskConfig& config,
                     const Eigen::MatrixXd& patterns);

struct Dataset {
  std::vector<TaskSample> train;
  std::vector<TaskSample> test;
};

// train_size + test_size samples from one stream seeded by split_seed; the
// first train_size go to the training split.
Dataset makeDataset(const TaskConfig& config);

// `monoattn-data v1` text format: tokens, a '|' separator, durations.
// Frames are not stored; they re-render from the pattern seed in the header.
void writeDataset(const std::vector<TaskSample>& samples,
                  const std::filesystem::path& file, const TaskConfig& config);
std::vector<TaskSample> readDataset(const std::filesystem::path& file);

}  // namespace monoattn
