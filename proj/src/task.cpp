#include "monoattn/task.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "monoattn/errors.hpp"

namespace monoattn {

Eigen::MatrixXd patternTable(int vocab, int frame_width,
                             std::uint64_t pattern_seed) {
  if (frame_width < 2)
    throw ConfigError("frame_width must be at least 2 (pattern + progress)");
  Rng rng(pattern_seed);
  Eigen::MatrixXd table(vocab, frame_width - 1);
  for (int r = 0; r < vocab; ++r)
    for (int c = 0; c < frame_width - 1; ++c) table(r, c) = rng.normal();
  return table;
}

Eigen::MatrixXd renderFrames(const std::vector<int>& tokens,
                             const std::vector<int>& durations,
                             const Eigen::MatrixXd& patterns) {
  if (tokens.size() != durations.size())
    throw Error("renderFrames: tokens and durations differ in length");
  int total = 0;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] <= 0)
      throw Error("renderFrames: zero duration at token position " +
                  std::to_string(i));
    if (tokens[i] < 0 || tokens[i] >= patterns.rows())
      throw Error("renderFrames: token id " + std::to_string(tokens[i]) +
                  " outside pattern table");
    total += durations[i];
  }
  const Eigen::Index width = patterns.cols() + 1;
  Eigen::MatrixXd frames(total, width);
  int at = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (int j = 0; j < durations[i]; ++j, ++at) {
      frames.row(at).head(patterns.cols()) = patterns.row(tokens[i]);
      frames(at, width - 1) =
          static_cast<double>(j) / static_cast<double>(durations[i]);
    }
  }
  return frames;
}

std::vector<int> goldAlignment(const std::vector<int>& durations) {
  std::vector<int> gold;
  for (std::size_t i = 0; i < durations.size(); ++i)
    gold.insert(gold.end(), durations[i], static_cast<int>(i));
  return gold;
}

TaskSample genSample(Rng& rng, const TaskConfig& config,
                     const Eigen::MatrixXd& patterns) {
  TaskSample s;
  const int len = rng.uniformInt(config.len_min, config.len_max);
  s.tokens.reserve(len);
  s.durations.reserve(len);
  for (int i = 0; i < len; ++i)
    s.tokens.push_back(rng.uniformInt(0, config.vocab - 1));
  for (int i = 0; i < len; ++i)
    s.durations.push_back(rng.uniformInt(config.dur_min, config.dur_max));
  s.frames = renderFrames(s.tokens, s.durations, patterns);
  s.gold = goldAlignment(s.durations);
  return s;
}

Dataset makeDataset(const TaskConfig& config) {
  const Eigen::MatrixXd patterns =
      patternTable(config.vocab, config.frame_width, config.pattern_seed);
  Rng rng(config.split_seed);
  Dataset d;
  d.train.reserve(config.train_size);
  d.test.reserve(config.test_size);
  for (int i = 0; i < config.train_size; ++i)
    d.train.push_back(genSample(rng, config, patterns));
  for (int i = 0; i < config.test_size; ++i)
    d.test.push_back(genSample(rng, config, patterns));
  return d;
}

void writeDataset(const std::vector<TaskSample>& samples,
                  const std::filesystem::path& file,
                  const TaskConfig& config) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write dataset: " + file.string());
  out << "monoattn-data v1 pattern_seed=" << config.pattern_seed
      << " frame_width=" << config.frame_width << "\n";
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i)
      out << (i ? " " : "") << s.tokens[i];
    out << " |";
    for (int d : s.durations) out << ' ' << d;
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + file.string());
}

std::vector<TaskSample> readDataset(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read dataset: " + file.string());
  std::string header;
  std::getline(in, header);
  std::uint64_t pattern_seed = 0;
  int frame_width = 0;
  {
    std::istringstream hs(header);
    std::string magic, version, kv;
    hs >> magic >> version;
    if (magic != "monoattn-data" || version != "v1")
      throw IoError("bad dataset header in " + file.string() + ": '" +
                    header + "'");
    bool saw_seed = false, saw_width = false;
    while (hs >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw IoError("bad dataset header field '" + kv + "'");
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      if (key == "pattern_seed") {
        pattern_seed = std::stoull(val);
        saw_seed = true;
      } else if (key == "frame_width") {
        frame_width = std::stoi(val);
        saw_width = true;
      } else {
        throw IoError("unknown dataset header field '" + key + "'");
      }
    }
    if (!saw_seed || !saw_width)
      throw IoError("dataset header missing pattern_seed or frame_width");
  }

  struct Raw {
    std::vector<int> tokens, durations;
  };
  std::vector<Raw> raws;
  int max_token = -1;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto bar = line.find('|');
    if (bar == std::string::npos)
      throw IoError("dataset line " + std::to_string(lineno) +
                    ": missing '|' separator");
    Raw raw;
    {
      std::istringstream ts(line.substr(0, bar));
      int v;
      while (ts >> v) raw.tokens.push_back(v);
      if (!ts.eof())
        throw IoError("dataset line " + std::to_string(lineno) +
                      ": unparseable token id");
    }
    {
      std::istringstream ds(line.substr(bar + 1));
      int v;
      while (ds >> v) raw.durations.push_back(v);
      if (!ds.eof())
        throw IoError("dataset line " + std::to_string(lineno) +
                      ": unparseable duration");
    }
    if (raw.tokens.empty() || raw.tokens.size() != raw.durations.size())
      throw IoError("dataset line " + std::to_string(lineno) +
                    ": token and duration counts differ");
    for (int v : raw.tokens) {
      if (v < 0)
        throw IoError("dataset line " + std::to_string(lineno) +
                      ": negative token id");
      max_token = std::max(max_token, v);
    }
    for (int d : raw.durations)
      if (d <= 0)
        throw IoError("dataset line " + std::to_string(lineno) +
                      ": non-positive duration");
    raws.push_back(std::move(raw));
  }

  // Row-sequential pattern drawing makes the table for max_token+1 entries a
  // prefix of any larger table, so re-rendering is exact regardless of the
  // original vocab size.
  const Eigen::MatrixXd patterns =
      patternTable(max_token + 1, frame_width, pattern_seed);
  std::vector<TaskSample> samples;
  samples.reserve(raws.size());
  for (auto& raw : raws) {
    TaskSample s;
    s.tokens = std::move(raw.tokens);
    s.durations = std::move(raw.durations);
    s.frames = renderFrames(s.tokens, s.durations, patterns);
    s.gold = goldAlignment(s.durations);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace monoattn
