#include "monoattn/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "monoattn/errors.hpp"

namespace monoattn {

const std::vector<ConfigKey>& configKeys() {
  static const std::vector<ConfigKey> keys = {
      // model
      {"mechanism", "fa-ta", "attention mechanism: baseline | fa | fa-ta"},
      {"stabilizer", "none", "alignment stabilizer: none | window | conv"},
      {"reduction", "2", "output frames per decoder step (r)"},
      {"window", "2", "attention window half-width (w)"},
      {"conv_kernels", "10", "convolutional feature kernel count (k)"},
      {"conv_kernel_len", "5", "convolutional kernel length (l, odd)"},
      {"embed_width", "16", "token embedding width"},
      {"enc_width", "16", "encoder hidden width per direction"},
      {"dec_width", "32", "decoder hidden width"},
      {"attn_width", "32", "attention score hidden width"},
      {"agent_hidden", "32", "transition agent hidden width"},
      {"feedback", "emitted",
       "alignment fed back to stabilizers: emitted | content"},
      {"progress_to_cell", "0",
       "feed the progress channel of the previous frame to the decoder cell "
       "(the transition agent always sees the full frame)"},
      // task
      {"vocab", "8", "token vocabulary size"},
      {"dur_min", "2", "minimum token duration (frames)"},
      {"dur_max", "5", "maximum token duration (frames)"},
      {"len_min", "5", "minimum token sequence length"},
      {"len_max", "12", "maximum token sequence length"},
      {"frame_width", "9", "frame width (pattern channels + progress)"},
      {"pattern_seed", "7", "seed of the per-token pattern table"},
      {"split_seed", "11", "seed of the dataset sample stream"},
      {"train_size", "2000", "training sample count"},
      {"test_size", "200", "validation/test sample count"},
      // training & evaluation
      {"epochs", "30", "training epochs"},
      {"lr", "0.001", "Adam learning rate"},
      {"seed", "1", "model init / shuffle seed (env MONOATTN_SEED fallback)"},
      {"stable_fail_rate", "0.05",
       "validation failure rate defining epochs-to-stable"},
      {"feedback_dropout", "0",
       "probability of zeroing the teacher-forced frame during training"},
      {"feedback_noise", "0",
       "Gaussian jitter stddev on the teacher-forced frame during training"},
      {"score_decay", "0",
       "L2 decay rate on the attention score vector (bounds energy scale)"},
      {"max_steps_factor", "4", "free-run step budget per gold step"},
      {"diffuse_weight", "0.1", "step is diffuse when max weight < this"},
      {"diffuse_frac", "0.2",
       "diffuse flag when more than this fraction of steps is diffuse"},
      {"stuck_factor", "4", "stuck after factor * ceil(dur_max/r) steps"},
  };
  return keys;
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool knownKey(const std::string& key) {
  for (const auto& k : configKeys())
    if (k.name == key) return true;
  return false;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : configKeys()) values_[k.name] = k.default_value;
  if (const char* env = std::getenv("MONOATTN_SEED")) values_["seed"] = env;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!knownKey(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

RunConfig RunConfig::resolve(
    const std::optional<std::filesystem::path>& file,
    const std::vector<std::string>& overrides) {
  RunConfig config;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw IoError("cannot read config file: " + file->string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": expected 'key = value', got '" + line + "'");
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + kv + "' is not key=value");
    config.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  return config;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

int RunConfig::getInt(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v +
                      "' as integer");
  }
}

double RunConfig::getDouble(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v +
                      "' as number");
  }
}

std::uint64_t RunConfig::getU64(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const std::uint64_t out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v +
                      "' as unsigned integer");
  }
}

ModelConfig RunConfig::modelConfig() const {
  ModelConfig m;
  m.vocab = getInt("vocab");
  m.embed_width = getInt("embed_width");
  m.enc_width = getInt("enc_width");
  m.dec_width = getInt("dec_width");
  m.attn_width = getInt("attn_width");
  m.frame_width = getInt("frame_width");
  m.reduction = getInt("reduction");
  m.mechanism = attn::mechanismFromString(get("mechanism"));
  m.stabilizer = attn::stabilizerFromString(get("stabilizer"));
  m.window_halfwidth = getInt("window");
  m.conv_kernels = getInt("conv_kernels");
  m.conv_kernel_len = getInt("conv_kernel_len");
  m.agent_hidden = getInt("agent_hidden");
  m.feedback = attn::feedbackFromString(get("feedback"));
  m.progress_to_cell = getInt("progress_to_cell") != 0;
  m.seed = getU64("seed");
  return m;
}

TaskConfig RunConfig::taskConfig() const {
  TaskConfig t;
  t.vocab = getInt("vocab");
  t.dur_min = getInt("dur_min");
  t.dur_max = getInt("dur_max");
  t.len_min = getInt("len_min");
  t.len_max = getInt("len_max");
  t.frame_width = getInt("frame_width");
  t.pattern_seed = getU64("pattern_seed");
  t.split_seed = getU64("split_seed");
  t.train_size = getInt("train_size");
  t.test_size = getInt("test_size");
  if (t.dur_min < 1 || t.dur_max < t.dur_min)
    throw ConfigError("duration range [" + get("dur_min") + ", " +
                      get("dur_max") + "] is empty or invalid");
  if (t.len_min < 1 || t.len_max < t.len_min)
    throw ConfigError("length range [" + get("len_min") + ", " +
                      get("len_max") + "] is empty or invalid");
  return t;
}

TrainOptions RunConfig::trainOptions() const {
  TrainOptions o;
  o.epochs = getInt("epochs");
  o.lr = getDouble("lr");
  o.stable_fail_rate = getDouble("stable_fail_rate");
  o.max_steps_factor = getInt("max_steps_factor");
  o.feedback_dropout = getDouble("feedback_dropout");
  o.feedback_noise = getDouble("feedback_noise");
  o.score_decay = getDouble("score_decay");
  o.diag.diffuse_weight = getDouble("diffuse_weight");
  o.diag.diffuse_frac = getDouble("diffuse_frac");
  o.diag.stuck_factor = getInt("stuck_factor");
  return o;
}

std::vector<std::string> RunConfig::lines() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : values_) out.push_back(key + " = " + value);
  return out;
}

}  // namespace monoattn
