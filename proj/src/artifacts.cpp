#include "monoattn/artifacts.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "monoattn/errors.hpp"

namespace monoattn {

namespace fs = std::filesystem;

std::string formatG9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string formatG17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void writeAlignmentCsv(const Eigen::MatrixXd& alignment,
                       const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  for (Eigen::Index t = 0; t < alignment.rows(); ++t) {
    for (Eigen::Index j = 0; j < alignment.cols(); ++j)
      out << (j ? "," : "") << formatG9(alignment(t, j));
    out << '\n';
  }
}

void writeAlignmentPgm(const Eigen::MatrixXd& alignment,
                       const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << "P2\n" << alignment.cols() << ' ' << alignment.rows() << "\n255\n";
  for (Eigen::Index t = 0; t < alignment.rows(); ++t) {
    for (Eigen::Index j = 0; j < alignment.cols(); ++j) {
      long pixel = std::lround(255.0 * alignment(t, j));
      pixel = std::max(0L, std::min(255L, pixel));
      out << (j ? " " : "") << pixel;
    }
    out << '\n';
  }
}

void writeFramesCsv(const Eigen::MatrixXd& frames, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    for (Eigen::Index j = 0; j < frames.cols(); ++j)
      out << (j ? "," : "") << formatG9(frames(t, j));
    out << '\n';
  }
}

void writeLines(const std::vector<std::string>& lines, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  for (const auto& l : lines) out << l << '\n';
}

std::string readFile(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path makeRunDir(const fs::path& parent, const std::string& command) {
  fs::create_directories(parent);
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  for (int n = 0;; ++n) {
    std::ostringstream name;
    name << command << '-' << stamp;
    if (n > 0) name << '-' << n;
    const fs::path dir = parent / name.str();
    if (!fs::exists(dir)) {
      fs::create_directories(dir);
      return dir;
    }
  }
}

fs::path claimOutDir(const fs::path& out) {
  if (fs::exists(out))
    throw IoError("refusing to overwrite existing run directory: " +
                  out.string());
  fs::create_directories(out);
  return out;
}

}  // namespace monoattn
