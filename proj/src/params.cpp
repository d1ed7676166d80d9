#include "monoattn/params.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace monoattn::ad {

Parameter& ParameterStore::create(const std::string& name, Matrix init) {
  auto [it, inserted] = entries_.try_emplace(name);
  if (!inserted)
    throw Error("ParameterStore: duplicate parameter '" + name + "'");
  it->second.name = name;
  it->second.value = std::move(init);
  return it->second;
}

Parameter& ParameterStore::createUniform(const std::string& name,
                                         Eigen::Index rows, Eigen::Index cols,
                                         double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = rng.uniform(-scale, scale);
  return create(name, std::move(m));
}

Parameter& ParameterStore::createZeros(const std::string& name,
                                       Eigen::Index rows, Eigen::Index cols) {
  return create(name, Matrix::Zero(rows, cols));
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end())
    throw Error("ParameterStore: unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end())
    throw Error("ParameterStore: unknown parameter '" + name + "'");
  return it->second;
}

bool ParameterStore::contains(const std::string& name) const {
  return entries_.count(name) > 0;
}

std::size_t ParameterStore::coordCount() const {
  std::size_t n = 0;
  for (const auto& [name, p] : entries_) n += p.value.size();
  return n;
}

void ParameterStore::zeroGrad() {
  for (auto& [name, p] : entries_) p.zeroGrad();
}

void ParameterStore::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write checkpoint: " + file.string());
  out << "monoattn-ckpt v1\n";
  char buf[40];
  for (const auto& [name, p] : entries_) {
    out << name << '\t' << p.value.rows() << ' ' << p.value.cols() << '\t';
    // row-major value order
    bool first = true;
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", p.value(r, c));
        if (!first) out << ' ';
        out << buf;
        first = false;
      }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + file.string());
}

void ParameterStore::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read checkpoint: " + file.string());
  std::string header;
  std::getline(in, header);
  if (header != "monoattn-ckpt v1")
    throw IoError("bad checkpoint header in " + file.string() + ": '" +
                  header + "'");
  std::string line;
  int lineno = 1;
  std::map<std::string, Matrix> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos
                                                : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos)
      throw IoError("malformed checkpoint line " + std::to_string(lineno) +
                    " in " + file.string());
    const std::string name = line.substr(0, tab1);
    std::istringstream dims(line.substr(tab1 + 1, tab2 - tab1 - 1));
    Eigen::Index rows = 0, cols = 0;
    if (!(dims >> rows >> cols) || rows < 0 || cols < 0)
      throw IoError("malformed dims on checkpoint line " +
                    std::to_string(lineno) + " in " + file.string());
    Matrix m(rows, cols);
    std::istringstream vals(line.substr(tab2 + 1));
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        if (!(vals >> m(r, c)))
          throw IoError("missing values on checkpoint line " +
                        std::to_string(lineno) + " in " + file.string());
    seen.emplace(name, std::move(m));
  }
  if (entries_.empty()) {
    for (auto& [name, m] : seen) create(name, std::move(m));
    return;
  }
  for (auto& [name, m] : seen) {
    Parameter& p = get(name);
    if (p.value.rows() != m.rows() || p.value.cols() != m.cols())
      throw IoError("checkpoint shape mismatch for '" + name + "'");
    p.value = std::move(m);
  }
}

ParameterStore ParameterStore::loaded(const std::filesystem::path& file) {
  ParameterStore s;
  s.load(file);
  return s;
}

}  // namespace monoattn::ad
