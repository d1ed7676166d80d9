#include "monoattn/tape.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace monoattn::ad {

namespace {

std::string shapeStr(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

[[noreturn]] void shapeFail(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": operand shapes " + shapeStr(a) +
                   " and " + shapeStr(b) + " do not conform");
}

Tape& sameTape(const char* op, Var a, Var b) {
  if (!a.valid() || !b.valid())
    throw Error(std::string(op) + ": null operand");
  if (a.tape() != b.tape())
    throw Error(std::string(op) + ": operands from different tapes");
  return *a.tape();
}

void requireVector(const char* op, Var v) {
  if (v.cols() != 1)
    throw ShapeError(std::string(op) + ": expected column vector, got " +
                     shapeStr(v.value()));
}

void requireScalar(const char* op, Var v) {
  if (v.rows() != 1 || v.cols() != 1)
    throw ShapeError(std::string(op) + ": expected scalar, got " +
                     shapeStr(v.value()));
}

}  // namespace

const Matrix& Var::value() const { return tape_->valueOf(id_); }
const Matrix& Var::grad() const { return const_cast<Tape*>(tape_)->gradOf(id_); }
double Var::scalarValue() const { return value()(0, 0); }

Var Tape::emplace(Matrix value) {
  Node n;
  n.value = std::move(value);
  if (track_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::setBackprop(Var v, std::function<void(Tape&)> fn) {
  if (track_) nodes_[v.id()].backprop = std::move(fn);
}

Var Tape::constant(Matrix value) { return emplace(std::move(value)); }

Var Tape::scalar(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return emplace(std::move(m));
}

Var Tape::zeros(Eigen::Index rows, Eigen::Index cols) {
  return emplace(Matrix::Zero(rows, cols));
}

Var Tape::oneHot(Eigen::Index size, Eigen::Index hot) {
  Matrix m = Matrix::Zero(size, 1);
  m(hot, 0) = 1.0;
  return emplace(std::move(m));
}

Var Tape::use(Parameter& p) {
  Var v = emplace(p.value);
  if (track_) nodes_[v.id()].bound = &p;
  return v;
}

void Tape::backward(Var loss) {
  if (!track_) throw Error("backward: tape was created without tracking");
  if (!loss.valid() || loss.tape() != this)
    throw Error("backward: loss is not on this tape");
  if (loss.rows() != 1 || loss.cols() != 1)
    throw ShapeError("backward: loss must be scalar, got " +
                     shapeStr(loss.value()));
  nodes_[loss.id()].grad(0, 0) += 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    if (nodes_[id].backprop) nodes_[id].backprop(*this);
  }
  for (auto& n : nodes_) {
    if (!n.bound) continue;
    Parameter& p = *n.bound;
    if (!p.hasGrad()) p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    p.grad += n.grad;
  }
}

void Tape::zeroNodeGrads() {
  for (auto& n : nodes_) n.grad.setZero();
}

// ---- ops ----------------------------------------------------------------

Var operator+(Var a, Var b) {
  Tape& t = sameTape("add", a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shapeFail("add", a.value(), b.value());
  Var out = t.emplace(a.value() + b.value());
  t.setBackprop(out, [ai = a.id(), bi = b.id(), oi = out.id()](Tape& t) {
    t.gradOf(ai) += t.gradOf(oi);
    t.gradOf(bi) += t.gradOf(oi);
  });
  return out;
}

Var operator-(Var a, Var b) {
  Tape& t = sameTape("sub", a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shapeFail("sub", a.value(), b.value());
  Var out = t.emplace(a.value() - b.value());
  t.setBackprop(out, [ai = a.id(), bi = b.id(), oi = out.id()](Tape& t) {
    t.gradOf(ai) += t.gradOf(oi);
    t.gradOf(bi) -= t.gradOf(oi);
  });
  return out;
}

Var operator*(Var a, Var b) {
  Tape& t = sameTape("matmul", a, b);
  if (a.cols() != b.rows()) shapeFail("matmul", a.value(), b.value());
  Var out = t.emplace(a.value() * b.value());
  t.setBackprop(out, [ai = a.id(), bi = b.id(), oi = out.id()](Tape& t) {
    const Matrix& g = t.gradOf(oi);
    t.gradOf(ai) += g * t.valueOf(bi).transpose();
    t.gradOf(bi) += t.valueOf(ai).transpose() * g;
  });
  return out;
}

Var operator*(double s, Var a) { return affine(a, s, 0.0); }

Var matmulTN(Var a, Var b) {
  Tape& t = sameTape("matmulTN", a, b);
  if (a.rows() != b.rows()) shapeFail("matmulTN", a.value(), b.value());
  Var out = t.emplace(a.value().transpose() * b.value());
  t.setBackprop(out, [ai = a.id(), bi = b.id(), oi = out.id()](Tape& t) {
    const Matrix& g = t.gradOf(oi);
    t.gradOf(ai) += t.valueOf(bi) * g.transpose();
    t.gradOf(bi) += t.valueOf(ai) * g;
  });
  return out;
}

Var cwiseProduct(Var a, Var b) {
  Tape& t = sameTape("cwiseProduct", a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shapeFail("cwiseProduct", a.value(), b.value());
  Var out = t.emplace(a.value().cwiseProduct(b.value()));
  t.setBackprop(out, [ai = a.id(), bi = b.id(), oi = out.id()](Tape& t) {
    const Matrix& g = t.gradOf(oi);
    t.gradOf(ai) += g.cwiseProduct(t.valueOf(bi));
    t.gradOf(bi) += g.cwiseProduct(t.valueOf(ai));
  });
  return out;
}

Var cwiseAbs(Var a) {
  Tape& t = *a.tape();
  Var out = t.emplace(a.value().cwiseAbs());
  t.setBackprop(out, [ai = a.id(), oi = out.id()](Tape& t) {
    // subgradient 0 at the kink
    t.gradOf(ai) += t.gradOf(oi).cwiseProduct(
        t.valueOf(ai).unaryExpr([](double x) {
          return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
        }));
  });
  return out;
}

Var affine(Var a, double mul, double add) {
  Tape& t = *a.tape();
  Var out = t.emplace((a.value().array() * mul + add).matrix());
  t.setBackprop(out, [ai = a.id(), oi = out.id(), mul](Tape& t) {
    t.gradOf(ai) += mul * t.gradOf(oi);
  });
  return out;
}

Var scaleBy(Var v, Var s) {
  Tape& t = sameTape("scaleBy", v, s);
  requireScalar("scaleBy", s);
  Var out = t.emplace(v.value() * s.scalarValue());
  t.setBackprop(out, [vi = v.id(), si = s.id(), oi = out.id()](Tape& t) {
    const Matrix& g = t.gradOf(oi);
    t.gradOf(vi) += g * t.valueOf(si)(0, 0);
    t.gradOf(si)(0, 0) += g.cwiseProduct(t.valueOf(vi)).sum();
  });
  return out;
}

Var divideBy(Var v, Var s, double eps) {
  Tape& t = sameTape("divideBy", v, s);
  requireScalar("divideBy", s);
  const double denom = s.scalarValue() + eps;
  Var out = t.emplace(v.value() / denom);
  t.setBackprop(out, [vi = v.id(), si = s.id(), oi = out.id(), eps](Tape& t) {
    const Matrix& g = t.gradOf(oi);
    const double d = t.valueOf(si)(0, 0) + eps;
    t.gradOf(vi) += g / d;
    t.gradOf(si)(0, 0) -= g.cwiseProduct(t.valueOf(vi)).sum() / (d * d);
  });
  return out;
}

Var tanh(Var a) {
  Tape& t = *a.tape();
  Var out = t.emplace(a.value().array().tanh().matrix());
  t.setBackprop(out, [ai = a.id(), oi = out.id()](Tape& t) {
    const Matrix& y = t.valueOf(oi);
    t.gradOf(ai) +=
        t.gradOf(oi).cwiseProduct((1.0 - y.array().square()).matrix());
  });
  return out;
}

Var logistic(Var a) {
  Tape& t = *a.tape();
  Var out = t.emplace(
      a.value().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); }));
  t.setBackprop(out, [ai = a.id(), oi = out.id()](Tape& t) {
    const Matrix& y = t.valueOf(oi);
    t.gradOf(ai) += t.gradOf(oi).cwiseProduct(
        (y.array() * (1.0 - y.array())).matrix());
  });
  return out;
}

Var sum(Var a) {
  Tape& t = *a.tape();
  Matrix m(1, 1);
  m(0, 0) = a.value().sum();
  Var out = t.emplace(std::move(m));
  t.setBackprop(out, [ai = a.id(), oi = out.id()](Tape& t) {
    t.gradOf(ai).array() += t.gradOf(oi)(0, 0);
  });
  return out;
}

Var mean(Var a) {
  Tape& t = *a.tape();
  Matrix m(1, 1);
  m(0, 0) = a.value().mean();
  Var out = t.emplace(std::move(m));
  t.setBackprop(out, [ai = a.id(), oi = out.id()](Tape& t) {
    t.gradOf(ai).array() +=
        t.gradOf(oi)(0, 0) / static_cast<double>(t.valueOf(ai).size());
  });
  return out;
}

namespace {

// softmax of one column with max subtraction (exact up to rounding by shift
// invariance).
Eigen::VectorXd softmaxColumn(const Eigen::VectorXd& e) {
  Eigen::VectorXd out = (e.array() - e.maxCoeff()).exp();
  out /= out.sum();
  return out;
}

}  // namespace

Var softmax(Var v) {
  Tape& t = *v.tape();
  requireVector("softmax", v);
  Var out = t.emplace(softmaxColumn(v.value().col(0)));
  t.setBackprop(out, [vi = v.id(), oi = out.id()](Tape& t) {
    const Matrix& y = t.valueOf(oi);
    const Matrix& g = t.gradOf(oi);
    const double dot = y.cwiseProduct(g).sum();
    t.gradOf(vi) += y.cwiseProduct((g.array() - dot).matrix());
  });
  return out;
}

Var softmaxRows(Var m) {
  Tape& t = *m.tape();
  Matrix value(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    value.row(r) = softmaxColumn(m.value().row(r).transpose()).transpose();
  Var out = t.emplace(std::move(value));
  t.setBackprop(out, [mi = m.id(), oi = out.id()](Tape& t) {
    const Matrix& y = t.valueOf(oi);
    const Matrix& g = t.gradOf(oi);
    Matrix& gm = t.gradOf(mi);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = y.row(r).cwiseProduct(g.row(r)).sum();
      gm.row(r) += y.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
    }
  });
  return out;
}

Var windowedSoftmax(Var v, int lo, int hi) {
  Tape& t = *v.tape();
  requireVector("windowedSoftmax", v);
  const int n = static_cast<int>(v.rows());
  lo = std::max(lo, 0);
  hi = std::min(hi, n - 1);
  if (lo > hi)
    throw ShapeError("windowedSoftmax: empty effective window [" +
                     std::to_string(lo) + ", " + std::to_string(hi) + "]");
  Eigen::VectorXd value = Eigen::VectorXd::Zero(n);
  value.segment(lo, hi - lo + 1) =
      softmaxColumn(v.value().col(0).segment(lo, hi - lo + 1));
  Var out = t.emplace(std::move(value));
  t.setBackprop(out, [vi = v.id(), oi = out.id(), lo, hi](Tape& t) {
    const int len = hi - lo + 1;
    const auto y = t.valueOf(oi).col(0).segment(lo, len);
    const auto g = t.gradOf(oi).col(0).segment(lo, len);
    const double dot = y.cwiseProduct(g).sum();
    t.gradOf(vi).col(0).segment(lo, len) += y.cwiseProduct((g.array() - dot).matrix());
  });
  return out;
}

Var vconcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error("vconcat: no operands");
  Tape& t = *parts.front().tape();
  Eigen::Index total = 0;
  for (Var p : parts) {
    requireVector("vconcat", p);
    total += p.rows();
  }
  Matrix value(total, 1);
  Eigen::Index at = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets, lens;
  for (Var p : parts) {
    value.col(0).segment(at, p.rows()) = p.value().col(0);
    ids.push_back(p.id());
    offsets.push_back(at);
    lens.push_back(p.rows());
    at += p.rows();
  }
  Var out = t.emplace(std::move(value));
  t.setBackprop(out, [ids, offsets, lens, oi = out.id()](Tape& t) {
    const Matrix& g = t.gradOf(oi);
    for (std::size_t i = 0; i < ids.size(); ++i)
      t.gradOf(ids[i]).col(0) += g.col(0).segment(offsets[i], lens[i]);
  });
  return out;
}

Var segment(Var v, Eigen::Index start, Eigen::Index len) {
  Tape& t = *v.tape();
  requireVector("segment", v);
  if (start < 0 || len < 0 || start + len > v.rows())
    throw ShapeError("segment: range [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") outside vector of size " +
                     std::to_string(v.rows()));
  Var out = t.emplace(v.value().col(0).segment(start, len));
  t.setBackprop(out, [vi = v.id(), oi = out.id(), start, len](Tape& t) {
    t.gradOf(vi).col(0).segment(start, len) += t.gradOf(oi).col(0);
  });
  return out;
}

Var selectRow(Var m, Eigen::Index row) {
  Tape& t = *m.tape();
  if (row < 0 || row >= m.rows())
    throw ShapeError("selectRow: row " + std::to_string(row) +
                     " outside matrix with " + std::to_string(m.rows()) +
                     " rows");
  Var out = t.emplace(m.value().row(row).transpose());
  t.setBackprop(out, [mi = m.id(), oi = out.id(), row](Tape& t) {
    t.gradOf(mi).row(row) += t.gradOf(oi).col(0).transpose();
  });
  return out;
}

Var stackRows(const std::vector<Var>& columns) {
  if (columns.empty()) throw Error("stackRows: no operands");
  Tape& t = *columns.front().tape();
  const Eigen::Index d = columns.front().rows();
  std::vector<int> ids;
  Matrix value(static_cast<Eigen::Index>(columns.size()), d);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    requireVector("stackRows", columns[i]);
    if (columns[i].rows() != d)
      shapeFail("stackRows", columns.front().value(), columns[i].value());
    value.row(static_cast<Eigen::Index>(i)) = columns[i].value().col(0);
    ids.push_back(columns[i].id());
  }
  Var out = t.emplace(std::move(value));
  t.setBackprop(out, [ids, oi = out.id()](Tape& t) {
    const Matrix& g = t.gradOf(oi);
    for (std::size_t i = 0; i < ids.size(); ++i)
      t.gradOf(ids[i]).col(0) += g.row(static_cast<Eigen::Index>(i));
  });
  return out;
}

Var rowwisePlus(Var m, Var v) {
  Tape& t = sameTape("rowwisePlus", m, v);
  requireVector("rowwisePlus", v);
  if (m.cols() != v.rows()) shapeFail("rowwisePlus", m.value(), v.value());
  Var out = t.emplace(m.value().rowwise() + v.value().col(0).transpose());
  t.setBackprop(out, [mi = m.id(), vi = v.id(), oi = out.id()](Tape& t) {
    const Matrix& g = t.gradOf(oi);
    t.gradOf(mi) += g;
    t.gradOf(vi).col(0) += g.colwise().sum().transpose();
  });
  return out;
}

Var shiftDown(Var v) {
  Tape& t = *v.tape();
  requireVector("shiftDown", v);
  const Eigen::Index n = v.rows();
  Eigen::VectorXd value = Eigen::VectorXd::Zero(n);
  if (n > 1) value.tail(n - 1) = v.value().col(0).head(n - 1);
  Var out = t.emplace(std::move(value));
  t.setBackprop(out, [vi = v.id(), oi = out.id(), n](Tape& t) {
    if (n > 1)
      t.gradOf(vi).col(0).head(n - 1) += t.gradOf(oi).col(0).tail(n - 1);
  });
  return out;
}

Var conv1dSame(Var signal, Var kernels) {
  Tape& t = sameTape("conv1dSame", signal, kernels);
  requireVector("conv1dSame", signal);
  const Eigen::Index n = signal.rows();
  const Eigen::Index k = kernels.rows();
  const Eigen::Index l = kernels.cols();
  if (l % 2 == 0)
    throw ShapeError("conv1dSame: kernel length " + std::to_string(l) +
                     " must be odd (centering undefined otherwise)");
  const Eigen::Index c = (l - 1) / 2;
  const auto& x = signal.value();
  const auto& f = kernels.value();
  Matrix value = Matrix::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      for (Eigen::Index m = 0; m < l; ++m) {
        const Eigen::Index src = i + m - c;
        if (src >= 0 && src < n) value(i, j) += f(j, m) * x(src, 0);
      }
  Var out = t.emplace(std::move(value));
  t.setBackprop(
      out, [si = signal.id(), ki = kernels.id(), oi = out.id(), n, k, l,
            c](Tape& t) {
        const Matrix& g = t.gradOf(oi);
        const Matrix& x = t.valueOf(si);
        const Matrix& f = t.valueOf(ki);
        Matrix& gx = t.gradOf(si);
        Matrix& gf = t.gradOf(ki);
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index j = 0; j < k; ++j)
            for (Eigen::Index m = 0; m < l; ++m) {
              const Eigen::Index src = i + m - c;
              if (src < 0 || src >= n) continue;
              gx(src, 0) += f(j, m) * g(i, j);
              gf(j, m) += x(src, 0) * g(i, j);
            }
      });
  return out;
}

Var bceWithLogits(Var logit, double target) {
  Tape& t = *logit.tape();
  requireScalar("bceWithLogits", logit);
  const double z = logit.scalarValue();
  Matrix m(1, 1);
  m(0, 0) = std::max(z, 0.0) - z * target + std::log1p(std::exp(-std::abs(z)));
  Var out = t.emplace(std::move(m));
  t.setBackprop(out, [li = logit.id(), oi = out.id(), target](Tape& t) {
    const double z = t.valueOf(li)(0, 0);
    const double s = 1.0 / (1.0 + std::exp(-z));
    t.gradOf(li)(0, 0) += t.gradOf(oi)(0, 0) * (s - target);
  });
  return out;
}

}  // namespace monoattn::ad
