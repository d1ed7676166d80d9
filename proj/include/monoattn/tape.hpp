#pragma once

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "monoattn/errors.hpp"

namespace monoattn::ad {

using Matrix = Eigen::MatrixXd;

// Persistent trainable tensor. Lives outside any tape (typically inside a
// ParameterStore); Tape::backward accumulates into `grad`.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;  // 0x0 until populated by a backward pass

  bool hasGrad() const { return grad.size() > 0; }
  void zeroGrad() { grad.resize(0, 0); }
};

class Tape;

// Lightweight handle to a node on a Tape. Copyable; valid as long as the tape
// is alive. A default-constructed Var is null.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Eigen::Index size() const { return value().size(); }
  double scalarValue() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Dynamic reverse-mode tape. Nodes are appended in evaluation order, so the
// creation order is already a topological order and the backward sweep walks
// it in reverse. One tape per evaluated graph; not thread-safe, but
// independent tapes may run concurrently.
class Tape {
 public:
  explicit Tape(bool track_gradients = true) : track_(track_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool tracking() const { return track_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Matrix value);
  Var scalar(double value);
  Var zeros(Eigen::Index rows, Eigen::Index cols = 1);
  Var oneHot(Eigen::Index size, Eigen::Index hot);
  // Leaf bound to a parameter: value copied in, gradient flushed back by
  // backward().
  Var use(Parameter& p);

  // Reverse sweep from a scalar loss; accumulates into every node gradient
  // and flushes leaf gradients into their bound Parameters. Callable more
  // than once (results add up unless grads are zeroed in between).
  void backward(Var loss);
  void zeroNodeGrads();

  // Plumbing for op construction.
  Var emplace(Matrix value);
  void setBackprop(Var v, std::function<void(Tape&)> fn);
  const Matrix& valueOf(int id) const { return nodes_[id].value; }
  Matrix& gradOf(int id) { return nodes_[id].grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&)> backprop;  // empty for leaves
    Parameter* bound = nullptr;
  };
  std::deque<Node> nodes_;  // deque: references stay stable as nodes append
  bool track_;
};

// ---- op set -----------------------------------------------------------
// Free functions producing new tape nodes. Vectors are column vectors
// (n x 1); scalars are 1 x 1.

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);  // matrix product
Var operator*(double s, Var a);
Var matmulTN(Var a, Var b);  // a^T * b
Var cwiseProduct(Var a, Var b);
Var cwiseAbs(Var a);
Var affine(Var a, double mul, double add);  // elementwise mul*a + add
Var scaleBy(Var v, Var s);                  // v * s, s scalar node
Var divideBy(Var v, Var s, double eps = 0.0);  // v / (s + eps), s scalar node
Var tanh(Var a);
Var logistic(Var a);
Var sum(Var a);
Var mean(Var a);
Var softmax(Var v);                              // column vector
Var softmaxRows(Var m);                          // each row a distribution
Var windowedSoftmax(Var v, int lo, int hi);      // zero outside [lo, hi]
Var vconcat(const std::vector<Var>& parts);      // stack column vectors
Var segment(Var v, Eigen::Index start, Eigen::Index len);
Var selectRow(Var m, Eigen::Index row);              // row of m as column
Var stackRows(const std::vector<Var>& columns);      // n columns -> n x d
Var rowwisePlus(Var m, Var v);  // add v (d x 1) to every row of m (n x d)
Var shiftDown(Var v);           // out(i) = v(i-1), out(0) = 0
// Cross-correlation of a column signal with k kernels of odd length l,
// zero-padded to the same length: out(i, j) = sum_m kernels(j, m) *
// signal(i + m - (l-1)/2).
Var conv1dSame(Var signal, Var kernels);
// Numerically stable binary cross-entropy of a logit against a constant
// 0/1 target.
Var bceWithLogits(Var logit, double target);

}  // namespace monoattn::ad
