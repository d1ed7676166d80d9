#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"

#include <cmath>

#include "monoattn/grad_check.hpp"
#include "monoattn/rng.hpp"
#include "monoattn/tape.hpp"

using namespace monoattn;
using ad::Matrix;
using ad::Tape;
using ad::Var;

namespace {

Matrix colVec(std::initializer_list<double> vals) {
  Matrix m(static_cast<Eigen::Index>(vals.size()), 1);
  Eigen::Index i = 0;
  for (double v : vals) m(i++, 0) = v;
  return m;
}

Matrix randomMatrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                    double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

}  // namespace

TEST_CASE("softmax basics") {
  Tape t;
  Var s = ad::softmax(t.constant(colVec({0, 0, 0})));
  CHECK(s.value()(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(s.value()(1, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(s.value()(2, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));

  Var th = ad::tanh(t.scalar(0.0));
  CHECK(th.scalarValue() == 0.0);
  Var sg = ad::logistic(t.scalar(0.0));
  CHECK(sg.scalarValue() == 0.5);
}

TEST_CASE("softmax shift invariance and simplex property") {
  Rng rng(123);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = rng.uniformInt(1, 9);
    Matrix e = randomMatrix(rng, n, 1);
    const double shift = rng.uniform(-30.0, 30.0);
    Tape t;
    Var a = ad::softmax(t.constant(e));
    Var b = ad::softmax(t.constant((e.array() + shift).matrix()));
    CHECK((a.value() - b.value()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(a.value().sum() - 1.0) < 1e-12);
    CHECK(a.value().minCoeff() >= 0.0);
  }
  // row softmax over a random matrix
  Rng rng2(5);
  Matrix m = randomMatrix(rng2, 7, 5);
  Tape t;
  Var sm = ad::softmaxRows(t.constant(m));
  for (int r = 0; r < 7; ++r) {
    CHECK(std::abs(sm.value().row(r).sum() - 1.0) < 1e-12);
    CHECK(sm.value().row(r).minCoeff() >= 0.0);
  }
}

TEST_CASE("backward on analytic cases") {
  SUBCASE("sum of squares") {
    Tape t;
    ad::Parameter w{"w", colVec({1, 2}), {}};
    Var wv = t.use(w);
    Var loss = ad::sum(cwiseProduct(wv, wv));
    t.backward(loss);
    CHECK(w.grad(0, 0) == doctest::Approx(2.0));
    CHECK(w.grad(1, 0) == doctest::Approx(4.0));
  }
  SUBCASE("logistic derivative at zero") {
    Tape t;
    ad::Parameter z{"z", Matrix::Zero(1, 1), {}};
    Var loss = ad::logistic(t.use(z));
    t.backward(loss);
    CHECK(z.grad(0, 0) == doctest::Approx(0.25));
  }
  SUBCASE("non-scalar loss rejected") {
    Tape t;
    Var v = t.constant(colVec({1, 2, 3}));
    CHECK_THROWS_AS(t.backward(v), ShapeError);
  }
}

TEST_CASE("repeated backward after zeroing is identical") {
  Rng rng(9);
  ad::Parameter w{"w", randomMatrix(rng, 4, 3), {}};
  Tape t;
  Var wv = t.use(w);
  Var x = t.constant(randomMatrix(rng, 3, 1));
  Var loss = ad::sum(ad::tanh(wv * x));
  t.backward(loss);
  const Matrix first = w.grad;
  w.zeroGrad();
  t.zeroNodeGrads();
  t.backward(loss);
  CHECK((w.grad - first).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("graph evaluation is deterministic") {
  auto run = [] {
    Rng rng(77);
    Tape t;
    Var a = t.constant(randomMatrix(rng, 5, 4));
    Var b = t.constant(randomMatrix(rng, 4, 1));
    return ad::sum(ad::softmax(ad::tanh(a * b))).scalarValue();
  };
  const double x = run();
  const double y = run();
  CHECK(x == y);  // bitwise
}

TEST_CASE("shape errors name the op") {
  Tape t;
  Var a = t.constant(Matrix::Zero(2, 3));
  Var b = t.constant(Matrix::Zero(2, 3));
  CHECK_THROWS_CONTAINS(a * b, ShapeError, "matmul");
  CHECK_THROWS_AS(ad::vconcat({a, b}), ShapeError);
  Var v = t.constant(colVec({1, 2}));
  CHECK_THROWS_AS(v + a, ShapeError);
  CHECK_THROWS_AS(ad::segment(v, 1, 5), ShapeError);
  // even kernel length
  Var k = t.constant(Matrix::Zero(2, 4));
  CHECK_THROWS_AS(ad::conv1dSame(v, k), ShapeError);
}

// Every differentiable op against central differences, many seeds. Losses
// are built as sum(op(...)) so the checker sees one scalar.
TEST_CASE("per-op gradients match finite differences") {
  const double kTolPlain = 1e-6;    // no softmax denominators
  const double kTolSoftmax = 1e-4;  // softmax / normalization chains

  auto check = [](const char* name, double tol, auto builder, int seeds) {
    for (int seed = 0; seed < seeds; ++seed) {
      Rng rng(1000 + seed);
      ad::ParameterStore store;
      auto build = builder(rng, store);
      auto report = ad::finiteDiffCheck(build, store);
      INFO(name << " seed " << seed << " worst " << report.worst << " at "
                << report.worst_param);
      CHECK(report.worst < tol);
    }
  };

  check("add/sub/cwise/abs/affine", kTolPlain, [](Rng& rng,
                                                  ad::ParameterStore& s) {
    s.create("a", randomMatrix(rng, 4, 3));
    s.create("b", randomMatrix(rng, 4, 3));
    return [&s](Tape& t, ad::ParameterStore&) {
      Var a = t.use(s.get("a"));
      Var b = t.use(s.get("b"));
      Var z = affine(cwiseProduct(a + b, a - b), 0.7, 0.1);
      return ad::sum(cwiseAbs(z) + cwiseProduct(a, b));
    };
  }, 20);

  check("matmul/matmulTN/mean", kTolPlain, [](Rng& rng,
                                              ad::ParameterStore& s) {
    s.create("w", randomMatrix(rng, 3, 4, 0.5));
    s.create("x", randomMatrix(rng, 4, 2, 0.5));
    s.create("v", randomMatrix(rng, 3, 2));
    return [&s](Tape& t, ad::ParameterStore&) {
      Var w = t.use(s.get("w"));
      Var x = t.use(s.get("x"));
      Var v = t.use(s.get("v"));
      return ad::mean(ad::tanh(w * x)) + ad::sum(matmulTN(v, w * x));
    };
  }, 20);

  check("tanh/logistic chain", kTolPlain, [](Rng& rng,
                                             ad::ParameterStore& s) {
    s.create("w", randomMatrix(rng, 5, 5, 0.4));
    s.create("x", randomMatrix(rng, 5, 1, 0.4));
    return [&s](Tape& t, ad::ParameterStore&) {
      Var h = ad::tanh(t.use(s.get("w")) * t.use(s.get("x")));
      return ad::sum(ad::logistic(h));
    };
  }, 20);

  check("concat/segment/selectRow/stackRows/shiftDown", kTolPlain,
        [](Rng& rng, ad::ParameterStore& s) {
          s.create("m", randomMatrix(rng, 4, 3, 0.5));
          s.create("v", randomMatrix(rng, 3, 1, 0.5));
          return [&s](Tape& t, ad::ParameterStore&) {
            Var m = t.use(s.get("m"));
            Var v = t.use(s.get("v"));
            Var r0 = ad::selectRow(m, 0);
            Var r2 = ad::selectRow(m, 2);
            Var cat = ad::vconcat({r0, v, r2});
            Var mid = ad::segment(cat, 2, 4);
            Var stacked = ad::stackRows({ad::shiftDown(mid), mid,
                                         cwiseProduct(mid, mid)});
            return ad::sum(ad::tanh(stacked));
          };
        }, 20);

  check("rowwisePlus/scaleBy/divideBy", kTolPlain,
        [](Rng& rng, ad::ParameterStore& s) {
          s.create("m", randomMatrix(rng, 4, 3));
          s.create("v", randomMatrix(rng, 3, 1));
          s.create("s", (Matrix(1, 1) << 1.5 + rng.uniform()).finished());
          return [&s](Tape& t, ad::ParameterStore&) {
            Var m = t.use(s.get("m"));
            Var v = t.use(s.get("v"));
            Var sc = t.use(s.get("s"));
            Var z = rowwisePlus(m, v);
            return ad::sum(divideBy(ad::sum(scaleBy(z, sc)), sc)) +
                   ad::sum(scaleBy(v, sc));
          };
        }, 20);

  check("conv1dSame", kTolPlain, [](Rng& rng, ad::ParameterStore& s) {
    s.create("sig", randomMatrix(rng, 6, 1, 0.5));
    s.create("ker", randomMatrix(rng, 3, 5, 0.5));
    return [&s](Tape& t, ad::ParameterStore&) {
      return ad::sum(
          ad::tanh(ad::conv1dSame(t.use(s.get("sig")), t.use(s.get("ker")))));
    };
  }, 20);

  check("softmax/windowedSoftmax", kTolSoftmax,
        [](Rng& rng, ad::ParameterStore& s) {
          s.create("e", randomMatrix(rng, 6, 1));
          s.create("w", randomMatrix(rng, 6, 1));
          return [&s](Tape& t, ad::ParameterStore&) {
            Var e = t.use(s.get("e"));
            Var w = t.use(s.get("w"));
            Var soft = ad::softmax(e);
            Var windowed = ad::windowedSoftmax(e, 1, 4);
            return ad::sum(cwiseProduct(soft, w)) +
                   ad::sum(cwiseProduct(windowed, cwiseProduct(w, w)));
          };
        }, 20);

  check("softmaxRows", kTolSoftmax, [](Rng& rng, ad::ParameterStore& s) {
    s.create("m", randomMatrix(rng, 4, 5));
    s.create("w", randomMatrix(rng, 4, 5));
    return [&s](Tape& t, ad::ParameterStore&) {
      return ad::sum(
          cwiseProduct(ad::softmaxRows(t.use(s.get("m"))), t.use(s.get("w"))));
    };
  }, 20);

  check("bceWithLogits", kTolPlain, [](Rng& rng, ad::ParameterStore& s) {
    s.create("z", randomMatrix(rng, 1, 1));
    return [&s](Tape& t, ad::ParameterStore&) {
      Var z = t.use(s.get("z"));
      return ad::bceWithLogits(z, 1.0) + ad::bceWithLogits(z, 0.0);
    };
  }, 20);
}

TEST_CASE("finite_diff_check on quadratic is near machine precision") {
  ad::ParameterStore store;
  store.create("x", (Matrix(1, 1) << 3.0).finished());
  auto build = [](Tape& t, ad::ParameterStore& s) {
    Var x = t.use(s.get("x"));
    return cwiseProduct(x, x);
  };
  auto report = ad::finiteDiffCheck(build, store);
  // analytic 6 vs central difference of x^2 (exact up to rounding)
  CHECK(report.max_rel_error.at("x") < 1e-9);
}

TEST_CASE("finite_diff_check on tanh network") {
  Rng rng(2024);
  ad::ParameterStore store;
  store.create("W", randomMatrix(rng, 6, 4));
  store.create("x", randomMatrix(rng, 4, 1));
  auto build = [](Tape& t, ad::ParameterStore& s) {
    return ad::sum(ad::tanh(t.use(s.get("W")) * t.use(s.get("x"))));
  };
  auto report = ad::finiteDiffCheck(build, store);
  CHECK(report.worst < 1e-6);
}

TEST_CASE("finite_diff_check reports non-finite perturbations") {
  ad::ParameterStore store;
  store.create("x", (Matrix(1, 1) << 1.0).finished());
  auto build = [](Tape& t, ad::ParameterStore& s) {
    Var x = t.use(s.get("x"));
    // log of (x - 1): finite at x=1+h, -inf at exactly... use 1/x at 0
    const double v = x.scalarValue();
    Matrix m(1, 1);
    m(0, 0) = std::log(v - 1.0 + 1e-5);
    return t.constant(m) + affine(x, 0.0, 0.0);
  };
  CHECK_THROWS_AS(ad::finiteDiffCheck(build, store, 1e-3), NumericalError);
}
