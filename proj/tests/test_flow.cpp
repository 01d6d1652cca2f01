#include <doctest.h>

#include "editid/flow.hpp"
#include "support.hpp"

using namespace editid;

TEST_CASE("noise schedule endpoints and midpoint") {
  const auto a = noise_schedule(TimePoint(0.0));
  CHECK(a.alpha == 1.0);
  CHECK(a.sigma == 0.0);
  const auto b = noise_schedule(TimePoint(1.0));
  CHECK(b.alpha == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(b.sigma == 1.0);
  const auto m = noise_schedule(TimePoint(0.5));
  CHECK(m.alpha == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.sigma == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("noise schedule sums to one") {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const auto s = noise_schedule(TimePoint(u(g)));
    CHECK(std::abs(s.alpha + s.sigma - 1.0) < 1e-12);
  }
}

TEST_CASE("time points outside [0,1] are rejected") {
  CHECK_THROWS_AS(TimePoint(-1e-9), Error);
  CHECK_THROWS_AS(TimePoint(1.0 + 1e-9), Error);
  CHECK_THROWS_AS(TimePoint(std::nan("")), Error);
}

TEST_CASE("forward_diffuse, interpolate_path and fm_residual") {
  std::mt19937_64 g(2);
  const MatrixX x0 = tsupport::random_matrix(g, 3, 4);
  const MatrixX n = tsupport::random_matrix(g, 3, 4);
  CHECK(forward_diffuse<Real>(x0, TimePoint(0), n) == x0);
  CHECK(tsupport::max_abs(forward_diffuse<Real>(x0, TimePoint(1), n) - n) < 1e-15);
  CHECK(tsupport::max_abs(forward_diffuse<Real>(x0, TimePoint(0.37), x0) - x0) < 1e-15);

  CHECK(interpolate_path<Real>(x0, n, TimePoint(0)) == x0);
  CHECK(interpolate_path<Real>(x0, n, TimePoint(1)) == n);
  const MatrixX z = MatrixX::Zero(2, 2), four = MatrixX::Constant(2, 2, 4.0);
  CHECK(interpolate_path<Real>(z, four, TimePoint(0.25)) == MatrixX::Ones(2, 2));

  CHECK(fm_residual<Real>(x0, x0).isZero(0));
  CHECK(fm_residual<Real>(MatrixX::Zero(3, 4), n) == n);
  const MatrixX r = fm_residual<Real>(x0, n);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) CHECK(r(i, j) == n(i, j) - x0(i, j));
  CHECK_THROWS_AS(fm_residual<Real>(x0, MatrixX::Zero(4, 3)), Error);
}

TEST_CASE("euler on a constant field is exact") {
  std::mt19937_64 g(3);
  const MatrixX x = tsupport::random_matrix(g, 4, 6);
  const MatrixX v = tsupport::random_matrix(g, 4, 6);
  for (int steps : {1, 2, 7, 20, 100}) {
    const auto field = [&](const MatrixX&, TimePoint) { return v; };
    CHECK(tsupport::max_abs(euler_integrate<Real>(field, x, steps) - (x + v)) < 1e-9);
  }
}

TEST_CASE("euler on f(x)=x follows (1+1/n)^n and converges to e") {
  const MatrixX x = MatrixX::Constant(2, 3, 1.5);
  const auto field = [](const MatrixX& s, TimePoint) { return s; };
  const MatrixX twenty = euler_integrate<Real>(field, x, 20);
  CHECK(tsupport::max_abs(twenty - std::pow(1.0 + 1.0 / 20, 20) * x) < 1e-12);
  Real previous = 1e300;
  for (int steps : {5, 10, 20, 40, 80, 160}) {
    const Real err = tsupport::max_abs(euler_integrate<Real>(field, x, steps) - std::exp(1.0) * x);
    CHECK(err < previous);
    previous = err;
  }
}

TEST_CASE("euler reports divergence with the step index") {
  const auto field = [](const MatrixX& s, TimePoint) { return MatrixX(s * 1e308); };
  try {
    euler_integrate<Real>(field, MatrixX::Constant(1, 1, 10.0), 4);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Divergence);
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }
  CHECK_THROWS_AS(euler_integrate<Real>(field, MatrixX::Zero(1, 1), 0), Error);
}

TEST_CASE("hooks see the field output and may replace it") {
  const auto field = [](const MatrixX& s, TimePoint) { return MatrixX(MatrixX::Ones(s.rows(), s.cols())); };
  std::vector<int> seen;
  const std::vector<StepHook<Real>> hooks{[&](int step, MatrixX& v) {
    seen.push_back(step);
    CHECK(v == MatrixX::Ones(1, 2));
    v *= 2.0;
  }};
  const MatrixX out = euler_integrate<Real>(field, MatrixX::Zero(1, 2), 4, hooks);
  CHECK(seen == std::vector<int>{0, 1, 2, 3});
  CHECK(tsupport::max_abs(out - MatrixX::Constant(1, 2, 2.0)) < 1e-15);
}

TEST_CASE("attention field matches the brute-force oracle") {
  std::mt19937_64 g(4);
  VectorFieldSpec spec;
  spec.dim = 8;
  spec.cond_dim = 6;
  spec.heads = 2;
  const AttentionField<Real> f(spec);
  for (int tokens = 1; tokens <= 5; ++tokens) {
    const MatrixX x = tsupport::random_matrix(g, 3, 8);
    const MatrixX c = tsupport::random_matrix(g, tokens, 6);
    CHECK(tsupport::max_abs(f(x, TimePoint(0.3), c) - tsupport::bf_field(f, x, c)) < 1e-10);
  }
}

TEST_CASE("single condition token: every query reads its value row") {
  std::mt19937_64 g(5);
  VectorFieldSpec spec;
  spec.dim = 8;
  spec.cond_dim = 8;
  spec.heads = 1;
  const AttentionField<Real> f(spec);
  const MatrixX x = tsupport::random_matrix(g, 4, 8);
  const MatrixX c = tsupport::random_matrix(g, 1, 8);
  const MatrixX out = f(x, TimePoint(0.0), c);
  const MatrixX expected = c * f.w_v() * f.w_out();
  for (int i = 0; i < 4; ++i) CHECK(tsupport::max_abs(out.row(i) - expected) < 1e-12);
  MatrixX twice(2, 8);
  twice << c, c;
  CHECK(tsupport::max_abs(f(x, TimePoint(0.0), twice) - out) < 1e-12);
}

TEST_CASE("attention field rejects mismatched widths") {
  VectorFieldSpec spec;
  const AttentionField<Real> f(spec);
  CHECK_THROWS_AS(f(MatrixX::Zero(2, spec.dim + 1), TimePoint(0), MatrixX::Zero(1, spec.cond_dim)), Error);
  CHECK_THROWS_AS(f(MatrixX::Zero(2, spec.dim), TimePoint(0), MatrixX::Zero(1, spec.cond_dim + 1)), Error);
  spec.heads = 3;
  CHECK_THROWS_AS(AttentionField<Real>{spec}, Error);
}

TEST_CASE("toy generation is deterministic and prompt sensitive") {
  const ToyGeneratorSpec spec;
  std::mt19937_64 g(6);
  const MatrixX p1 = tsupport::random_matrix(g, 3, spec.field.cond_dim);
  const MatrixX p2 = tsupport::random_matrix(g, 3, spec.field.cond_dim);
  const ImageBuffer a = toy_generate(spec, p1, 9, 10);
  CHECK(a == toy_generate(spec, p1, 9, 10));
  CHECK(max_abs_diff(a, toy_generate(spec, p2, 9, 10)) > 0.0);
  const std::vector<StepHook<Real>> none;
  CHECK(a == toy_generate(spec, p1, 9, 10, none));
  CHECK(a.height() == spec.image_side());
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("float instantiation of the field agrees with double") {
  VectorFieldSpec spec;
  std::mt19937_64 g(7);
  const MatrixX x = tsupport::random_matrix(g, 4, spec.dim);
  const MatrixX c = tsupport::random_matrix(g, 2, spec.cond_dim);
  const Mat<float> xf = x.cast<float>(), cf = c.cast<float>();
  const Mat<float> outf = AttentionField<float>(spec)(xf, TimePoint(0.5), cf);
  const MatrixX outd = AttentionField<Real>(spec)(x, TimePoint(0.5), c);
  CHECK(tsupport::max_abs(outf.cast<Real>() - outd) < 1e-4);
}
