#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "echopose/nn.hpp"
#include "echopose/parallel.hpp"
#include "echopose/rng.hpp"

using namespace echopose;
using nn::Activation;
using nn::Conv2dShape;
using nn::Tensor;

namespace {

void fill_random(Tensor& t, RandomStream& rng, double scale = 1.0) {
  for (double& v : t.v) v = rng.normal(0.0, scale);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i)
    d = std::max(d, std::abs(a.v[i] - b.v[i]));
  return d;
}

}  // namespace

TEST_CASE("OpenMP conv kernels are bit-identical to the serial reference") {
  RandomStream rng(1);
  for (const Conv2dShape s : {Conv2dShape{3, 5, 17, 13, 7},
                              Conv2dShape{2, 3, 8, 8, 4, 3, 1, 1},
                              Conv2dShape{1, 1, 9, 9, 2}}) {
    Tensor x{s.batch, s.c_in, s.h, s.w};
    Tensor w{s.c_out, s.c_in, s.kernel, s.kernel};
    Tensor b{s.c_out};
    fill_random(x, rng);
    fill_random(w, rng);
    fill_random(b, rng);

    Tensor y_par{s.batch, s.c_out, s.out_h(), s.out_w()};
    Tensor y_ser = y_par;
    nn::kernels::conv2d_forward(x.data(), w.data(), b.data(), y_par.data(), s);
    nn::ref::conv2d_forward(x.data(), w.data(), b.data(), y_ser.data(), s);
    CHECK(y_par.v == y_ser.v);

    Tensor dy = y_par;
    fill_random(dy, rng);
    Tensor dx_par = x, dx_ser = x;
    nn::kernels::conv2d_backward_input(dy.data(), w.data(), dx_par.data(), s);
    nn::ref::conv2d_backward_input(dy.data(), w.data(), dx_ser.data(), s);
    CHECK(dx_par.v == dx_ser.v);

    Tensor dw_par = w, dw_ser = w, db_par = b, db_ser = b;
    dw_par.zero();
    dw_ser.zero();
    db_par.zero();
    db_ser.zero();
    nn::kernels::conv2d_backward_params(x.data(), dy.data(), dw_par.data(),
                                        db_par.data(), s);
    nn::ref::conv2d_backward_params(x.data(), dy.data(), dw_ser.data(),
                                    db_ser.data(), s);
    CHECK(dw_par.v == dw_ser.v);
    CHECK(db_par.v == db_ser.v);
  }
}

TEST_CASE("conv2d_forward on a hand-computed case") {
  // 1x1x3x3 input, one 3x3 kernel, stride 2, pad 1: output 2x2
  Conv2dShape s{1, 1, 3, 3, 1};
  Tensor x{1, 1, 3, 3};
  x.v = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  Tensor w{1, 1, 3, 3};
  w.v = {0, 0, 0, 0, 1, 0, 0, 0, 0};  // identity kernel picks the centre
  Tensor b{1};
  b.v = {0.5};
  Tensor y{1, 1, 2, 2};
  nn::kernels::conv2d_forward(x.data(), w.data(), b.data(), y.data(), s);
  // output (oy,ox) reads input at (2*oy, 2*ox)
  CHECK(y.v[0] == doctest::Approx(1.5));
  CHECK(y.v[1] == doctest::Approx(3.5));
  CHECK(y.v[2] == doctest::Approx(7.5));
  CHECK(y.v[3] == doctest::Approx(9.5));
}

TEST_CASE("conv backward matches finite differences of the forward") {
  RandomStream rng(2);
  const Conv2dShape s{2, 2, 6, 5, 3};
  Tensor x{s.batch, s.c_in, s.h, s.w};
  Tensor w{s.c_out, s.c_in, 3, 3};
  Tensor b{s.c_out};
  fill_random(x, rng);
  fill_random(w, rng);
  fill_random(b, rng);
  Tensor dy{s.batch, s.c_out, s.out_h(), s.out_w()};
  fill_random(dy, rng);

  // scalar objective: sum(dy .* conv(x, w, b))
  auto objective = [&]() {
    Tensor y{s.batch, s.c_out, s.out_h(), s.out_w()};
    nn::kernels::conv2d_forward(x.data(), w.data(), b.data(), y.data(), s);
    double acc = 0.0;
    for (size_t i = 0; i < y.v.size(); ++i) acc += dy.v[i] * y.v[i];
    return acc;
  };

  Tensor dx = x, dw = w, db = b;
  dw.zero();
  db.zero();
  nn::kernels::conv2d_backward_input(dy.data(), w.data(), dx.data(), s);
  nn::kernels::conv2d_backward_params(x.data(), dy.data(), dw.data(),
                                      db.data(), s);

  const double h = 1e-6;
  RandomStream pick(3);
  for (int rep = 0; rep < 20; ++rep) {
    const size_t i = pick.integer(x.v.size());
    const double keep = x.v[i];
    x.v[i] = keep + h;
    const double up = objective();
    x.v[i] = keep - h;
    const double dn = objective();
    x.v[i] = keep;
    CHECK(dx.v[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
  }
  for (int rep = 0; rep < 20; ++rep) {
    const size_t i = pick.integer(w.v.size());
    const double keep = w.v[i];
    w.v[i] = keep + h;
    const double up = objective();
    w.v[i] = keep - h;
    const double dn = objective();
    w.v[i] = keep;
    CHECK(dw.v[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
  }
  {
    const double keep = b.v[1];
    b.v[1] = keep + h;
    const double up = objective();
    b.v[1] = keep - h;
    const double dn = objective();
    b.v[1] = keep;
    CHECK(db.v[1] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("affine kernels match finite differences and the reference") {
  RandomStream rng(4);
  const int batch = 3, in = 7, out = 5;
  Tensor x{batch, in}, w{out, in}, b{out}, dy{batch, out};
  fill_random(x, rng);
  fill_random(w, rng);
  fill_random(b, rng);
  fill_random(dy, rng);

  Tensor y{batch, out}, y_ref{batch, out};
  nn::kernels::affine_forward(x.data(), w.data(), b.data(), y.data(), batch,
                              in, out);
  nn::ref::affine_forward(x.data(), w.data(), b.data(), y_ref.data(), batch,
                          in, out);
  CHECK(y.v == y_ref.v);

  auto objective = [&]() {
    Tensor t{batch, out};
    nn::kernels::affine_forward(x.data(), w.data(), b.data(), t.data(), batch,
                                in, out);
    double acc = 0.0;
    for (size_t i = 0; i < t.v.size(); ++i) acc += dy.v[i] * t.v[i];
    return acc;
  };

  Tensor dx{batch, in}, dw{out, in}, db{out};
  nn::kernels::affine_backward_input(dy.data(), w.data(), dx.data(), batch,
                                     in, out);
  nn::kernels::affine_backward_params(x.data(), dy.data(), dw.data(),
                                      db.data(), batch, in, out);
  const double h = 1e-6;
  for (size_t i = 0; i < x.v.size(); i += 5) {
    const double keep = x.v[i];
    x.v[i] = keep + h;
    const double up = objective();
    x.v[i] = keep - h;
    const double dn = objective();
    x.v[i] = keep;
    CHECK(dx.v[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
  }
  for (size_t i = 0; i < w.v.size(); i += 7) {
    const double keep = w.v[i];
    w.v[i] = keep + h;
    const double up = objective();
    w.v[i] = keep - h;
    const double dn = objective();
    w.v[i] = keep;
    CHECK(dw.v[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("activations and their derivatives") {
  RandomStream rng(5);
  for (Activation a :
       {Activation::ReLU, Activation::Tanh, Activation::Softplus}) {
    Tensor x{64};
    fill_random(x, rng, 2.0);
    // keep clear of the ReLU kink so the finite difference is valid
    for (double& v : x.v)
      if (std::abs(v) < 1e-3) v = 0.1;

    Tensor y{64};
    nn::kernels::activation_forward(a, x.data(), y.data(), 64);
    Tensor dy{64};
    for (double& v : dy.v) v = 1.0;
    Tensor dx{64};
    nn::kernels::activation_backward(a, x.data(), dy.data(), dx.data(), 64);

    const double h = 1e-7;
    for (int i = 0; i < 64; i += 9) {
      Tensor xp = x, xm = x;
      xp.v[i] += h;
      xm.v[i] -= h;
      Tensor yp{64}, ym{64};
      nn::kernels::activation_forward(a, xp.data(), yp.data(), 64);
      nn::kernels::activation_forward(a, xm.data(), ym.data(), 64);
      CHECK(dx.v[i] ==
            doctest::Approx((yp.v[i] - ym.v[i]) / (2 * h)).epsilon(1e-4));
    }
  }
}

TEST_CASE("global average pooling") {
  RandomStream rng(6);
  const int batch = 2, c = 3, hw = 12;
  Tensor x{batch, c, hw};
  fill_random(x, rng);
  Tensor y{batch, c}, y_ref{batch, c};
  nn::kernels::global_avg_pool_forward(x.data(), y.data(), batch, c, hw);
  nn::ref::global_avg_pool_forward(x.data(), y_ref.data(), batch, c, hw);
  CHECK(y.v == y_ref.v);

  // forward value is the channel mean
  double expect = 0.0;
  for (int i = 0; i < hw; ++i) expect += x.v[i];
  CHECK(y.v[0] == doctest::Approx(expect / hw));

  Tensor dy{batch, c};
  fill_random(dy, rng);
  Tensor dx{batch, c, hw};
  nn::kernels::global_avg_pool_backward(dy.data(), dx.data(), batch, c, hw);
  CHECK(dx.v[0] == doctest::Approx(dy.v[0] / hw));
  CHECK(dx.v[hw] == doctest::Approx(dy.v[1] / hw));
}

TEST_CASE("softmax rows: normalized, stable, matches direct arithmetic") {
  RandomStream rng(7);
  Tensor logits{5, 6};
  fill_random(logits, rng, 3.0);
  logits.v[0] = 500.0;  // stability under large values
  Tensor probs{5, 6};
  nn::kernels::softmax_rows(logits.data(), probs.data(), 5, 6);
  for (int r = 0; r < 5; ++r) {
    double sum = 0.0;
    for (int c = 0; c < 6; ++c) {
      const double p = probs.v[r * 6 + c];
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  // direct oracle on a small row
  Tensor row{1, 3};
  row.v = {1.0, 2.0, 3.0};
  Tensor p{1, 3};
  nn::kernels::softmax_rows(row.data(), p.data(), 1, 3);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(p.v[0] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
  CHECK(p.v[2] == doctest::Approx(std::exp(3.0) / z).epsilon(1e-12));
}

TEST_CASE("Adam descends a quadratic and is deterministic") {
  std::vector<double> value{5.0, -3.0};
  std::vector<double> grad{0.0, 0.0};
  std::vector<nn::ParamView> params{
      {value.data(), grad.data(), 2, "p"}};
  nn::AdamConfig cfg;
  cfg.lr = 0.1;
  nn::Adam opt(cfg, params);

  std::vector<double> value2 = value, grad2 = grad;
  std::vector<nn::ParamView> params2{{value2.data(), grad2.data(), 2, "p"}};
  nn::Adam opt2(cfg, params2);

  for (int i = 0; i < 200; ++i) {
    grad[0] = 2.0 * value[0];
    grad[1] = 2.0 * value[1];
    opt.step(params);
    grad2[0] = 2.0 * value2[0];
    grad2[1] = 2.0 * value2[1];
    opt2.step(params2);
  }
  CHECK(std::abs(value[0]) < 0.5);
  CHECK(std::abs(value[1]) < 0.5);
  CHECK(value == value2);  // bitwise determinism
}

TEST_CASE("block_sum equals the serial sum and is order-stable") {
  RandomStream rng(8);
  std::vector<double> v(10001);
  for (double& x : v) x = rng.normal();
  const double parallel = block_sum(
      static_cast<int64_t>(v.size()), [&](int64_t i) { return v[i]; });
  double serial = 0.0;
  for (double x : v) serial += x;
  CHECK(parallel == doctest::Approx(serial).epsilon(1e-12));
  const double again = block_sum(
      static_cast<int64_t>(v.size()), [&](int64_t i) { return v[i]; });
  CHECK(parallel == again);
}
