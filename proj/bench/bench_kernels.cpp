// Timing comparison of the OpenMP kernels against the serial reference on
// backbone-sized workloads. Not part of the test suite.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "echopose/nn.hpp"
#include "echopose/parallel.hpp"
#include "echopose/rng.hpp"

using namespace echopose;
using nn::Conv2dShape;
using nn::Tensor;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void fill_random(Tensor& t, RandomStream& rng) {
  for (double& v : t.v) v = rng.normal();
}

}  // namespace

int main() {
  init_workers_from_env();
  std::printf("workers: %d\n", worker_count());
  std::printf("%-28s %12s %12s %8s\n", "kernel", "serial ms", "openmp ms",
              "speedup");

  RandomStream rng(7);

  // backbone block shapes at desk scale (batch 8, 64x64 input)
  const std::vector<Conv2dShape> shapes = {
      {8, 8, 64, 64, 8},
      {8, 8, 32, 32, 16},
      {8, 16, 16, 16, 24},
      {8, 24, 8, 8, 32},
  };

  for (const Conv2dShape& s : shapes) {
    Tensor x{s.batch, s.c_in, s.h, s.w};
    Tensor w{s.c_out, s.c_in, s.kernel, s.kernel};
    Tensor b{s.c_out};
    Tensor y{s.batch, s.c_out, s.out_h(), s.out_w()};
    Tensor dy = y, dx = x, dw = w, db = b;
    fill_random(x, rng);
    fill_random(w, rng);
    fill_random(dy, rng);

    char label[64];
    std::snprintf(label, sizeof(label), "conv_fwd %dx%dx%dx%d->%d", s.batch,
                  s.c_in, s.h, s.w, s.c_out);
    const double serial = time_ms(
        [&] { nn::ref::conv2d_forward(x.data(), w.data(), b.data(), y.data(), s); },
        20);
    const double par = time_ms(
        [&] {
          nn::kernels::conv2d_forward(x.data(), w.data(), b.data(), y.data(), s);
        },
        20);
    std::printf("%-28s %12.3f %12.3f %7.2fx\n", label, serial, par,
                serial / par);

    std::snprintf(label, sizeof(label), "conv_bwd_in %dch", s.c_in);
    const double serial_bi = time_ms(
        [&] { nn::ref::conv2d_backward_input(dy.data(), w.data(), dx.data(), s); },
        20);
    const double par_bi = time_ms(
        [&] {
          nn::kernels::conv2d_backward_input(dy.data(), w.data(), dx.data(), s);
        },
        20);
    std::printf("%-28s %12.3f %12.3f %7.2fx\n", label, serial_bi, par_bi,
                serial_bi / par_bi);

    std::snprintf(label, sizeof(label), "conv_bwd_w %d->%d", s.c_in, s.c_out);
    const double serial_bw = time_ms(
        [&] {
          dw.zero();
          db.zero();
          nn::ref::conv2d_backward_params(x.data(), dy.data(), dw.data(),
                                          db.data(), s);
        },
        20);
    const double par_bw = time_ms(
        [&] {
          dw.zero();
          db.zero();
          nn::kernels::conv2d_backward_params(x.data(), dy.data(), dw.data(),
                                              db.data(), s);
        },
        20);
    std::printf("%-28s %12.3f %12.3f %7.2fx\n", label, serial_bw, par_bw,
                serial_bw / par_bw);
  }

  {
    const int batch = 256, in = 32, out = 64;
    Tensor x{batch, in}, w{out, in}, b{out}, y{batch, out};
    fill_random(x, rng);
    fill_random(w, rng);
    const double serial = time_ms(
        [&] { nn::ref::affine_forward(x.data(), w.data(), b.data(), y.data(), batch, in, out); },
        200);
    const double par = time_ms(
        [&] {
          nn::kernels::affine_forward(x.data(), w.data(), b.data(), y.data(),
                                      batch, in, out);
        },
        200);
    std::printf("%-28s %12.3f %12.3f %7.2fx\n", "affine_fwd 256x32->64",
                serial, par, serial / par);
  }

  return 0;
}
