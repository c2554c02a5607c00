#include <algorithm>
#include <cmath>

#include "echopose/errors.hpp"
#include "echopose/nn.hpp"

namespace echopose::nn {

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "tanh") return Activation::Tanh;
  if (s == "softplus") return Activation::Softplus;
  throw InvalidParameterError("unknown activation: " + s);
}

const char* to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Softplus: return "softplus";
  }
  return "?";
}

namespace {

inline double act_eval(Activation a, double x) {
  switch (a) {
    case Activation::ReLU: return x > 0.0 ? x : 0.0;
    case Activation::Tanh: return std::tanh(x);
    case Activation::Softplus:
      // numerically stable log(1 + e^x)
      return x > 30.0 ? x : std::log1p(std::exp(x));
  }
  return 0.0;
}

inline double act_deriv(Activation a, double x) {
  switch (a) {
    case Activation::ReLU: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::Softplus: return 1.0 / (1.0 + std::exp(-x));
  }
  return 0.0;
}

// Shared inner bodies: the OpenMP kernels and the serial reference run the
// very same per-element code so their outputs are bit-identical.

inline double conv_out_elem(const double* x, const double* w,
                            const double* bias, const Conv2dShape& s, int b,
                            int oc, int oy, int ox) {
  const int oh = s.out_h(), ow = s.out_w();
  (void)oh;
  (void)ow;
  double acc = bias ? bias[oc] : 0.0;
  for (int ic = 0; ic < s.c_in; ++ic) {
    const double* xc = x + ((int64_t(b) * s.c_in + ic) * s.h) * s.w;
    const double* wc = w + ((int64_t(oc) * s.c_in + ic) * s.kernel) * s.kernel;
    for (int ky = 0; ky < s.kernel; ++ky) {
      const int iy = oy * s.stride + ky - s.pad;
      if (iy < 0 || iy >= s.h) continue;
      for (int kx = 0; kx < s.kernel; ++kx) {
        const int ix = ox * s.stride + kx - s.pad;
        if (ix < 0 || ix >= s.w) continue;
        acc += wc[ky * s.kernel + kx] * xc[iy * s.w + ix];
      }
    }
  }
  return acc;
}

inline double conv_in_grad_elem(const double* dy, const double* w,
                                const Conv2dShape& s, int b, int ic, int iy,
                                int ix) {
  const int oh = s.out_h(), ow = s.out_w();
  // valid (kernel row, output row) pairs are channel-independent
  int kys[8], oys[8], n_y = 0;
  for (int ky = 0; ky < s.kernel; ++ky) {
    const int num = iy + s.pad - ky;
    if (num < 0 || num % s.stride != 0) continue;
    const int oy = num / s.stride;
    if (oy >= oh) continue;
    kys[n_y] = ky;
    oys[n_y] = oy;
    ++n_y;
  }
  int kxs[8], oxs[8], n_x = 0;
  for (int kx = 0; kx < s.kernel; ++kx) {
    const int num = ix + s.pad - kx;
    if (num < 0 || num % s.stride != 0) continue;
    const int ox = num / s.stride;
    if (ox >= ow) continue;
    kxs[n_x] = kx;
    oxs[n_x] = ox;
    ++n_x;
  }

  double acc = 0.0;
  for (int oc = 0; oc < s.c_out; ++oc) {
    const double* dyc = dy + ((int64_t(b) * s.c_out + oc) * oh) * ow;
    const double* wc = w + ((int64_t(oc) * s.c_in + ic) * s.kernel) * s.kernel;
    for (int a = 0; a < n_y; ++a)
      for (int e = 0; e < n_x; ++e)
        acc += wc[kys[a] * s.kernel + kxs[e]] * dyc[oys[a] * ow + oxs[e]];
  }
  return acc;
}

inline double conv_weight_grad_elem(const double* x, const double* dy,
                                    const Conv2dShape& s, int oc, int ic,
                                    int ky, int kx) {
  const int oh = s.out_h(), ow = s.out_w();
  double acc = 0.0;
  for (int b = 0; b < s.batch; ++b) {
    const double* dyc = dy + ((int64_t(b) * s.c_out + oc) * oh) * ow;
    const double* xc = x + ((int64_t(b) * s.c_in + ic) * s.h) * s.w;
    for (int oy = 0; oy < oh; ++oy) {
      const int iy = oy * s.stride + ky - s.pad;
      if (iy < 0 || iy >= s.h) continue;
      for (int ox = 0; ox < ow; ++ox) {
        const int ix = ox * s.stride + kx - s.pad;
        if (ix < 0 || ix >= s.w) continue;
        acc += dyc[oy * ow + ox] * xc[iy * s.w + ix];
      }
    }
  }
  return acc;
}

inline double conv_bias_grad_elem(const double* dy, const Conv2dShape& s,
                                  int oc) {
  const int oh = s.out_h(), ow = s.out_w();
  double acc = 0.0;
  for (int b = 0; b < s.batch; ++b) {
    const double* dyc = dy + ((int64_t(b) * s.c_out + oc) * oh) * ow;
    for (int i = 0; i < oh * ow; ++i) acc += dyc[i];
  }
  return acc;
}

inline void softmax_row(const double* in, double* out, int cols) {
  double mx = in[0];
  for (int c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
  double sum = 0.0;
  for (int c = 0; c < cols; ++c) {
    out[c] = std::exp(in[c] - mx);
    sum += out[c];
  }
  const double inv = 1.0 / sum;
  for (int c = 0; c < cols; ++c) out[c] *= inv;
}

}  // namespace

// ---------------------------------------------------------------------------
// OpenMP kernels
// ---------------------------------------------------------------------------

namespace kernels {

void conv2d_forward(const double* x, const double* w, const double* bias,
                    double* y, const Conv2dShape& s) {
  const int oh = s.out_h(), ow = s.out_w();
  const int64_t n_out = int64_t(s.batch) * s.c_out * oh * ow;
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n_out; ++i) {
    const int ox = static_cast<int>(i % ow);
    const int oy = static_cast<int>((i / ow) % oh);
    const int oc = static_cast<int>((i / (int64_t(ow) * oh)) % s.c_out);
    const int b = static_cast<int>(i / (int64_t(ow) * oh * s.c_out));
    y[i] = conv_out_elem(x, w, bias, s, b, oc, oy, ox);
  }
}

void conv2d_backward_input(const double* dy, const double* w, double* dx,
                           const Conv2dShape& s) {
  const int64_t n_in = s.in_elems();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n_in; ++i) {
    const int ix = static_cast<int>(i % s.w);
    const int iy = static_cast<int>((i / s.w) % s.h);
    const int ic = static_cast<int>((i / (int64_t(s.w) * s.h)) % s.c_in);
    const int b = static_cast<int>(i / (int64_t(s.w) * s.h * s.c_in));
    dx[i] = conv_in_grad_elem(dy, w, s, b, ic, iy, ix);
  }
}

void conv2d_backward_params(const double* x, const double* dy, double* dw,
                            double* db, const Conv2dShape& s) {
  const int64_t n_w = s.weight_elems();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n_w; ++i) {
    const int kx = static_cast<int>(i % s.kernel);
    const int ky = static_cast<int>((i / s.kernel) % s.kernel);
    const int ic =
        static_cast<int>((i / (int64_t(s.kernel) * s.kernel)) % s.c_in);
    const int oc =
        static_cast<int>(i / (int64_t(s.kernel) * s.kernel * s.c_in));
    dw[i] += conv_weight_grad_elem(x, dy, s, oc, ic, ky, kx);
  }
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < s.c_out; ++oc)
    db[oc] += conv_bias_grad_elem(dy, s, oc);
}

void affine_forward(const double* x, const double* w, const double* b,
                    double* y, int batch, int in, int out) {
#pragma omp parallel for schedule(static) collapse(2)
  for (int bi = 0; bi < batch; ++bi) {
    for (int o = 0; o < out; ++o) {
      const double* xr = x + int64_t(bi) * in;
      const double* wr = w + int64_t(o) * in;
      double acc = b ? b[o] : 0.0;
      for (int i = 0; i < in; ++i) acc += wr[i] * xr[i];
      y[int64_t(bi) * out + o] = acc;
    }
  }
}

void affine_backward_input(const double* dy, const double* w, double* dx,
                           int batch, int in, int out) {
#pragma omp parallel for schedule(static) collapse(2)
  for (int bi = 0; bi < batch; ++bi) {
    for (int i = 0; i < in; ++i) {
      double acc = 0.0;
      for (int o = 0; o < out; ++o)
        acc += dy[int64_t(bi) * out + o] * w[int64_t(o) * in + i];
      dx[int64_t(bi) * in + i] = acc;
    }
  }
}

void affine_backward_params(const double* x, const double* dy, double* dw,
                            double* db, int batch, int in, int out) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < out; ++o) {
    for (int i = 0; i < in; ++i) {
      double acc = 0.0;
      for (int bi = 0; bi < batch; ++bi)
        acc += dy[int64_t(bi) * out + o] * x[int64_t(bi) * in + i];
      dw[int64_t(o) * in + i] += acc;
    }
    double acc = 0.0;
    for (int bi = 0; bi < batch; ++bi) acc += dy[int64_t(bi) * out + o];
    db[o] += acc;
  }
}

void activation_forward(Activation a, const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] = act_eval(a, x[i]);
}

void activation_backward(Activation a, const double* x, const double* dy,
                         double* dx, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) dx[i] = dy[i] * act_deriv(a, x[i]);
}

void global_avg_pool_forward(const double* x, double* y, int batch, int c,
                             int hw) {
  const double inv = 1.0 / hw;
#pragma omp parallel for schedule(static) collapse(2)
  for (int b = 0; b < batch; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const double* xc = x + (int64_t(b) * c + ch) * hw;
      double acc = 0.0;
      for (int i = 0; i < hw; ++i) acc += xc[i];
      y[int64_t(b) * c + ch] = acc * inv;
    }
  }
}

void global_avg_pool_backward(const double* dy, double* dx, int batch, int c,
                              int hw) {
  const double inv = 1.0 / hw;
  const int64_t n = int64_t(batch) * c * hw;
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) dx[i] = dy[i / hw] * inv;
}

void softmax_rows(const double* logits, double* probs, int rows, int cols) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r)
    softmax_row(logits + int64_t(r) * cols, probs + int64_t(r) * cols, cols);
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// Serial reference
// ---------------------------------------------------------------------------

namespace ref {

void conv2d_forward(const double* x, const double* w, const double* bias,
                    double* y, const Conv2dShape& s) {
  const int oh = s.out_h(), ow = s.out_w();
  int64_t i = 0;
  for (int b = 0; b < s.batch; ++b)
    for (int oc = 0; oc < s.c_out; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
          y[i++] = conv_out_elem(x, w, bias, s, b, oc, oy, ox);
}

void conv2d_backward_input(const double* dy, const double* w, double* dx,
                           const Conv2dShape& s) {
  int64_t i = 0;
  for (int b = 0; b < s.batch; ++b)
    for (int ic = 0; ic < s.c_in; ++ic)
      for (int iy = 0; iy < s.h; ++iy)
        for (int ix = 0; ix < s.w; ++ix)
          dx[i++] = conv_in_grad_elem(dy, w, s, b, ic, iy, ix);
}

void conv2d_backward_params(const double* x, const double* dy, double* dw,
                            double* db, const Conv2dShape& s) {
  int64_t i = 0;
  for (int oc = 0; oc < s.c_out; ++oc)
    for (int ic = 0; ic < s.c_in; ++ic)
      for (int ky = 0; ky < s.kernel; ++ky)
        for (int kx = 0; kx < s.kernel; ++kx)
          dw[i++] += conv_weight_grad_elem(x, dy, s, oc, ic, ky, kx);
  for (int oc = 0; oc < s.c_out; ++oc)
    db[oc] += conv_bias_grad_elem(dy, s, oc);
}

void affine_forward(const double* x, const double* w, const double* b,
                    double* y, int batch, int in, int out) {
  for (int bi = 0; bi < batch; ++bi) {
    for (int o = 0; o < out; ++o) {
      double acc = b ? b[o] : 0.0;
      for (int i = 0; i < in; ++i)
        acc += w[int64_t(o) * in + i] * x[int64_t(bi) * in + i];
      y[int64_t(bi) * out + o] = acc;
    }
  }
}

void global_avg_pool_forward(const double* x, double* y, int batch, int c,
                             int hw) {
  const double inv = 1.0 / hw;
  for (int b = 0; b < batch; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const double* xc = x + (int64_t(b) * c + ch) * hw;
      double acc = 0.0;
      for (int i = 0; i < hw; ++i) acc += xc[i];
      y[int64_t(b) * c + ch] = acc * inv;
    }
  }
}

void softmax_rows(const double* logits, double* probs, int rows, int cols) {
  for (int r = 0; r < rows; ++r)
    softmax_row(logits + int64_t(r) * cols, probs + int64_t(r) * cols, cols);
}

}  // namespace ref

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

Adam::Adam(AdamConfig cfg, const std::vector<ParamView>& params) : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const ParamView& p : params) {
    m_.emplace_back(p.n, 0.0);
    v_.emplace_back(p.n, 0.0);
  }
}

void Adam::step(const std::vector<ParamView>& params) {
  if (params.size() != m_.size())
    throw ContractViolationError("Adam::step: parameter set changed");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t p = 0; p < params.size(); ++p) {
    double* value = params[p].value;
    const double* grad = params[p].grad;
    double* m = m_[p].data();
    double* v = v_[p].data();
    const int64_t n = params[p].n;
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * grad[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace echopose::nn
