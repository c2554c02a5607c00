#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace echopose::nn {

// Dense row-major double tensor; shape is informational, kernels take raw
// pointers plus explicit dims.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::initializer_list<int> s) : shape(s) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    v.assign(static_cast<size_t>(n), 0.0);
  }

  int64_t numel() const { return static_cast<int64_t>(v.size()); }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

enum class Activation { ReLU, Tanh, Softplus };

Activation activation_from_string(const std::string& s);
const char* to_string(Activation a);

// 3x3 convolution geometry (stride-2 "same"-padded backbone blocks by
// default, but kept general).
struct Conv2dShape {
  int batch = 1;
  int c_in = 1, h = 1, w = 1;
  int c_out = 1;
  int kernel = 3;
  int stride = 2;
  int pad = 1;

  int out_h() const { return (h + 2 * pad - kernel) / stride + 1; }
  int out_w() const { return (w + 2 * pad - kernel) / stride + 1; }
  int64_t in_elems() const { return int64_t(batch) * c_in * h * w; }
  int64_t out_elems() const { return int64_t(batch) * c_out * out_h() * out_w(); }
  int64_t weight_elems() const { return int64_t(c_out) * c_in * kernel * kernel; }
};

// OpenMP kernels. Every parallel loop writes disjoint outputs with a fixed
// inner summation order, so results are bit-identical to the serial
// reference and independent of the thread count.
namespace kernels {

// x: B*Cin*H*W, w: Cout*Cin*K*K, bias: Cout, y: B*Cout*OH*OW
void conv2d_forward(const double* x, const double* w, const double* bias,
                    double* y, const Conv2dShape& s);
// dx gathered per input element
void conv2d_backward_input(const double* dy, const double* w, double* dx,
                           const Conv2dShape& s);
// dw/db accumulated per weight slot (added to existing contents)
void conv2d_backward_params(const double* x, const double* dy, double* dw,
                            double* db, const Conv2dShape& s);

// y = x @ w^T + b; x: B*In, w: Out*In, b: Out, y: B*Out
void affine_forward(const double* x, const double* w, const double* b,
                    double* y, int batch, int in, int out);
void affine_backward_input(const double* dy, const double* w, double* dx,
                           int batch, int in, int out);
void affine_backward_params(const double* x, const double* dy, double* dw,
                            double* db, int batch, int in, int out);

void activation_forward(Activation a, const double* x, double* y, int64_t n);
// dx = dy * f'(x); x is the pre-activation
void activation_backward(Activation a, const double* x, const double* dy,
                         double* dx, int64_t n);

// x: B*C*HW -> y: B*C
void global_avg_pool_forward(const double* x, double* y, int batch, int c,
                             int hw);
void global_avg_pool_backward(const double* dy, double* dx, int batch, int c,
                              int hw);

// row-wise softmax with max subtraction
void softmax_rows(const double* logits, double* probs, int rows, int cols);

}  // namespace kernels

// Serial reference implementations, kept for tests and the kernel benchmark.
namespace ref {

void conv2d_forward(const double* x, const double* w, const double* bias,
                    double* y, const Conv2dShape& s);
void conv2d_backward_input(const double* dy, const double* w, double* dx,
                           const Conv2dShape& s);
void conv2d_backward_params(const double* x, const double* dy, double* dw,
                            double* db, const Conv2dShape& s);
void affine_forward(const double* x, const double* w, const double* b,
                    double* y, int batch, int in, int out);
void global_avg_pool_forward(const double* x, double* y, int batch, int c,
                             int hw);
void softmax_rows(const double* logits, double* probs, int rows, int cols);

}  // namespace ref

// Adam over a fixed set of parameter spans.
struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct ParamView {
  double* value = nullptr;
  double* grad = nullptr;
  int64_t n = 0;
  std::string name;
};

class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig cfg, const std::vector<ParamView>& params);
  void step(const std::vector<ParamView>& params);
  int64_t steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  int64_t t_ = 0;
};

}  // namespace echopose::nn
