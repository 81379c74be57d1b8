// autograd.hpp - reverse-mode automatic differentiation on Tensor
//
// A Var is a shared node in a dynamically built tape. Ops compute the forward
// value eagerly and register a closure that scatters the node's gradient back
// into its parents. Gradients are doubles end to end so finite-difference
// checks hold to tight tolerances.
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cvdx/tensor.hpp"

namespace cvdx::ag {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor val;
    Tensor grad;  // allocated on first use during backward
    bool requires_grad = false;
    bool grad_ready = false;
    std::vector<Var> parents;
    std::function<void(Node&)> backprop;

    Tensor& ensure_grad();
};

// graph construction can be disabled for pure inference (saves memory)
bool grad_enabled();
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();

private:
    bool prev_;
};

Var leaf(Tensor value, bool requires_grad = true);
Var constant(Tensor value);
Var constant_scalar(double v);

// runs backprop from a scalar root; accumulates into .grad of reachable leaves
void backward(const Var& root);
void zero_grad(const std::vector<Var>& params);

// ---- elementwise / scalar ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var neg(const Var& a);
Var relu(const Var& a);
Var silu(const Var& a);
Var sigmoid(const Var& a);
Var logv(const Var& a);
Var sqrtv(const Var& a);
Var divide(const Var& a, const Var& b);  // elementwise (used on scalars)

// ---- reductions ----
Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var dot(const Var& a, const Var& b);         // scalar
Var mse(const Var& a, const Var& b);         // mean squared error, scalar
Var mean_rows(const Var& a);                 // [N,D] -> [D]

// ---- broadcast helpers ----
Var add_channel_bias(const Var& x, const Var& bias);  // x [C,...], bias [C]
Var add_row_bias(const Var& x, const Var& bias);      // x [N,D], bias [D]

// ---- linear algebra ----
Var matmul(const Var& a, const Var& b);  // [m,k] x [k,n]
Var transpose2d(const Var& a);
Var linear(const Var& x, const Var& w, const Var& b);  // [N,in] x [in,out] + b
Var softmax_rows(const Var& a);

// ---- shape ----
Var reshape(const Var& a, std::vector<int> shape);
Var concat_rows(const std::vector<Var>& parts);  // [Ni,D] -> [sum Ni, D]
Var concat_cols(const std::vector<Var>& parts);  // [N,Di] -> [N, sum Di]
Var slice_rows(const Var& a, int row0, int row1);
Var slice_cols(const Var& a, int col0, int col1);
Var select_row(const Var& a, int row);           // [N,D] -> [D]
Var concat_channels(const std::vector<Var>& parts);  // rank>=3, dim 0
Var gather(const Var& a, std::vector<int> idx);      // rank-1 -> [idx.size()]

// ---- normalization ----
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
// x [C, spatial...]; gamma/beta [C]
Var group_norm(const Var& x, const Var& gamma, const Var& beta, int groups, double eps = 1e-5);

// ---- convolution / pooling ----
// x [Cin,H,W], w [Cout,Cin,kh,kw], b [Cout]
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// x [Cin,T,H,W], w [Cout,Cin,kt,kh,kw]; stride/pad given per (t,h,w)
Var conv3d(const Var& x, const Var& w, const Var& b, int st, int sh, int sw, int pt, int ph,
           int pw);
Var avg_pool2d(const Var& x, int k);                 // spatial, stride k
Var avg_pool3d_spatial(const Var& x, int k);         // pools H,W only
Var upsample_nearest2d(const Var& x, int factor);
Var spatial_mean_to_rows(const Var& x);  // [C,T,H,W] -> [T,C] (mean over H,W)
Var flatten_to_rows(const Var& x);       // [C,T,H,W] -> [T, C*H*W]

// ---- fused losses ----
// binary cross entropy of probabilities vs {0,1} targets, mean over elements,
// probabilities clamped to [eps, 1-eps]
Var bce(const Var& probs, const Tensor& targets, double eps = 1e-7);
Var hinge(const Var& s);  // max(0, s) elementwise

}  // namespace cvdx::ag
