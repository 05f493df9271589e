#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "pointmac/point_cloud.hpp"

namespace pointmac {

using Mat = Eigen::MatrixXd;

// Reverse-mode autodiff over dense matrices. A tape is built per forward
// pass (define-by-run); backward() walks nodes in reverse creation order.
// Leaves created with input() receive gradients, constant() leaves do not.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  int input(const Mat& v);
  int constant(const Mat& v);

  int add(int a, int b);
  int add_n(const std::vector<int>& ids);
  int scale(int a, double s);
  int cmul(int a, int b);
  int matmul(int a, int b);     // A * B
  int matmul_nt(int a, int b);  // A * B^T
  int add_bias_row(int m, int bias);  // bias is 1 x C, broadcast over rows
  int relu(int a);
  int tanh_(int a);
  int concat_rows(const std::vector<int>& ids);
  int concat_cols(const std::vector<int>& ids);
  int slice_rows(int a, int start, int count);
  int slice_cols(int a, int start, int count);
  int gather_rows(int a, std::vector<int> rows);
  int repeat_rows_interleave(int a, int k);  // each row duplicated k times
  // Column-wise max over the rows of each segment; empty segments yield 0.
  int segment_max_rows(int a, std::vector<int> segment_ids, int n_segments);
  int max_over_rows(int a);              // N x C -> 1 x C
  int broadcast_row(int a, int n_rows);  // 1 x C -> n x C
  int reshape_rowmajor(int a, int rows, int cols);
  // Row-wise softmax over entries where mask != 0; masked entries give 0,
  // fully masked rows give all-zero output.
  int rows_softmax_masked(int a, const Mat& mask);
  int layer_norm_rows(int a, double eps = 1e-5);
  // Symmetric squared chamfer between the N x 3 value and a fixed target.
  // Nearest-neighbor assignments are frozen at forward time.
  int chamfer_l2_to_const(int a, const Points& target);
  int sum_all(int a);  // -> 1 x 1

  const Mat& value(int id) const;
  // Gradient accumulated by the last backward(); empty if none reached it.
  const Mat& grad(int id) const;
  double scalar(int id) const;  // value of a 1 x 1 node

  // Seeds d(output)/d(output) = 1 (output must be 1 x 1) and accumulates
  // gradients into every input() leaf that influences it.
  void backward(int output);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Mat value;
    Mat grad;  // empty until touched by backward
    bool requires_grad = false;
    std::function<void()> backprop;  // empty for leaves
  };

  int push(Mat value, bool requires_grad, std::function<void()> backprop);
  Mat& grad_ref(int id);  // zero-initializes on first access
  void check(int id) const;

  std::vector<Node> nodes_;
  Mat empty_;
};

}  // namespace pointmac
