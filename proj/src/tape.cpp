#include "pointmac/tape.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pointmac/metrics.hpp"

namespace pointmac {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument("tape: " + what);
}

}  // namespace

int Tape::push(Mat value, bool requires_grad, std::function<void()> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::check(int id) const {
  require(id >= 0 && id < size(), "node id out of range");
}

Mat& Tape::grad_ref(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

const Mat& Tape::value(int id) const {
  check(id);
  return nodes_[id].value;
}

const Mat& Tape::grad(int id) const {
  check(id);
  return nodes_[id].grad.size() ? nodes_[id].grad : empty_;
}

double Tape::scalar(int id) const {
  const Mat& v = value(id);
  require(v.rows() == 1 && v.cols() == 1, "scalar() needs a 1x1 node");
  return v(0, 0);
}

int Tape::input(const Mat& v) { return push(v, true, {}); }

int Tape::constant(const Mat& v) { return push(v, false, {}); }

int Tape::add(int a, int b) {
  check(a);
  check(b);
  const Mat &va = nodes_[a].value, &vb = nodes_[b].value;
  require(va.rows() == vb.rows() && va.cols() == vb.cols(),
          "add: shape mismatch");
  bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  int r = push(va + vb, rg, {});
  nodes_[r].backprop = [this, r, a, b] {
    const Mat& g = nodes_[r].grad;
    if (nodes_[a].requires_grad) grad_ref(a) += g;
    if (nodes_[b].requires_grad) grad_ref(b) += g;
  };
  return r;
}

int Tape::add_n(const std::vector<int>& ids) {
  require(!ids.empty(), "add_n: empty list");
  int acc = ids[0];
  for (size_t i = 1; i < ids.size(); ++i) acc = add(acc, ids[i]);
  return acc;
}

int Tape::scale(int a, double s) {
  check(a);
  int r = push(nodes_[a].value * s, nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a, s] {
    if (nodes_[a].requires_grad) grad_ref(a) += s * nodes_[r].grad;
  };
  return r;
}

int Tape::cmul(int a, int b) {
  check(a);
  check(b);
  const Mat &va = nodes_[a].value, &vb = nodes_[b].value;
  require(va.rows() == vb.rows() && va.cols() == vb.cols(),
          "cmul: shape mismatch");
  bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  int r = push(va.cwiseProduct(vb), rg, {});
  nodes_[r].backprop = [this, r, a, b] {
    const Mat& g = nodes_[r].grad;
    if (nodes_[a].requires_grad)
      grad_ref(a) += g.cwiseProduct(nodes_[b].value);
    if (nodes_[b].requires_grad)
      grad_ref(b) += g.cwiseProduct(nodes_[a].value);
  };
  return r;
}

int Tape::matmul(int a, int b) {
  check(a);
  check(b);
  const Mat &va = nodes_[a].value, &vb = nodes_[b].value;
  require(va.cols() == vb.rows(), "matmul: inner dimension mismatch");
  bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  int r = push(va * vb, rg, {});
  nodes_[r].backprop = [this, r, a, b] {
    const Mat& g = nodes_[r].grad;
    if (nodes_[a].requires_grad)
      grad_ref(a) += g * nodes_[b].value.transpose();
    if (nodes_[b].requires_grad)
      grad_ref(b) += nodes_[a].value.transpose() * g;
  };
  return r;
}

int Tape::matmul_nt(int a, int b) {
  check(a);
  check(b);
  const Mat &va = nodes_[a].value, &vb = nodes_[b].value;
  require(va.cols() == vb.cols(), "matmul_nt: column mismatch");
  bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  int r = push(va * vb.transpose(), rg, {});
  nodes_[r].backprop = [this, r, a, b] {
    const Mat& g = nodes_[r].grad;
    if (nodes_[a].requires_grad) grad_ref(a) += g * nodes_[b].value;
    if (nodes_[b].requires_grad)
      grad_ref(b) += g.transpose() * nodes_[a].value;
  };
  return r;
}

int Tape::add_bias_row(int m, int bias) {
  check(m);
  check(bias);
  const Mat &vm = nodes_[m].value, &vb = nodes_[bias].value;
  require(vb.rows() == 1 && vb.cols() == vm.cols(),
          "add_bias_row: bias must be 1 x cols");
  bool rg = nodes_[m].requires_grad || nodes_[bias].requires_grad;
  Mat out = vm;
  out.rowwise() += vb.row(0);
  int r = push(std::move(out), rg, {});
  nodes_[r].backprop = [this, r, m, bias] {
    const Mat& g = nodes_[r].grad;
    if (nodes_[m].requires_grad) grad_ref(m) += g;
    if (nodes_[bias].requires_grad)
      grad_ref(bias) += g.colwise().sum();
  };
  return r;
}

int Tape::relu(int a) {
  check(a);
  int r = push(nodes_[a].value.cwiseMax(0.0), nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a] {
    if (!nodes_[a].requires_grad) return;
    const Mat& g = nodes_[r].grad;
    const Mat& va = nodes_[a].value;
    grad_ref(a) += g.cwiseProduct(
        (va.array() > 0.0).cast<double>().matrix());
  };
  return r;
}

int Tape::tanh_(int a) {
  check(a);
  int r = push(nodes_[a].value.array().tanh().matrix(),
               nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a] {
    if (!nodes_[a].requires_grad) return;
    const Mat& g = nodes_[r].grad;
    const Mat& y = nodes_[r].value;
    grad_ref(a) += g.cwiseProduct((1.0 - y.array().square()).matrix());
  };
  return r;
}

int Tape::concat_rows(const std::vector<int>& ids) {
  require(!ids.empty(), "concat_rows: empty list");
  int rows = 0;
  int cols = -1;
  bool rg = false;
  for (int id : ids) {
    check(id);
    const Mat& v = nodes_[id].value;
    if (cols < 0) cols = static_cast<int>(v.cols());
    require(v.cols() == cols, "concat_rows: column mismatch");
    rows += static_cast<int>(v.rows());
    rg = rg || nodes_[id].requires_grad;
  }
  Mat out(rows, cols);
  int at = 0;
  for (int id : ids) {
    const Mat& v = nodes_[id].value;
    out.middleRows(at, v.rows()) = v;
    at += static_cast<int>(v.rows());
  }
  int r = push(std::move(out), rg, {});
  std::vector<int> parts = ids;
  nodes_[r].backprop = [this, r, parts] {
    const Mat& g = nodes_[r].grad;
    int at = 0;
    for (int id : parts) {
      int n = static_cast<int>(nodes_[id].value.rows());
      if (nodes_[id].requires_grad) grad_ref(id) += g.middleRows(at, n);
      at += n;
    }
  };
  return r;
}

int Tape::concat_cols(const std::vector<int>& ids) {
  require(!ids.empty(), "concat_cols: empty list");
  int cols = 0;
  int rows = -1;
  bool rg = false;
  for (int id : ids) {
    check(id);
    const Mat& v = nodes_[id].value;
    if (rows < 0) rows = static_cast<int>(v.rows());
    require(v.rows() == rows, "concat_cols: row mismatch");
    cols += static_cast<int>(v.cols());
    rg = rg || nodes_[id].requires_grad;
  }
  Mat out(rows, cols);
  int at = 0;
  for (int id : ids) {
    const Mat& v = nodes_[id].value;
    out.middleCols(at, v.cols()) = v;
    at += static_cast<int>(v.cols());
  }
  int r = push(std::move(out), rg, {});
  std::vector<int> parts = ids;
  nodes_[r].backprop = [this, r, parts] {
    const Mat& g = nodes_[r].grad;
    int at = 0;
    for (int id : parts) {
      int n = static_cast<int>(nodes_[id].value.cols());
      if (nodes_[id].requires_grad) grad_ref(id) += g.middleCols(at, n);
      at += n;
    }
  };
  return r;
}

int Tape::slice_rows(int a, int start, int count) {
  check(a);
  const Mat& v = nodes_[a].value;
  require(start >= 0 && count >= 0 && start + count <= v.rows(),
          "slice_rows: range out of bounds");
  int r = push(v.middleRows(start, count), nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a, start, count] {
    if (nodes_[a].requires_grad)
      grad_ref(a).middleRows(start, count) += nodes_[r].grad;
  };
  return r;
}

int Tape::slice_cols(int a, int start, int count) {
  check(a);
  const Mat& v = nodes_[a].value;
  require(start >= 0 && count >= 0 && start + count <= v.cols(),
          "slice_cols: range out of bounds");
  int r = push(v.middleCols(start, count), nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a, start, count] {
    if (nodes_[a].requires_grad)
      grad_ref(a).middleCols(start, count) += nodes_[r].grad;
  };
  return r;
}

int Tape::gather_rows(int a, std::vector<int> rows) {
  check(a);
  const Mat& v = nodes_[a].value;
  for (int i : rows) {
    require(i >= 0 && i < v.rows(), "gather_rows: index out of range");
  }
  Mat out(static_cast<int>(rows.size()), v.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(i) = v.row(rows[i]);
  int r = push(std::move(out), nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a, rows = std::move(rows)] {
    if (!nodes_[a].requires_grad) return;
    const Mat& g = nodes_[r].grad;
    Mat& ga = grad_ref(a);
    for (size_t i = 0; i < rows.size(); ++i) ga.row(rows[i]) += g.row(i);
  };
  return r;
}

int Tape::repeat_rows_interleave(int a, int k) {
  check(a);
  require(k >= 1, "repeat_rows_interleave: k must be >= 1");
  const Mat& v = nodes_[a].value;
  Mat out(v.rows() * k, v.cols());
  for (int i = 0; i < v.rows(); ++i) {
    for (int j = 0; j < k; ++j) out.row(i * k + j) = v.row(i);
  }
  int r = push(std::move(out), nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a, k] {
    if (!nodes_[a].requires_grad) return;
    const Mat& g = nodes_[r].grad;
    Mat& ga = grad_ref(a);
    for (int i = 0; i < ga.rows(); ++i) {
      for (int j = 0; j < k; ++j) ga.row(i) += g.row(i * k + j);
    }
  };
  return r;
}

int Tape::segment_max_rows(int a, std::vector<int> segment_ids,
                           int n_segments) {
  check(a);
  const Mat& v = nodes_[a].value;
  require(static_cast<int>(segment_ids.size()) == v.rows(),
          "segment_max_rows: one segment id per row required");
  require(n_segments >= 1, "segment_max_rows: need at least one segment");
  for (int s : segment_ids) {
    require(s >= 0 && s < n_segments, "segment_max_rows: id out of range");
  }
  const int cols = static_cast<int>(v.cols());
  Mat out = Mat::Zero(n_segments, cols);
  Eigen::MatrixXi argrow = Eigen::MatrixXi::Constant(n_segments, cols, -1);
  for (int i = 0; i < v.rows(); ++i) {
    int s = segment_ids[i];
    for (int c = 0; c < cols; ++c) {
      if (argrow(s, c) < 0 || v(i, c) > out(s, c)) {
        out(s, c) = v(i, c);
        argrow(s, c) = i;
      }
    }
  }
  // empty segments stay at zero with no argmax
  int r = push(std::move(out), nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a, argrow = std::move(argrow)] {
    if (!nodes_[a].requires_grad) return;
    const Mat& g = nodes_[r].grad;
    Mat& ga = grad_ref(a);
    for (int s = 0; s < g.rows(); ++s) {
      for (int c = 0; c < g.cols(); ++c) {
        if (argrow(s, c) >= 0) ga(argrow(s, c), c) += g(s, c);
      }
    }
  };
  return r;
}

int Tape::max_over_rows(int a) {
  check(a);
  const Mat& v = nodes_[a].value;
  require(v.rows() >= 1, "max_over_rows: empty input");
  const int cols = static_cast<int>(v.cols());
  Mat out(1, cols);
  std::vector<int> argrow(cols, 0);
  for (int c = 0; c < cols; ++c) {
    double best = v(0, c);
    int bi = 0;
    for (int i = 1; i < v.rows(); ++i) {
      if (v(i, c) > best) {
        best = v(i, c);
        bi = i;
      }
    }
    out(0, c) = best;
    argrow[c] = bi;
  }
  int r = push(std::move(out), nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a, argrow = std::move(argrow)] {
    if (!nodes_[a].requires_grad) return;
    const Mat& g = nodes_[r].grad;
    Mat& ga = grad_ref(a);
    for (int c = 0; c < g.cols(); ++c) ga(argrow[c], c) += g(0, c);
  };
  return r;
}

int Tape::broadcast_row(int a, int n_rows) {
  check(a);
  const Mat& v = nodes_[a].value;
  require(v.rows() == 1, "broadcast_row: input must be 1 x C");
  require(n_rows >= 1, "broadcast_row: need at least one row");
  Mat out = v.row(0).replicate(n_rows, 1);
  int r = push(std::move(out), nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a] {
    if (nodes_[a].requires_grad)
      grad_ref(a) += nodes_[r].grad.colwise().sum();
  };
  return r;
}

int Tape::reshape_rowmajor(int a, int rows, int cols) {
  check(a);
  const Mat& v = nodes_[a].value;
  require(rows >= 0 && cols >= 0 &&
              static_cast<long>(rows) * cols == v.rows() * v.cols(),
          "reshape_rowmajor: element count mismatch");
  const int in_cols = static_cast<int>(v.cols());
  Mat out(rows, cols);
  for (long f = 0; f < static_cast<long>(rows) * cols; ++f) {
    out(f / cols, f % cols) = v(f / in_cols, f % in_cols);
  }
  int r = push(std::move(out), nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a, cols, in_cols] {
    if (!nodes_[a].requires_grad) return;
    const Mat& g = nodes_[r].grad;
    Mat& ga = grad_ref(a);
    for (long f = 0; f < g.rows() * g.cols(); ++f) {
      ga(f / in_cols, f % in_cols) += g(f / cols, f % cols);
    }
  };
  return r;
}

int Tape::rows_softmax_masked(int a, const Mat& mask) {
  check(a);
  const Mat& v = nodes_[a].value;
  require(mask.rows() == v.rows() && mask.cols() == v.cols(),
          "rows_softmax_masked: mask shape mismatch");
  const int rows = static_cast<int>(v.rows());
  const int cols = static_cast<int>(v.cols());
  Mat out = Mat::Zero(rows, cols);
  for (int i = 0; i < rows; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < cols; ++j) {
      if (mask(i, j) != 0.0) m = std::max(m, v(i, j));
    }
    if (!std::isfinite(m)) continue;  // fully masked row -> zeros
    double denom = 0.0;
    for (int j = 0; j < cols; ++j) {
      if (mask(i, j) != 0.0) {
        out(i, j) = std::exp(v(i, j) - m);
        denom += out(i, j);
      }
    }
    out.row(i) /= denom;
  }
  int r = push(std::move(out), nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a] {
    if (!nodes_[a].requires_grad) return;
    const Mat& g = nodes_[r].grad;
    const Mat& p = nodes_[r].value;
    Mat& ga = grad_ref(a);
    for (int i = 0; i < p.rows(); ++i) {
      double dot = g.row(i).dot(p.row(i));
      ga.row(i) += (p.row(i).array() * (g.row(i).array() - dot)).matrix();
    }
  };
  return r;
}

int Tape::layer_norm_rows(int a, double eps) {
  check(a);
  const Mat& v = nodes_[a].value;
  require(v.cols() >= 1, "layer_norm_rows: empty rows");
  const int rows = static_cast<int>(v.rows());
  const int cols = static_cast<int>(v.cols());
  Mat out(rows, cols);
  Eigen::VectorXd inv_sigma(rows);
  for (int i = 0; i < rows; ++i) {
    double mu = v.row(i).mean();
    double var = (v.row(i).array() - mu).square().mean();
    double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[i] = is;
    out.row(i) = (v.row(i).array() - mu).matrix() * is;
  }
  int r = push(std::move(out), nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a, inv_sigma = std::move(inv_sigma)] {
    if (!nodes_[a].requires_grad) return;
    const Mat& g = nodes_[r].grad;
    const Mat& xh = nodes_[r].value;
    Mat& ga = grad_ref(a);
    for (int i = 0; i < g.rows(); ++i) {
      double mean_g = g.row(i).mean();
      double mean_gx = g.row(i).cwiseProduct(xh.row(i)).mean();
      ga.row(i) += inv_sigma[i] *
                   (g.row(i).array() - mean_g - xh.row(i).array() * mean_gx)
                       .matrix();
    }
  };
  return r;
}

int Tape::chamfer_l2_to_const(int a, const Points& target) {
  check(a);
  const Mat& v = nodes_[a].value;
  require(v.cols() == 3 && v.rows() >= 1, "chamfer: value must be N x 3");
  require(target.rows() >= 1, "chamfer: empty target");
  PointCloud pred;
  pred.points = v;
  PointCloud tgt;
  tgt.points = target;
  double loss = chamfer_l2(pred, tgt);
  // nearest-neighbor matches are frozen here; the loss is piecewise smooth
  Mat gmat = chamfer_l2_grad_x(pred, tgt);
  Mat out(1, 1);
  out(0, 0) = loss;
  int r = push(std::move(out), nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a, gmat = std::move(gmat)] {
    if (nodes_[a].requires_grad)
      grad_ref(a) += nodes_[r].grad(0, 0) * gmat;
  };
  return r;
}

int Tape::sum_all(int a) {
  check(a);
  Mat out(1, 1);
  out(0, 0) = nodes_[a].value.sum();
  int r = push(std::move(out), nodes_[a].requires_grad, {});
  nodes_[r].backprop = [this, r, a] {
    if (!nodes_[a].requires_grad) return;
    grad_ref(a).array() += nodes_[r].grad(0, 0);
  };
  return r;
}

void Tape::backward(int output) {
  check(output);
  const Mat& v = nodes_[output].value;
  require(v.rows() == 1 && v.cols() == 1, "backward: output must be 1 x 1");
  if (!nodes_[output].requires_grad) return;  // nothing depends on inputs
  grad_ref(output)(0, 0) += 1.0;
  for (int i = output; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.backprop || n.grad.size() == 0) continue;
    n.backprop();
  }
}

}  // namespace pointmac
