#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Tape records primitives as they are applied (define-by-run) and evaluates
// each one immediately. forward() re-evaluates the whole record from the
// current leaf values, which lets finite-difference checks perturb a leaf
// without rebuilding the graph. backward() accumulates vector-Jacobian
// products in reverse record order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dbgae/error.hpp"

namespace dbgae {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = std::vector<int>;

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

enum class Op : std::uint8_t {
  kLeaf,
  kMatMul,
  kAdd,
  kAddRow,
  kMul,
  kScale,
  kConcatCols,
  kRelu,
  kLeakyRelu,
  kSigmoid,
  kRowSum,
  kSum,
  kGatherRows,
  kEdgeScatter,
  kGatherDot,
  kSegmentSoftmax,
  kRowSoftmax,
  kCrossEntropy,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kAddRow: return "add_row";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kConcatCols: return "concat_cols";
    case Op::kRelu: return "relu";
    case Op::kLeakyRelu: return "leaky_relu";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRowSum: return "row_sum";
    case Op::kSum: return "sum";
    case Op::kGatherRows: return "gather_rows";
    case Op::kEdgeScatter: return "edge_scatter";
    case Op::kGatherDot: return "gather_dot";
    case Op::kSegmentSoftmax: return "segment_softmax";
    case Op::kRowSoftmax: return "row_softmax";
    case Op::kCrossEntropy: return "cross_entropy";
  }
  return "?";
}

class Tape {
 public:
  Var variable(Matrix value, bool requires_grad = true) {
    Node n;
    n.op = Op::kLeaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n), false);
  }
  Var constant(Matrix value) { return variable(std::move(value), false); }

  Var matmul(Var a, Var b) { return make(Op::kMatMul, {a, b}); }
  Var add(Var a, Var b) { return make(Op::kAdd, {a, b}); }
  // a (n x m) plus a 1 x m row broadcast over rows.
  Var add_row(Var a, Var row) { return make(Op::kAddRow, {a, row}); }
  // Elementwise product.
  Var mul(Var a, Var b) { return make(Op::kMul, {a, b}); }
  Var scale(Var a, double s) {
    Node n = node(Op::kScale, {a});
    n.scalar = s;
    return push(std::move(n));
  }
  Var concat_cols(std::span<const Var> parts) {
    std::vector<Var> v(parts.begin(), parts.end());
    return make(Op::kConcatCols, v);
  }
  Var relu(Var a) { return make(Op::kRelu, {a}); }
  Var leaky_relu(Var a, double slope = 0.2) {
    Node n = node(Op::kLeakyRelu, {a});
    n.scalar = slope;
    return push(std::move(n));
  }
  Var sigmoid(Var a) { return make(Op::kSigmoid, {a}); }
  Var row_sum(Var a) { return make(Op::kRowSum, {a}); }
  Var sum(Var a) { return make(Op::kSum, {a}); }

  Var gather_rows(Var a, std::shared_ptr<const Index> rows) {
    Node n = node(Op::kGatherRows, {a});
    n.idx_a = std::move(rows);
    return push(std::move(n));
  }

  // out (n_out x m), out[dst[e]] += coef[e] * x[src[e]]; coef is E x 1.
  Var edge_scatter(Var coef, Var x, std::shared_ptr<const Index> src, std::shared_ptr<const Index> dst, int n_out) {
    Node n = node(Op::kEdgeScatter, {coef, x});
    n.idx_a = std::move(src);
    n.idx_b = std::move(dst);
    n.count = n_out;
    return push(std::move(n));
  }

  // out (E x 1), out[e] = a[rows_a[e]] . b[rows_b[e]].
  Var gather_dot(Var a, Var b, std::shared_ptr<const Index> rows_a, std::shared_ptr<const Index> rows_b) {
    Node n = node(Op::kGatherDot, {a, b});
    n.idx_a = std::move(rows_a);
    n.idx_b = std::move(rows_b);
    return push(std::move(n));
  }

  // Softmax of an E x 1 score column within each segment (edges sharing a
  // destination node). Segments without entries produce nothing.
  Var segment_softmax(Var scores, std::shared_ptr<const Index> segment, int n_segments) {
    Node n = node(Op::kSegmentSoftmax, {scores});
    n.idx_a = std::move(segment);
    n.count = n_segments;
    return push(std::move(n));
  }

  // Row-wise softmax. With a 0/1 mask of the same shape, masked entries are
  // exactly 0 and fully masked rows are all zero.
  Var row_softmax(Var a, std::shared_ptr<const Matrix> mask = nullptr) {
    Node n = node(Op::kRowSoftmax, {a});
    n.mask = std::move(mask);
    return push(std::move(n));
  }

  // Mean over the listed rows of -log softmax(logits[row])[target].
  Var cross_entropy(Var logits, std::shared_ptr<const Index> rows, std::shared_ptr<const Index> targets) {
    Node n = node(Op::kCrossEntropy, {logits});
    n.idx_a = std::move(rows);
    n.idx_b = std::move(targets);
    return push(std::move(n));
  }

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }
  Op op(Var v) const { return nodes_.at(v.id).op; }
  std::size_t size() const { return nodes_.size(); }

  // Replaces a leaf value; call forward() to propagate.
  void set_value(Var v, Matrix value) {
    Node& n = nodes_.at(v.id);
    if (n.op != Op::kLeaf) throw ContractError("set_value on a non-leaf");
    if (value.rows() != n.value.rows() || value.cols() != n.value.cols())
      throw DimensionError("set_value: shape mismatch");
    n.value = std::move(value);
  }
  double& leaf_entry(Var v, Eigen::Index r, Eigen::Index c) {
    Node& n = nodes_.at(v.id);
    if (n.op != Op::kLeaf) throw ContractError("leaf_entry on a non-leaf");
    return n.value(r, c);
  }

  void forward() {
    for (auto& n : nodes_)
      if (n.op != Op::kLeaf) evaluate(n);
  }

  void backward(Var loss) {
    Node& out = nodes_.at(loss.id);
    if (out.value.rows() != 1 || out.value.cols() != 1)
      throw ContractError("backward needs a scalar loss, got " + std::to_string(out.value.rows()) + "x" +
                          std::to_string(out.value.cols()));
    for (auto& n : nodes_) n.grad.setZero(n.value.rows(), n.value.cols());
    out.grad(0, 0) = 1.0;
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.op == Op::kLeaf || !n.requires_grad) continue;
      propagate(n);
    }
  }

  // Sign pattern (-1, 0, +1) of every ReLU / LeakyReLU pre-activation.
  // Finite differences that change it straddle a kink.
  std::vector<std::int8_t> kink_signature() const {
    std::vector<std::int8_t> sig;
    for (const auto& n : nodes_) {
      if (n.op != Op::kRelu && n.op != Op::kLeakyRelu) continue;
      const Matrix& in = nodes_[n.inputs[0]].value;
      for (Eigen::Index k = 0; k < in.size(); ++k) {
        const double v = in.data()[k];
        sig.push_back(static_cast<std::int8_t>((v > 0) - (v < 0)));
      }
    }
    return sig;
  }

 private:
  struct Node {
    Op op = Op::kLeaf;
    std::vector<int> inputs;
    Matrix value, grad;
    bool requires_grad = false;
    double scalar = 0;
    int count = 0;
    std::shared_ptr<const Index> idx_a, idx_b;
    std::shared_ptr<const Matrix> mask;
    Matrix cache;
  };

  Node node(Op op, std::initializer_list<Var> in) { return node(op, std::vector<Var>(in)); }
  Node node(Op op, const std::vector<Var>& in) {
    Node n;
    n.op = op;
    for (Var v : in) {
      if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
        throw ContractError(std::string(op_name(op)) + ": invalid input handle");
      n.inputs.push_back(v.id);
      n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
    }
    return n;
  }
  Var make(Op op, std::initializer_list<Var> in) { return push(node(op, in)); }
  Var make(Op op, const std::vector<Var>& in) { return push(node(op, in)); }

  Var push(Node n, bool eval = true) {
    if (eval) evaluate(n);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  const Matrix& in(const Node& n, int k) const { return nodes_[n.inputs[k]].value; }
  Node& input_node(const Node& n, int k) { return nodes_[n.inputs[k]]; }

  [[noreturn]] static void shape_error(const Node& n, const std::string& detail) {
    throw DimensionError(std::string(op_name(n.op)) + ": " + detail);
  }
  static std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

  void evaluate(Node& n) {
    switch (n.op) {
      case Op::kLeaf: break;
      case Op::kMatMul: {
        const Matrix &a = in(n, 0), &b = in(n, 1);
        if (a.cols() != b.rows()) shape_error(n, shape(a) + " times " + shape(b));
        n.value.noalias() = a * b;
        break;
      }
      case Op::kAdd:
      case Op::kMul: {
        const Matrix &a = in(n, 0), &b = in(n, 1);
        if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(n, shape(a) + " vs " + shape(b));
        if (n.op == Op::kAdd)
          n.value = a + b;
        else
          n.value = a.cwiseProduct(b);
        break;
      }
      case Op::kAddRow: {
        const Matrix &a = in(n, 0), &r = in(n, 1);
        if (r.rows() != 1 || r.cols() != a.cols()) shape_error(n, shape(a) + " plus row " + shape(r));
        n.value = a.rowwise() + r.row(0);
        break;
      }
      case Op::kScale: n.value = n.scalar * in(n, 0); break;
      case Op::kConcatCols: {
        const Eigen::Index rows = in(n, 0).rows();
        Eigen::Index cols = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          if (in(n, k).rows() != rows) shape_error(n, "row counts differ");
          cols += in(n, k).cols();
        }
        n.value.resize(rows, cols);
        Eigen::Index at = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const Matrix& p = in(n, k);
          n.value.middleCols(at, p.cols()) = p;
          at += p.cols();
        }
        break;
      }
      case Op::kRelu: n.value = in(n, 0).cwiseMax(0.0); break;
      case Op::kLeakyRelu: {
        const double s = n.scalar;
        n.value = in(n, 0).unaryExpr([s](double v) { return v > 0 ? v : s * v; });
        break;
      }
      case Op::kSigmoid:
        n.value = in(n, 0).unaryExpr([](double v) {
          return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        });
        break;
      case Op::kRowSum: n.value = in(n, 0).rowwise().sum(); break;
      case Op::kSum: n.value = Matrix::Constant(1, 1, in(n, 0).sum()); break;
      case Op::kGatherRows: {
        const Matrix& a = in(n, 0);
        const Index& rows = *n.idx_a;
        n.value.resize(static_cast<Eigen::Index>(rows.size()), a.cols());
        for (std::size_t k = 0; k < rows.size(); ++k) {
          if (rows[k] < 0 || rows[k] >= a.rows()) shape_error(n, "row index out of range");
          n.value.row(k) = a.row(rows[k]);
        }
        break;
      }
      case Op::kEdgeScatter: {
        const Matrix &coef = in(n, 0), &x = in(n, 1);
        const Index &src = *n.idx_a, &dst = *n.idx_b;
        if (coef.cols() != 1 || coef.rows() != static_cast<Eigen::Index>(src.size()) || src.size() != dst.size())
          shape_error(n, "coefficient column " + shape(coef) + " does not match " + std::to_string(src.size()) + " edges");
        n.value.setZero(n.count, x.cols());
        for (std::size_t e = 0; e < src.size(); ++e) {
          if (src[e] < 0 || src[e] >= x.rows() || dst[e] < 0 || dst[e] >= n.count) shape_error(n, "edge endpoint out of range");
          n.value.row(dst[e]).noalias() += coef(e, 0) * x.row(src[e]);
        }
        break;
      }
      case Op::kGatherDot: {
        const Matrix &a = in(n, 0), &b = in(n, 1);
        const Index &ra = *n.idx_a, &rb = *n.idx_b;
        if (a.cols() != b.cols() || ra.size() != rb.size()) shape_error(n, shape(a) + " vs " + shape(b));
        n.value.resize(static_cast<Eigen::Index>(ra.size()), 1);
        for (std::size_t e = 0; e < ra.size(); ++e) {
          if (ra[e] < 0 || ra[e] >= a.rows() || rb[e] < 0 || rb[e] >= b.rows()) shape_error(n, "row index out of range");
          n.value(e, 0) = a.row(ra[e]).dot(b.row(rb[e]));
        }
        break;
      }
      case Op::kSegmentSoftmax: {
        const Matrix& s = in(n, 0);
        const Index& seg = *n.idx_a;
        if (s.cols() != 1 || s.rows() != static_cast<Eigen::Index>(seg.size())) shape_error(n, "scores must be E x 1");
        std::vector<double> mx(n.count, -std::numeric_limits<double>::infinity()), z(n.count, 0.0);
        for (std::size_t e = 0; e < seg.size(); ++e) {
          if (seg[e] < 0 || seg[e] >= n.count) shape_error(n, "segment index out of range");
          mx[seg[e]] = std::max(mx[seg[e]], s(e, 0));
        }
        n.value.resize(s.rows(), 1);
        for (std::size_t e = 0; e < seg.size(); ++e) {
          n.value(e, 0) = std::exp(s(e, 0) - mx[seg[e]]);
          z[seg[e]] += n.value(e, 0);
        }
        for (std::size_t e = 0; e < seg.size(); ++e) n.value(e, 0) /= z[seg[e]];
        break;
      }
      case Op::kRowSoftmax: {
        const Matrix& a = in(n, 0);
        if (n.mask && (n.mask->rows() != a.rows() || n.mask->cols() != a.cols())) shape_error(n, "mask shape mismatch");
        n.value.setZero(a.rows(), a.cols());
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
          double mx = -std::numeric_limits<double>::infinity();
          for (Eigen::Index c = 0; c < a.cols(); ++c)
            if (!n.mask || (*n.mask)(r, c) != 0) mx = std::max(mx, a(r, c));
          if (!std::isfinite(mx)) continue;
          double z = 0;
          for (Eigen::Index c = 0; c < a.cols(); ++c)
            if (!n.mask || (*n.mask)(r, c) != 0) z += (n.value(r, c) = std::exp(a(r, c) - mx));
          n.value.row(r) /= z;
        }
        break;
      }
      case Op::kCrossEntropy: {
        const Matrix& logits = in(n, 0);
        const Index &rows = *n.idx_a, &targets = *n.idx_b;
        if (rows.size() != targets.size()) shape_error(n, "rows and targets differ in length");
        if (rows.empty()) shape_error(n, "no rows to average over");
        n.cache.resize(static_cast<Eigen::Index>(rows.size()), logits.cols());
        double total = 0;
        for (std::size_t k = 0; k < rows.size(); ++k) {
          if (rows[k] < 0 || rows[k] >= logits.rows()) shape_error(n, "row index out of range");
          if (targets[k] < 0 || targets[k] >= logits.cols()) shape_error(n, "target index out of range");
          const auto row = logits.row(rows[k]);
          const double mx = row.maxCoeff();
          const double lse = mx + std::log((row.array() - mx).exp().sum());
          n.cache.row(k) = (row.array() - lse).exp();
          total += lse - row(targets[k]);
        }
        n.value = Matrix::Constant(1, 1, total / static_cast<double>(rows.size()));
        break;
      }
    }
  }

  // Accumulates n.grad into the gradients of n's inputs.
  void propagate(Node& n) {
    const Matrix& g = n.grad;
    auto want = [&](int k) { return nodes_[n.inputs[k]].requires_grad; };
    switch (n.op) {
      case Op::kLeaf: break;
      case Op::kMatMul:
        if (want(0)) input_node(n, 0).grad.noalias() += g * in(n, 1).transpose();
        if (want(1)) input_node(n, 1).grad.noalias() += in(n, 0).transpose() * g;
        break;
      case Op::kAdd:
        if (want(0)) input_node(n, 0).grad += g;
        if (want(1)) input_node(n, 1).grad += g;
        break;
      case Op::kAddRow:
        if (want(0)) input_node(n, 0).grad += g;
        if (want(1)) input_node(n, 1).grad += g.colwise().sum();
        break;
      case Op::kMul:
        if (want(0)) input_node(n, 0).grad += g.cwiseProduct(in(n, 1));
        if (want(1)) input_node(n, 1).grad += g.cwiseProduct(in(n, 0));
        break;
      case Op::kScale: input_node(n, 0).grad += n.scalar * g; break;
      case Op::kConcatCols: {
        Eigen::Index at = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const Eigen::Index w = in(n, k).cols();
          if (want(k)) input_node(n, k).grad += g.middleCols(at, w);
          at += w;
        }
        break;
      }
      case Op::kRelu: input_node(n, 0).grad += (in(n, 0).array() > 0).select(g, 0.0); break;
      case Op::kLeakyRelu: input_node(n, 0).grad += (in(n, 0).array() > 0).select(g, n.scalar * g); break;
      case Op::kSigmoid: input_node(n, 0).grad += g.cwiseProduct(n.value.cwiseProduct((1.0 - n.value.array()).matrix())); break;
      case Op::kRowSum: input_node(n, 0).grad.colwise() += g.col(0); break;
      case Op::kSum: input_node(n, 0).grad.array() += g(0, 0); break;
      case Op::kGatherRows: {
        Matrix& ga = input_node(n, 0).grad;
        const Index& rows = *n.idx_a;
        for (std::size_t k = 0; k < rows.size(); ++k) ga.row(rows[k]) += g.row(k);
        break;
      }
      case Op::kEdgeScatter: {
        const Matrix &coef = in(n, 0), &x = in(n, 1);
        const Index &src = *n.idx_a, &dst = *n.idx_b;
        const bool wc = want(0), wx = want(1);
        Matrix* gc = wc ? &input_node(n, 0).grad : nullptr;
        Matrix* gx = wx ? &input_node(n, 1).grad : nullptr;
        for (std::size_t e = 0; e < src.size(); ++e) {
          if (wc) (*gc)(e, 0) += g.row(dst[e]).dot(x.row(src[e]));
          if (wx) gx->row(src[e]).noalias() += coef(e, 0) * g.row(dst[e]);
        }
        break;
      }
      case Op::kGatherDot: {
        const Matrix &a = in(n, 0), &b = in(n, 1);
        const Index &ra = *n.idx_a, &rb = *n.idx_b;
        const bool wa = want(0), wb = want(1);
        Matrix* ga = wa ? &input_node(n, 0).grad : nullptr;
        Matrix* gb = wb ? &input_node(n, 1).grad : nullptr;
        for (std::size_t e = 0; e < ra.size(); ++e) {
          const double ge = g(e, 0);
          if (ge == 0) continue;
          if (wa) ga->row(ra[e]).noalias() += ge * b.row(rb[e]);
          if (wb) gb->row(rb[e]).noalias() += ge * a.row(ra[e]);
        }
        break;
      }
      case Op::kSegmentSoftmax: {
        const Index& seg = *n.idx_a;
        std::vector<double> dot(n.count, 0.0);
        for (std::size_t e = 0; e < seg.size(); ++e) dot[seg[e]] += g(e, 0) * n.value(e, 0);
        Matrix& gs = input_node(n, 0).grad;
        for (std::size_t e = 0; e < seg.size(); ++e) gs(e, 0) += n.value(e, 0) * (g(e, 0) - dot[seg[e]]);
        break;
      }
      case Op::kRowSoftmax: {
        Matrix& ga = input_node(n, 0).grad;
        for (Eigen::Index r = 0; r < n.value.rows(); ++r) {
          const double dot = g.row(r).dot(n.value.row(r));
          ga.row(r).array() += n.value.row(r).array() * (g.row(r).array() - dot);
        }
        break;
      }
      case Op::kCrossEntropy: {
        Matrix& gl = input_node(n, 0).grad;
        const Index &rows = *n.idx_a, &targets = *n.idx_b;
        const double s = g(0, 0) / static_cast<double>(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
          gl.row(rows[k]) += s * n.cache.row(k);
          gl(rows[k], targets[k]) -= s;
        }
        break;
      }
    }
  }

  std::vector<Node> nodes_;
};

inline std::shared_ptr<const Index> make_index(Index v) { return std::make_shared<const Index>(std::move(v)); }

// ---------------------------------------------------------------------------
// Gradient check

struct GradCheckReport {
  double max_relative_error = 0;
  std::size_t checked = 0;
  std::size_t excluded_kinks = 0;
  int worst_param = -1;
  Eigen::Index worst_row = -1, worst_col = -1;
  double worst_analytic = 0, worst_numeric = 0;
  bool passed = true;
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

// Central differences on up to `samples_per_param` random coordinates of each
// parameter. Coordinates whose perturbation moves any ReLU pre-activation
// across (or onto) its kink are excluded. The tape's leaf values are
// restored afterwards.
inline GradCheckReport grad_check(Tape& tape, Var loss, std::span<const Var> params, double tolerance,
                                  std::uint64_t seed = 1, int samples_per_param = 64, double step = 1e-4) {
  tape.forward();
  tape.backward(loss);
  std::vector<Matrix> analytic;
  for (Var p : params) analytic.push_back(tape.grad(p));
  const auto base_sig = tape.kink_signature();
  const bool base_has_zero = std::find(base_sig.begin(), base_sig.end(), 0) != base_sig.end();

  GradCheckReport rep;
  std::mt19937_64 rng(seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const Var p = params[pi];
    const Eigen::Index size = tape.value(p).size();
    const Eigen::Index cols = tape.value(p).cols();
    std::vector<Eigen::Index> coords(size);
    for (Eigen::Index k = 0; k < size; ++k) coords[k] = k;
    if (size > samples_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(samples_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (Eigen::Index k : coords) {
      const Eigen::Index r = k / cols, c = k % cols;
      double& entry = tape.leaf_entry(p, r, c);
      const double original = entry;
      entry = original + step;
      tape.forward();
      const double plus = tape.value(loss)(0, 0);
      const auto sig_plus = tape.kink_signature();
      entry = original - step;
      tape.forward();
      const double minus = tape.value(loss)(0, 0);
      const auto sig_minus = tape.kink_signature();
      entry = original;
      if (sig_plus != sig_minus || (base_has_zero && sig_plus != base_sig)) {
        ++rep.excluded_kinks;
        continue;
      }
      const double numeric = (plus - minus) / (2 * step);
      const double a = analytic[pi](r, c);
      const double err = relative_error(a, numeric);
      ++rep.checked;
      if (err > rep.max_relative_error || !std::isfinite(err)) {
        rep.max_relative_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
        rep.worst_param = static_cast<int>(pi);
        rep.worst_row = r;
        rep.worst_col = c;
        rep.worst_analytic = a;
        rep.worst_numeric = numeric;
      }
    }
  }
  tape.forward();
  rep.passed = rep.max_relative_error <= tolerance;
  return rep;
}

}  // namespace dbgae
