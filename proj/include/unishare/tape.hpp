#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "unishare/tensor.hpp"

namespace unishare {

// Reverse-mode autodiff over an explicit tape. Each op records the node ids
// of its inputs; backward walks the tape in reverse creation order, which is
// a valid topological order because ops can only reference earlier nodes.
//
// Parameter leaves do not copy their values: the node keeps a pointer into
// the Parameter and backward accumulates straight into Parameter::grad.
// A per-pass filter decides which parameters receive gradient, which is how
// the selective u-i freeze is implemented (two passes, one filtered).
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  using ParamFilter = std::function<bool(const Parameter&)>;

  // ---- leaves ----

  Var input(Tensor t) {
    Node n;
    n.kind = Op::kInput;
    n.val = std::move(t);
    return push(std::move(n));
  }
  Var input_scalar(double v) { return input(Tensor::scalar(v)); }
  Var input_vec(std::vector<double> d) { return input(Tensor::vec(std::move(d))); }

  // Whole-matrix parameter leaf (weights, biases).
  Var param(Parameter& p) {
    Node n;
    n.kind = Op::kParam;
    n.p = &p;
    return push(std::move(n));
  }

  // Gathered rows of an embedding table; backward scatter-adds into the
  // table's grad at the gathered row indices.
  Var lookup(Parameter& table, std::vector<int> ids) {
    if (table.value.rank() != 2) throw std::invalid_argument("lookup: table must be 2-D");
    int v = table.value.rows(), d = table.value.cols();
    for (int id : ids)
      if (id < 0 || id >= v) throw std::out_of_range("lookup: id out of range");
    Node n;
    n.kind = Op::kLookup;
    n.p = &table;
    n.ids = std::move(ids);
    n.val = Tensor({static_cast<int>(n.ids.size()), d});
    for (size_t r = 0; r < n.ids.size(); ++r)
      for (int c = 0; c < d; ++c) n.val.at(static_cast<int>(r), c) = table.value.at(n.ids[r], c);
    return push(std::move(n));
  }

  // Single row as a 1-D vector.
  Var lookup_row(Parameter& table, int id) {
    Var rows = lookup(table, {id});
    return reshape_vec(rows);
  }

  // ---- ops ----

  // (m x k)(k x n) -> (m x n); ([k])(k x n) -> [n]; (m x k)([k]) -> [m]
  Var matmul(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    int m, k, n;
    bool a_vec = ta.rank() == 1, b_vec = tb.rank() == 1;
    if (a_vec && !b_vec) {
      m = 1, k = ta.shape[0], n = tb.cols();
      if (tb.rows() != k) throw std::invalid_argument("matmul: inner dimension mismatch");
    } else if (!a_vec && b_vec) {
      m = ta.rows(), k = ta.cols(), n = 1;
      if (tb.shape[0] != k) throw std::invalid_argument("matmul: inner dimension mismatch");
    } else if (!a_vec && !b_vec) {
      m = ta.rows(), k = ta.cols(), n = tb.cols();
      if (tb.rows() != k) throw std::invalid_argument("matmul: inner dimension mismatch");
    } else {
      throw std::invalid_argument("matmul: two vectors, use dot");
    }
    Node node;
    node.kind = Op::kMatmul;
    node.a = a.id;
    node.b = b.id;
    node.val = (a_vec || b_vec) ? Tensor({a_vec ? n : m}) : Tensor({m, n});
    matmul_kernel(ta.data.data(), tb.data.data(), node.val.data.data(), m, k, n);
    return push(std::move(node));
  }

  Var add(Var a, Var b) { return binary(Op::kAdd, a, b); }
  Var mul(Var a, Var b) { return binary(Op::kMul, a, b); }

  // Elementwise sum of many same-shape vars in one node; the tape's sum pooling.
  Var add_many(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("add_many: empty input");
    if (xs.size() == 1) return xs[0];
    Node n;
    n.kind = Op::kAddMany;
    n.inputs.reserve(xs.size());
    const Tensor& t0 = val(xs[0]);
    n.val = Tensor(t0.shape);
    for (Var x : xs) {
      const Tensor& t = val(x);
      if (!t.same_shape(t0)) throw std::invalid_argument("add_many: shape mismatch");
      for (size_t i = 0; i < t.data.size(); ++i) n.val.data[i] += t.data[i];
      n.inputs.push_back(x.id);
    }
    return push(std::move(n));
  }

  Var relu(Var x) {
    Node n = unary(Op::kRelu, x);
    for (size_t i = 0; i < n.val.data.size(); ++i) n.val.data[i] = std::max(0.0, n.val.data[i]);
    return push(std::move(n));
  }

  Var sigmoid(Var x) {
    Node n = unary(Op::kSigmoid, x);
    for (auto& v : n.val.data) v = sigmoid_fn(v);
    return push(std::move(n));
  }

  // Clamp into [eps, 1 - eps]; saturated sigmoids otherwise round to an exact
  // 0 or 1 in doubles. Gradient passes only where the input was not clamped.
  Var clamp_unit(Var x, double eps = 1e-12) {
    Node n = unary(Op::kClampUnit, x);
    n.c = eps;
    for (auto& v : n.val.data) v = std::min(1.0 - eps, std::max(eps, v));
    return push(std::move(n));
  }

  // Numerically stabilized softmax over all elements (use on vectors).
  Var softmax(Var x) {
    const Tensor& t = val(x);
    if (t.size() < 1) throw std::invalid_argument("softmax: empty input");
    Node n = unary(Op::kSoftmax, x);
    double mx = n.val.data[0];
    for (double v : n.val.data) mx = std::max(mx, v);
    double sum = 0;
    for (auto& v : n.val.data) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (auto& v : n.val.data) v /= sum;
    return push(std::move(n));
  }

  // Column-wise sum of an n x d matrix -> [d]. n = 0 rows is allowed and
  // yields the zero vector (callers pass an explicit width for that case).
  Var sum_pool(Var rows) {
    const Tensor& t = val(rows);
    if (t.rank() != 2) throw std::invalid_argument("sum_pool: 2-D input required");
    Node n;
    n.kind = Op::kSumPool;
    n.a = rows.id;
    n.val = Tensor({t.cols()});
    for (int r = 0; r < t.rows(); ++r)
      for (int c = 0; c < t.cols(); ++c) n.val.data[c] += t.at(r, c);
    return push(std::move(n));
  }

  // 1-D concatenation.
  Var concat(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat: empty input");
    Node n;
    n.kind = Op::kConcat;
    int total = 0;
    for (Var x : xs) {
      total += static_cast<int>(val(x).size());
      n.inputs.push_back(x.id);
    }
    n.val = Tensor({total});
    int off = 0;
    for (Var x : xs) {
      const Tensor& t = val(x);
      for (double v : t.data) n.val.data[off++] = v;
    }
    return push(std::move(n));
  }

  // Stack same-width 1-D vectors into an n x d matrix (batched features).
  Var concat_rows(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_rows: empty input");
    const Tensor& t0 = val(xs[0]);
    if (t0.rank() != 1) throw std::invalid_argument("concat_rows: 1-D inputs required");
    int d = t0.shape[0];
    Node n;
    n.kind = Op::kConcatRows;
    n.val = Tensor({static_cast<int>(xs.size()), d});
    int r = 0;
    for (Var x : xs) {
      const Tensor& t = val(x);
      if (t.rank() != 1 || t.shape[0] != d)
        throw std::invalid_argument("concat_rows: width mismatch");
      for (int c = 0; c < d; ++c) n.val.at(r, c) = t.data[c];
      n.inputs.push_back(x.id);
      ++r;
    }
    return push(std::move(n));
  }

  // (n x d) + [d], the bias broadcast over rows.
  Var add_rowwise(Var m, Var bias) {
    const Tensor& tm = val(m);
    const Tensor& tb = val(bias);
    if (tm.rank() != 2 || tb.rank() != 1 || tb.shape[0] != tm.cols())
      throw std::invalid_argument("add_rowwise: need (n x d) and [d]");
    Node n;
    n.kind = Op::kAddRow;
    n.a = m.id;
    n.b = bias.id;
    n.val = Tensor(tm.shape);
    for (int r = 0; r < tm.rows(); ++r)
      for (int c = 0; c < tm.cols(); ++c) n.val.at(r, c) = tm.at(r, c) + tb.data[c];
    return push(std::move(n));
  }

  // Row-wise concatenation of two matrices with equal row counts.
  Var concat_cols(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (ta.rank() != 2 || tb.rank() != 2 || ta.rows() != tb.rows())
      throw std::invalid_argument("concat_cols: row count mismatch");
    Node n;
    n.kind = Op::kConcatCols;
    n.a = a.id;
    n.b = b.id;
    n.val = Tensor({ta.rows(), ta.cols() + tb.cols()});
    for (int r = 0; r < ta.rows(); ++r) {
      for (int c = 0; c < ta.cols(); ++c) n.val.at(r, c) = ta.at(r, c);
      for (int c = 0; c < tb.cols(); ++c) n.val.at(r, ta.cols() + c) = tb.at(r, c);
    }
    return push(std::move(n));
  }

  Var sum_all(Var x) {
    Node n;
    n.kind = Op::kSumAll;
    n.a = x.id;
    double s = 0;
    for (double v : val(x).data) s += v;
    n.val = Tensor::scalar(s);
    return push(std::move(n));
  }

  Var scale(Var x, double c) {
    Node n = unary(Op::kScale, x);
    n.c = c;
    for (auto& v : n.val.data) v *= c;
    return push(std::move(n));
  }

  // Max over all elements; subgradient routed to the first argmax.
  Var reduce_max(Var x) {
    const Tensor& t = val(x);
    if (t.size() < 1) throw std::invalid_argument("reduce_max: empty input");
    Node n;
    n.kind = Op::kReduceMax;
    n.a = x.id;
    int arg = 0;
    for (size_t i = 1; i < t.data.size(); ++i)
      if (t.data[i] > t.data[arg]) arg = static_cast<int>(i);
    n.arg = arg;
    n.val = Tensor::scalar(t.data[arg]);
    return push(std::move(n));
  }

  Var mean_all(Var x) {
    long long n = val(x).size();
    return scale(sum_all(x), 1.0 / static_cast<double>(n));
  }

  Var dot(Var a, Var b) { return sum_all(mul(a, b)); }

  // Binary cross-entropy against a fixed 0/1 label; the prediction is
  // clamped to [eps, 1 - eps] before the logs.
  Var bce(Var p, double label) {
    const Tensor& t = val(p);
    if (!t.is_scalar()) throw std::invalid_argument("bce: scalar prediction required");
    Node n;
    n.kind = Op::kBce;
    n.a = p.id;
    n.c = label;
    double q = clamp_prob(t.data[0]);
    n.val = Tensor::scalar(-(label * std::log(q) + (1.0 - label) * std::log(1.0 - q)));
    return push(std::move(n));
  }

  // Elementwise binary cross-entropy of an [n] prediction vector against
  // fixed labels; clamping matches the scalar op.
  Var bce_vec(Var p, std::vector<double> labels) {
    const Tensor& t = val(p);
    if (t.rank() != 1 || t.data.size() != labels.size())
      throw std::invalid_argument("bce_vec: prediction/label size mismatch");
    Node n;
    n.kind = Op::kBceVec;
    n.a = p.id;
    n.ls = std::move(labels);
    n.val = Tensor(t.shape);
    for (size_t i = 0; i < t.data.size(); ++i) {
      double q = clamp_prob(t.data[i]);
      double y = n.ls[i];
      n.val.data[i] = -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
    }
    return push(std::move(n));
  }

  // View a 1 x d or n x 1 matrix as a flat vector (no data movement in grad).
  Var reshape_vec(Var x) {
    Node n;
    n.kind = Op::kReshape;
    n.a = x.id;
    n.val = Tensor({static_cast<int>(val(x).size())}, val(x).data);
    return push(std::move(n));
  }

  // ---- access ----

  const Tensor& val(Var x) const {
    const Node& n = nodes_[check(x)];
    return n.p != nullptr && n.kind == Op::kParam ? n.p->value : n.val;
  }
  double scalar(Var x) const {
    const Tensor& t = val(x);
    if (!t.is_scalar()) throw std::invalid_argument("scalar: not a scalar node");
    return t.data[0];
  }

  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // Backward from a scalar node. Seeds the output gradient with `seed`
  // (loss weights are applied here) and accumulates into Parameter::grad
  // for every parameter leaf accepted by `filter`.
  void backward(Var loss, double seed = 1.0, const ParamFilter& filter = nullptr) {
    const int li = check(loss);
    if (!node_val(li).is_scalar()) throw std::invalid_argument("backward: loss must be scalar");
    for (auto& n : nodes_) {
      n.grad.shape = node_val_of(n).shape;
      n.grad.data.assign(node_val_of(n).data.size(), 0.0);
    }
    nodes_[li].grad.data[0] = seed;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) backprop(i, filter);
  }

 private:
  enum class Op {
    kInput,
    kParam,
    kLookup,
    kMatmul,
    kAdd,
    kMul,
    kAddMany,
    kRelu,
    kSigmoid,
    kClampUnit,
    kSoftmax,
    kSumPool,
    kConcat,
    kConcatRows,
    kConcatCols,
    kAddRow,
    kSumAll,
    kScale,
    kReduceMax,
    kBce,
    kBceVec,
    kReshape,
  };

  struct Node {
    Op kind = Op::kInput;
    int a = -1, b = -1;
    std::vector<int> inputs;
    Tensor val;
    Tensor grad;
    Parameter* p = nullptr;
    std::vector<int> ids;
    std::vector<double> ls;
    double c = 0.0;
    int arg = -1;
  };

  static double sigmoid_fn(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  static constexpr double kProbEps = 1e-7;
  static double clamp_prob(double p) { return std::min(1.0 - kProbEps, std::max(kProbEps, p)); }

  static void matmul_kernel(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
      double* crow = c + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] = 0.0;
      const double* arow = a + static_cast<size_t>(i) * k;
      for (int l = 0; l < k; ++l) {
        double av = arow[l];
        if (av == 0.0) continue;
        const double* brow = b + static_cast<size_t>(l) * n;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }

  const Tensor& node_val(int i) const { return node_val_of(nodes_[i]); }
  static const Tensor& node_val_of(const Node& n) {
    return n.p != nullptr && n.kind == Op::kParam ? n.p->value : n.val;
  }

  int check(Var x) const {
    if (!x.valid() || x.id >= static_cast<int>(nodes_.size()))
      throw std::invalid_argument("tape: invalid var");
    return x.id;
  }

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Node unary(Op op, Var x) {
    Node n;
    n.kind = op;
    n.a = check(x);
    n.val = val(x);
    return n;
  }

  // add/mul with equal shapes or scalar-vs-tensor broadcasting (either side).
  Var binary(Op op, Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    Node n;
    n.kind = op;
    n.a = a.id;
    n.b = b.id;
    if (ta.same_shape(tb)) {
      n.val = Tensor(ta.shape);
      for (size_t i = 0; i < ta.data.size(); ++i)
        n.val.data[i] = op == Op::kAdd ? ta.data[i] + tb.data[i] : ta.data[i] * tb.data[i];
    } else if (ta.is_scalar() || tb.is_scalar()) {
      const Tensor& big = ta.is_scalar() ? tb : ta;
      double s = (ta.is_scalar() ? ta : tb).data[0];
      n.val = Tensor(big.shape);
      for (size_t i = 0; i < big.data.size(); ++i)
        n.val.data[i] = op == Op::kAdd ? big.data[i] + s : big.data[i] * s;
    } else {
      throw std::invalid_argument("elementwise: incompatible shapes");
    }
    return push(std::move(n));
  }

  void add_grad(int i, size_t at, double g) { nodes_[i].grad.data[at] += g; }

  void backprop(int i, const ParamFilter& filter) {
    Node& n = nodes_[i];
    const Tensor& g = n.grad;
    bool any = false;
    for (double v : g.data)
      if (v != 0.0) {
        any = true;
        break;
      }
    if (!any && n.kind != Op::kParam && n.kind != Op::kLookup) return;

    switch (n.kind) {
      case Op::kInput:
        break;
      case Op::kParam:
        if (n.p->trainable && (!filter || filter(*n.p)))
          for (size_t j = 0; j < g.data.size(); ++j) n.p->grad.data[j] += g.data[j];
        break;
      case Op::kLookup:
        if (n.p->trainable && (!filter || filter(*n.p))) {
          int d = n.p->value.cols();
          for (size_t r = 0; r < n.ids.size(); ++r)
            for (int c = 0; c < d; ++c)
              n.p->grad.at(n.ids[r], c) += g.data[r * static_cast<size_t>(d) + c];
        }
        break;
      case Op::kMatmul: {
        const Tensor& ta = node_val(n.a);
        const Tensor& tb = node_val(n.b);
        int m, k, nn;
        if (ta.rank() == 1) {
          m = 1, k = ta.shape[0], nn = tb.cols();
        } else if (tb.rank() == 1) {
          m = ta.rows(), k = ta.cols(), nn = 1;
        } else {
          m = ta.rows(), k = ta.cols(), nn = tb.cols();
        }
        // dA = dC * B^T
        Tensor& ga = nodes_[n.a].grad;
        for (int r = 0; r < m; ++r)
          for (int l = 0; l < k; ++l) {
            double s = 0;
            const double* grow = g.data.data() + static_cast<size_t>(r) * nn;
            const double* brow = tb.data.data() + static_cast<size_t>(l) * nn;
            for (int j = 0; j < nn; ++j) s += grow[j] * brow[j];
            ga.data[static_cast<size_t>(r) * k + l] += s;
          }
        // dB = A^T * dC
        Tensor& gb = nodes_[n.b].grad;
        for (int l = 0; l < k; ++l)
          for (int j = 0; j < nn; ++j) {
            double s = 0;
            for (int r = 0; r < m; ++r)
              s += ta.data[static_cast<size_t>(r) * k + l] * g.data[static_cast<size_t>(r) * nn + j];
            gb.data[static_cast<size_t>(l) * nn + j] += s;
          }
        break;
      }
      case Op::kAdd: {
        const Tensor& ta = node_val(n.a);
        const Tensor& tb = node_val(n.b);
        if (ta.same_shape(tb)) {
          for (size_t j = 0; j < g.data.size(); ++j) {
            add_grad(n.a, j, g.data[j]);
            add_grad(n.b, j, g.data[j]);
          }
        } else {
          int small = ta.is_scalar() ? n.a : n.b;
          int big = ta.is_scalar() ? n.b : n.a;
          double s = 0;
          for (size_t j = 0; j < g.data.size(); ++j) {
            add_grad(big, j, g.data[j]);
            s += g.data[j];
          }
          add_grad(small, 0, s);
        }
        break;
      }
      case Op::kMul: {
        const Tensor& ta = node_val(n.a);
        const Tensor& tb = node_val(n.b);
        if (ta.same_shape(tb)) {
          for (size_t j = 0; j < g.data.size(); ++j) {
            add_grad(n.a, j, g.data[j] * tb.data[j]);
            add_grad(n.b, j, g.data[j] * ta.data[j]);
          }
        } else {
          bool a_small = ta.is_scalar();
          int small = a_small ? n.a : n.b;
          int big = a_small ? n.b : n.a;
          const Tensor& tbig = a_small ? tb : ta;
          double sval = (a_small ? ta : tb).data[0];
          double s = 0;
          for (size_t j = 0; j < g.data.size(); ++j) {
            add_grad(big, j, g.data[j] * sval);
            s += g.data[j] * tbig.data[j];
          }
          add_grad(small, 0, s);
        }
        break;
      }
      case Op::kAddMany:
        for (int src : n.inputs)
          for (size_t j = 0; j < g.data.size(); ++j) add_grad(src, j, g.data[j]);
        break;
      case Op::kRelu: {
        const Tensor& ta = node_val(n.a);
        for (size_t j = 0; j < g.data.size(); ++j)
          if (ta.data[j] > 0) add_grad(n.a, j, g.data[j]);
        break;
      }
      case Op::kSigmoid:
        for (size_t j = 0; j < g.data.size(); ++j) {
          double y = n.val.data[j];
          add_grad(n.a, j, g.data[j] * y * (1.0 - y));
        }
        break;
      case Op::kClampUnit: {
        const Tensor& ta = node_val(n.a);
        for (size_t j = 0; j < g.data.size(); ++j)
          if (ta.data[j] > n.c && ta.data[j] < 1.0 - n.c) add_grad(n.a, j, g.data[j]);
        break;
      }
      case Op::kSoftmax: {
        // dx_j = y_j * (g_j - sum_k g_k y_k)
        double dotv = 0;
        for (size_t j = 0; j < g.data.size(); ++j) dotv += g.data[j] * n.val.data[j];
        for (size_t j = 0; j < g.data.size(); ++j)
          add_grad(n.a, j, n.val.data[j] * (g.data[j] - dotv));
        break;
      }
      case Op::kSumPool: {
        const Tensor& ta = node_val(n.a);
        int d = ta.cols();
        for (int r = 0; r < ta.rows(); ++r)
          for (int c = 0; c < d; ++c) add_grad(n.a, static_cast<size_t>(r) * d + c, g.data[c]);
        break;
      }
      case Op::kConcat: {
        size_t off = 0;
        for (int src : n.inputs) {
          size_t len = node_val(src).data.size();
          for (size_t j = 0; j < len; ++j) add_grad(src, j, g.data[off + j]);
          off += len;
        }
        break;
      }
      case Op::kConcatRows: {
        size_t d = n.val.cols();
        for (size_t r = 0; r < n.inputs.size(); ++r)
          for (size_t c = 0; c < d; ++c) add_grad(n.inputs[r], c, g.data[r * d + c]);
        break;
      }
      case Op::kAddRow: {
        const Tensor& ta = node_val(n.a);
        int d = ta.cols();
        for (int r = 0; r < ta.rows(); ++r)
          for (int c = 0; c < d; ++c) {
            double gv = g.data[static_cast<size_t>(r) * d + c];
            add_grad(n.a, static_cast<size_t>(r) * d + c, gv);
            add_grad(n.b, static_cast<size_t>(c), gv);
          }
        break;
      }
      case Op::kConcatCols: {
        const Tensor& ta = node_val(n.a);
        const Tensor& tb = node_val(n.b);
        int ca = ta.cols(), cb = tb.cols();
        for (int r = 0; r < ta.rows(); ++r) {
          for (int c = 0; c < ca; ++c)
            add_grad(n.a, static_cast<size_t>(r) * ca + c, g.at(r, c));
          for (int c = 0; c < cb; ++c)
            add_grad(n.b, static_cast<size_t>(r) * cb + c, g.at(r, ca + c));
        }
        break;
      }
      case Op::kSumAll:
        for (size_t j = 0; j < node_val(n.a).data.size(); ++j) add_grad(n.a, j, g.data[0]);
        break;
      case Op::kScale:
        for (size_t j = 0; j < g.data.size(); ++j) add_grad(n.a, j, g.data[j] * n.c);
        break;
      case Op::kReduceMax:
        add_grad(n.a, static_cast<size_t>(n.arg), g.data[0]);
        break;
      case Op::kBce: {
        double p = clamp_prob(node_val(n.a).data[0]);
        add_grad(n.a, 0, g.data[0] * (p - n.c) / (p * (1.0 - p)));
        break;
      }
      case Op::kBceVec:
        for (size_t j = 0; j < g.data.size(); ++j) {
          double p = clamp_prob(node_val(n.a).data[j]);
          add_grad(n.a, j, g.data[j] * (p - n.ls[j]) / (p * (1.0 - p)));
        }
        break;
      case Op::kReshape:
        for (size_t j = 0; j < g.data.size(); ++j) add_grad(n.a, j, g.data[j]);
        break;
    }
  }

  std::vector<Node> nodes_;
};

using Var = Tape::Var;

}  // namespace unishare
