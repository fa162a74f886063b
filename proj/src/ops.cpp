#include "gasgraph/ops.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "gasgraph/errors.hpp"

namespace gasgraph {

namespace {

using detail::Node;
using detail::NodePtr;

Tensor make_result(Shape shape, std::vector<double> data, const char* op) {
  for (double v : data) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + " produced a non-finite value");
  }
  return Tensor(std::move(shape), std::move(data));
}

template <class Fn>
void record(const char* op, const Tensor& out, std::vector<NodePtr> inputs, Fn&& fn) {
  if (!grad_enabled()) return;
  bool any = false;
  for (const auto& n : inputs) any = any || n->requires_grad;
  if (!any) return;
  out.node()->requires_grad = true;
  ComputeTape::current().record(
      ComputeTape::Entry{op, out.node(), std::move(inputs), std::function<void()>(std::forward<Fn>(fn))});
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_to_string(a) + " and " +
                       shape_to_string(b));
}

void check_axis(const char* op, const Tensor& a, std::size_t axis) {
  if (axis >= a.rank()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for shape " +
                         shape_to_string(a.shape()));
  }
}

// View of a tensor as (outer, len, inner) around one axis.
struct AxisView {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) out.push_back(s[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

// ---------------------------------------------------------------------------
// Broadcasting

struct Broadcast {
  Shape out;
  bool same = false;
  std::vector<std::size_t> ia;
  std::vector<std::size_t> ib;
};

std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t stride = 1;
  const std::size_t offset = out.size() - in.size();
  for (std::size_t i = in.size(); i-- > 0;) {
    strides[i + offset] = in[i] == 1 ? 0 : stride;
    stride *= in[i];
  }
  return strides;
}

Broadcast broadcast(const Shape& a, const Shape& b, const char* op) {
  Broadcast bc;
  if (a == b) {
    bc.out = a;
    bc.same = true;
    return bc;
  }
  const std::size_t rank = std::max(a.size(), b.size());
  bc.out.assign(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) shape_error(op, a, b);
    bc.out[i] = std::max(da, db);
  }
  const auto sa = broadcast_strides(a, bc.out);
  const auto sb = broadcast_strides(b, bc.out);
  const std::size_t n = shape_numel(bc.out);
  bc.ia.resize(n);
  bc.ib.resize(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t oa = 0;
  std::size_t ob = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    bc.ia[flat] = oa;
    bc.ib[flat] = ob;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      oa += sa[d];
      ob += sb[d];
      if (idx[d] < bc.out[d]) break;
      oa -= sa[d] * idx[d];
      ob -= sb[d] * idx[d];
      idx[d] = 0;
    }
  }
  return bc;
}

// f(x, y) -> value; dfa(x, y, g) and dfb(x, y, g) -> contributions.
template <class F, class DA, class DB>
Tensor binary(const Tensor& a, const Tensor& b, const char* op, F f, DA dfa, DB dfb) {
  auto bc = std::make_shared<Broadcast>(broadcast(a.shape(), b.shape(), op));
  const auto av = a.data();
  const auto bv = b.data();
  const std::size_t n = shape_numel(bc->out);
  std::vector<double> out(n);
  if (bc->same) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(av[i], bv[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(av[bc->ia[i]], bv[bc->ib[i]]);
  }
  Tensor result = make_result(bc->out, std::move(out), op);
  record(op, result, {a.node(), b.node()},
         [o = result.node().get(), x = a.node().get(), y = b.node().get(), bc, dfa, dfb] {
           const auto& g = o->grad;
           const std::size_t n = g.size();
           if (x->requires_grad) {
             auto& gx = x->ensure_grad();
             for (std::size_t i = 0; i < n; ++i) {
               const std::size_t ia = bc->same ? i : bc->ia[i];
               const std::size_t ib = bc->same ? i : bc->ib[i];
               gx[ia] += dfa(x->data[ia], y->data[ib], g[i]);
             }
           }
           if (y->requires_grad) {
             auto& gy = y->ensure_grad();
             for (std::size_t i = 0; i < n; ++i) {
               const std::size_t ia = bc->same ? i : bc->ia[i];
               const std::size_t ib = bc->same ? i : bc->ib[i];
               gy[ib] += dfb(x->data[ia], y->data[ib], g[i]);
             }
           }
         });
  return result;
}

// f(x) -> y; df(x, y) -> dy/dx.
template <class F, class DF>
Tensor unary(const Tensor& a, const char* op, F f, DF df) {
  const auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  Tensor result = make_result(a.shape(), std::move(out), op);
  record(op, result, {a.node()}, [o = result.node().get(), x = a.node().get(), df] {
    auto& gx = x->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += o->grad[i] * df(x->data[i], o->data[i]);
  });
  return result;
}

// C(n,m) += A(n,k) B(k,m)
void gemm_nn(std::size_t n, std::size_t k, std::size_t m, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = c + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// C(n,k) += G(n,m) B(k,m)^T
void gemm_nt(std::size_t n, std::size_t k, std::size_t m, const double* g, const double* b, double* c) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* grow = g + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * m;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
      c[i * k + p] += acc;
    }
  }
}

// C(k,m) += A(n,k)^T G(n,m)
void gemm_tn(std::size_t n, std::size_t k, std::size_t m, const double* a, const double* g, double* c) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* grow = g + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      double* crow = c + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * grow[j];
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double, double g) { return g; },
      [](double, double, double g) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double, double g) { return g; },
      [](double, double, double g) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y, double g) { return g * y; },
      [](double x, double, double g) { return g * x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "div", [](double x, double y) { return x / y; }, [](double, double y, double g) { return g / y; },
      [](double x, double y, double g) { return -g * x / (y * y); });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double s) {
  return unary(
      a, "scale", [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(
      a, "add_scalar", [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor square(const Tensor& a) {
  return unary(
      a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sqrt(const Tensor& a) {
  for (double v : a.data()) {
    if (v < 0.0) throw ContractError("sqrt of a negative value");
  }
  return unary(
      a, "sqrt", [](double x) { return std::sqrt(x); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor gelu(const Tensor& a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double k = 0.044715;
  return unary(
      a, "gelu",
      [](double x) { return 0.5 * x * (1.0 + std::tanh(c * (x + k * x * x * x))); },
      [](double x, double) {
        const double t = std::tanh(c * (x + k * x * x * x));
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * k * x * x);
      });
}

// ---------------------------------------------------------------------------
// Products

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_error("matmul", a.shape(), b.shape());
  const std::size_t n = a.dim(0);
  const std::size_t k = a.dim(1);
  const std::size_t m = b.dim(1);
  std::vector<double> out(n * m, 0.0);
  gemm_nn(n, k, m, a.data().data(), b.data().data(), out.data());
  Tensor result = make_result({n, m}, std::move(out), "matmul");
  record("matmul", result, {a.node(), b.node()},
         [o = result.node().get(), x = a.node().get(), y = b.node().get(), n, k, m] {
           if (x->requires_grad) gemm_nt(n, k, m, o->grad.data(), y->data.data(), x->ensure_grad().data());
           if (y->requires_grad) gemm_tn(n, k, m, x->data.data(), o->grad.data(), y->ensure_grad().data());
         });
  return result;
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
    shape_error("bmm", a.shape(), b.shape());
  }
  const std::size_t batch = a.dim(0);
  const std::size_t n = a.dim(1);
  const std::size_t k = a.dim(2);
  const std::size_t m = b.dim(2);
  std::vector<double> out(batch * n * m, 0.0);
  for (std::size_t t = 0; t < batch; ++t) {
    gemm_nn(n, k, m, a.data().data() + t * n * k, b.data().data() + t * k * m, out.data() + t * n * m);
  }
  Tensor result = make_result({batch, n, m}, std::move(out), "bmm");
  record("bmm", result, {a.node(), b.node()},
         [o = result.node().get(), x = a.node().get(), y = b.node().get(), batch, n, k, m] {
           for (std::size_t t = 0; t < batch; ++t) {
             const double* g = o->grad.data() + t * n * m;
             if (x->requires_grad) {
               gemm_nt(n, k, m, g, y->data.data() + t * k * m, x->ensure_grad().data() + t * n * k);
             }
             if (y->requires_grad) {
               gemm_tn(n, k, m, x->data.data() + t * n * k, g, y->ensure_grad().data() + t * k * m);
             }
           }
         });
  return result;
}

Tensor spmm(const SparseMatrix& a, const Tensor& x) {
  if (x.rank() != 2 || x.dim(0) != a.cols) shape_error("spmm", Shape{a.rows, a.cols}, x.shape());
  const std::size_t c = x.dim(1);
  std::vector<double> out(a.rows * c, 0.0);
  const auto xv = x.data();
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      const double v = a.values[p];
      const double* src = xv.data() + a.col_idx[p] * c;
      double* dst = out.data() + r * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] += v * src[j];
    }
  }
  Tensor result = make_result({a.rows, c}, std::move(out), "spmm");
  if (!grad_enabled() || !x.requires_grad()) return result;
  record("spmm", result, {x.node()}, [o = result.node().get(), in = x.node().get(),
                                       m = std::make_shared<const SparseMatrix>(a), c] {
    auto& gx = in->ensure_grad();
    for (std::size_t r = 0; r < m->rows; ++r) {
      for (std::size_t p = m->row_ptr[r]; p < m->row_ptr[r + 1]; ++p) {
        const double v = m->values[p];
        const double* g = o->grad.data() + r * c;
        double* dst = gx.data() + m->col_idx[p] * c;
        for (std::size_t j = 0; j < c; ++j) dst[j] += v * g[j];
      }
    }
  });
  return result;
}

// ---------------------------------------------------------------------------
// Layout

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose expects a matrix, got " + shape_to_string(a.shape()));
  return swap_axes(a, 0, 1);
}

Tensor swap_axes(const Tensor& a, std::size_t axis0, std::size_t axis1) {
  check_axis("swap_axes", a, axis0);
  check_axis("swap_axes", a, axis1);
  const Shape& in = a.shape();
  Shape out_shape = in;
  std::swap(out_shape[axis0], out_shape[axis1]);
  const std::size_t rank = in.size();
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t d = rank - 1; d-- > 0;) in_strides[d] = in_strides[d + 1] * in[d + 1];
  std::vector<std::size_t> strides = in_strides;
  std::swap(strides[axis0], strides[axis1]);

  const std::size_t n = a.numel();
  auto map = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t off = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    (*map)[flat] = off;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      off += strides[d];
      if (idx[d] < out_shape[d]) break;
      off -= strides[d] * idx[d];
      idx[d] = 0;
    }
  }
  const auto av = a.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = av[(*map)[i]];
  Tensor result = make_result(std::move(out_shape), std::move(out), "swap_axes");
  record("swap_axes", result, {a.node()}, [o = result.node().get(), x = a.node().get(), map] {
    auto& gx = x->ensure_grad();
    for (std::size_t i = 0; i < map->size(); ++i) gx[(*map)[i]] += o->grad[i];
  });
  return result;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) shape_error("reshape", a.shape(), shape);
  Tensor result = make_result(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()), "reshape");
  record("reshape", result, {a.node()}, [o = result.node().get(), x = a.node().get()] {
    auto& gx = x->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += o->grad[i];
  });
  return result;
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of an empty list");
  check_axis("concat", parts[0], axis);
  const Shape& first = parts[0].shape();
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<NodePtr> inputs;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) shape_error("concat", first, s);
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) shape_error("concat", first, s);
    }
    out_shape[axis] += s[axis];
    inputs.push_back(p.node());
  }
  const AxisView ov = axis_view(out_shape, axis);
  std::vector<double> out(shape_numel(out_shape));
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t block = p.dim(axis) * ov.inner;
    const auto pv = p.data();
    for (std::size_t o = 0; o < ov.outer; ++o) {
      std::copy(pv.begin() + o * block, pv.begin() + (o + 1) * block,
                out.begin() + o * ov.len * ov.inner + offset * ov.inner);
    }
    offset += p.dim(axis);
  }
  Tensor result = make_result(out_shape, std::move(out), "concat");
  record("concat", result, inputs, [o = result.node().get(), inputs, axis, ov] {
    std::size_t offset = 0;
    for (const auto& in : inputs) {
      const std::size_t len = in->shape[axis];
      if (in->requires_grad) {
        auto& gx = in->ensure_grad();
        const std::size_t block = len * ov.inner;
        for (std::size_t q = 0; q < ov.outer; ++q) {
          const double* src = o->grad.data() + q * ov.len * ov.inner + offset * ov.inner;
          double* dst = gx.data() + q * block;
          for (std::size_t j = 0; j < block; ++j) dst[j] += src[j];
        }
      }
      offset += len;
    }
  });
  return result;
}

Tensor stack(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("stack of an empty list");
  std::vector<Tensor> lifted;
  lifted.reserve(parts.size());
  for (const auto& p : parts) {
    if (p.shape() != parts[0].shape()) shape_error("stack", parts[0].shape(), p.shape());
    Shape s{1};
    s.insert(s.end(), p.shape().begin(), p.shape().end());
    lifted.push_back(reshape(p, std::move(s)));
  }
  return concat(lifted, 0);
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length) {
  check_axis("slice", a, axis);
  if (length == 0 || start + length > a.dim(axis)) {
    throw DimensionError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
                         ") out of range on axis " + std::to_string(axis) + " of " + shape_to_string(a.shape()));
  }
  const AxisView v = axis_view(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[axis] = length;
  std::vector<double> out(shape_numel(out_shape));
  const auto av = a.data();
  const std::size_t block = length * v.inner;
  for (std::size_t o = 0; o < v.outer; ++o) {
    const auto src = av.begin() + o * v.len * v.inner + start * v.inner;
    std::copy(src, src + block, out.begin() + o * block);
  }
  Tensor result = make_result(std::move(out_shape), std::move(out), "slice");
  record("slice", result, {a.node()}, [o = result.node().get(), x = a.node().get(), v, start, block] {
    auto& gx = x->ensure_grad();
    for (std::size_t q = 0; q < v.outer; ++q) {
      double* dst = gx.data() + q * v.len * v.inner + start * v.inner;
      const double* src = o->grad.data() + q * block;
      for (std::size_t j = 0; j < block; ++j) dst[j] += src[j];
    }
  });
  return result;
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  Tensor result = make_result({1}, {s}, "sum");
  record("sum", result, {a.node()}, [o = result.node().get(), x = a.node().get()] {
    auto& gx = x->ensure_grad();
    const double g = o->grad[0];
    for (auto& v : gx) v += g;
  });
  return result;
}

Tensor sum(const Tensor& a, std::size_t axis) {
  check_axis("sum", a, axis);
  const AxisView v = axis_view(a.shape(), axis);
  std::vector<double> out(v.outer * v.inner, 0.0);
  const auto av = a.data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t k = 0; k < v.len; ++k) {
      const double* src = av.data() + (o * v.len + k) * v.inner;
      double* dst = out.data() + o * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) dst[i] += src[i];
    }
  }
  Tensor result = make_result(drop_axis(a.shape(), axis), std::move(out), "sum");
  record("sum", result, {a.node()}, [o = result.node().get(), x = a.node().get(), v] {
    auto& gx = x->ensure_grad();
    for (std::size_t q = 0; q < v.outer; ++q) {
      for (std::size_t k = 0; k < v.len; ++k) {
        double* dst = gx.data() + (q * v.len + k) * v.inner;
        const double* g = o->grad.data() + q * v.inner;
        for (std::size_t i = 0; i < v.inner; ++i) dst[i] += g[i];
      }
    }
  });
  return result;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor mean(const Tensor& a, std::size_t axis) {
  check_axis("mean", a, axis);
  return scale(sum(a, axis), 1.0 / static_cast<double>(a.dim(axis)));
}

Tensor softmax(const Tensor& a, std::size_t axis) {
  check_axis("softmax", a, axis);
  const AxisView v = axis_view(a.shape(), axis);
  const auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      const std::size_t base = o * v.len * v.inner + i;
      double mx = av[base];
      for (std::size_t k = 1; k < v.len; ++k) mx = std::max(mx, av[base + k * v.inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < v.len; ++k) {
        const double e = std::exp(av[base + k * v.inner] - mx);
        out[base + k * v.inner] = e;
        z += e;
      }
      for (std::size_t k = 0; k < v.len; ++k) out[base + k * v.inner] /= z;
    }
  }
  Tensor result = make_result(a.shape(), std::move(out), "softmax");
  record("softmax", result, {a.node()}, [o = result.node().get(), x = a.node().get(), v] {
    auto& gx = x->ensure_grad();
    const auto& y = o->data;
    const auto& g = o->grad;
    for (std::size_t q = 0; q < v.outer; ++q) {
      for (std::size_t i = 0; i < v.inner; ++i) {
        const std::size_t base = q * v.len * v.inner + i;
        double dot = 0.0;
        for (std::size_t k = 0; k < v.len; ++k) dot += g[base + k * v.inner] * y[base + k * v.inner];
        for (std::size_t k = 0; k < v.len; ++k) {
          const std::size_t p = base + k * v.inner;
          gx[p] += y[p] * (g[p] - dot);
        }
      }
    }
  });
  return result;
}

Tensor layer_norm(const Tensor& a, double eps) {
  const std::size_t width = a.shape().back();
  const std::size_t rows = a.numel() / width;
  const auto av = a.data();
  std::vector<double> out(av.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * width;
    double mu = 0.0;
    for (std::size_t j = 0; j < width; ++j) mu += x[j];
    mu /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t j = 0; j < width; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= static_cast<double>(width);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < width; ++j) out[r * width + j] = (x[j] - mu) * is;
  }
  Tensor result = make_result(a.shape(), std::move(out), "layer_norm");
  record("layer_norm", result, {a.node()}, [o = result.node().get(), x = a.node().get(), inv_std, rows, width] {
    auto& gx = x->ensure_grad();
    const double w = static_cast<double>(width);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* g = o->grad.data() + r * width;
      const double* y = o->data.data() + r * width;
      double gm = 0.0;
      double gy = 0.0;
      for (std::size_t j = 0; j < width; ++j) {
        gm += g[j];
        gy += g[j] * y[j];
      }
      gm /= w;
      gy /= w;
      for (std::size_t j = 0; j < width; ++j) gx[r * width + j] += (*inv_std)[r] * (g[j] - gm - y[j] * gy);
    }
  });
  return result;
}

Tensor l2_norm(const Tensor& a, std::size_t axis) {
  check_axis("l2_norm", a, axis);
  const AxisView v = axis_view(a.shape(), axis);
  const auto av = a.data();
  std::vector<double> out(v.outer * v.inner, 0.0);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < v.len; ++k) {
        const double x = av[(o * v.len + k) * v.inner + i];
        s += x * x;
      }
      out[o * v.inner + i] = std::sqrt(s);
    }
  }
  Tensor result = make_result(drop_axis(a.shape(), axis), std::move(out), "l2_norm");
  record("l2_norm", result, {a.node()}, [o = result.node().get(), x = a.node().get(), v] {
    auto& gx = x->ensure_grad();
    for (std::size_t q = 0; q < v.outer; ++q) {
      for (std::size_t i = 0; i < v.inner; ++i) {
        const double norm = o->data[q * v.inner + i];
        if (norm == 0.0) continue;
        const double g = o->grad[q * v.inner + i] / norm;
        for (std::size_t k = 0; k < v.len; ++k) {
          const std::size_t p = (q * v.len + k) * v.inner + i;
          gx[p] += g * x->data[p];
        }
      }
    }
  });
  return result;
}

Tensor squash(const Tensor& a, std::size_t axis) {
  check_axis("squash", a, axis);
  const AxisView v = axis_view(a.shape(), axis);
  const auto av = a.data();
  std::vector<double> out(av.size());
  auto norms = std::make_shared<std::vector<double>>(v.outer * v.inner);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < v.len; ++k) {
        const double x = av[(o * v.len + k) * v.inner + i];
        s += x * x;
      }
      const double r = std::sqrt(s);
      (*norms)[o * v.inner + i] = r;
      // |s|^2/(1+|s|^2) * s/|s| == s * |s|/(1+|s|^2), which is defined at zero.
      const double factor = r / (1.0 + s);
      for (std::size_t k = 0; k < v.len; ++k) {
        const std::size_t p = (o * v.len + k) * v.inner + i;
        out[p] = factor * av[p];
      }
    }
  }
  Tensor result = make_result(a.shape(), std::move(out), "squash");
  record("squash", result, {a.node()}, [o = result.node().get(), x = a.node().get(), v, norms] {
    auto& gx = x->ensure_grad();
    for (std::size_t q = 0; q < v.outer; ++q) {
      for (std::size_t i = 0; i < v.inner; ++i) {
        const double r = (*norms)[q * v.inner + i];
        if (r == 0.0) continue;
        const double r2 = r * r;
        const double factor = r / (1.0 + r2);
        const double dfactor = (1.0 - r2) / ((1.0 + r2) * (1.0 + r2));
        double gs = 0.0;
        for (std::size_t k = 0; k < v.len; ++k) {
          const std::size_t p = (q * v.len + k) * v.inner + i;
          gs += o->grad[p] * x->data[p];
        }
        const double coef = dfactor / r * gs;
        for (std::size_t k = 0; k < v.len; ++k) {
          const std::size_t p = (q * v.len + k) * v.inner + i;
          gx[p] += factor * o->grad[p] + coef * x->data[p];
        }
      }
    }
  });
  return result;
}

}  // namespace gasgraph
