#include "monoattn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "monoattn/kernels.hpp"

namespace monoattn {

namespace {

bool tracing(std::initializer_list<const Tensor*> inputs) {
  if (!GraphTape::current()) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

// Registers node ids (inputs before output, preserving tape order) and the
// backward closure.
template <class Fn>
void trace(const char* op, std::initializer_list<const Tensor*> inputs, Tensor& out,
           Fn&& backward_fn) {
  GraphTape* tape = GraphTape::current();
  for (const Tensor* t : inputs) tape->node_id(*t);
  tape->node_id(out);
  out.set_requires_grad(true);
  tape->record(op, out, std::forward<Fn>(backward_fn));
}

void check_2d(const char* op, const Tensor& t) {
  if (t.ndim() != 2)
    throw ShapeError(std::string(op) + ": expected a 2-D tensor, got " + shape_str(t.shape()));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d("matmul", a);
  check_2d("matmul", b);
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw ShapeError("matmul: inner dimensions disagree: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  Tensor out = Tensor::zeros({m, n});
  kernels::matmul_nn(a.data().data(), b.data().data(), out.data().data(), m, k, n);
  if (tracing({&a, &b})) {
    trace("matmul", {&a, &b}, out, [a, b, out, m, k, n]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad().data();
      if (a.requires_grad()) {
        a.ensure_grad();
        kernels::matmul_nt(g, b.data().data(), a.grad().data(), m, n, k);
      }
      if (b.requires_grad()) {
        b.ensure_grad();
        kernels::matmul_tn(a.data().data(), g, b.grad().data(), k, m, n);
      }
    });
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check_2d("matmul_nt", a);
  check_2d("matmul_nt", b);
  const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k)
    throw ShapeError("matmul_nt: inner dimensions disagree: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()) + "^T");
  Tensor out = Tensor::zeros({m, n});
  kernels::matmul_nt(a.data().data(), b.data().data(), out.data().data(), m, k, n);
  if (tracing({&a, &b})) {
    trace("matmul_nt", {&a, &b}, out, [a, b, out, m, k, n]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad().data();
      if (a.requires_grad()) {
        a.ensure_grad();
        kernels::matmul_nn(g, b.data().data(), a.grad().data(), m, n, k);
      }
      if (b.requires_grad()) {
        b.ensure_grad();
        kernels::matmul_tn(g, a.data().data(), b.grad().data(), n, m, k);
      }
    });
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  check_2d("matmul_tn", a);
  check_2d("matmul_tn", b);
  const int k = a.dim(0), m = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw ShapeError("matmul_tn: inner dimensions disagree: " + shape_str(a.shape()) + "^T vs " +
                     shape_str(b.shape()));
  Tensor out = Tensor::zeros({m, n});
  kernels::matmul_tn(a.data().data(), b.data().data(), out.data().data(), m, k, n);
  if (tracing({&a, &b})) {
    trace("matmul_tn", {&a, &b}, out, [a, b, out, m, k, n]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad().data();
      if (a.requires_grad()) {
        a.ensure_grad();
        kernels::matmul_nt(b.data().data(), g, a.grad().data(), k, n, m);
      }
      if (b.requires_grad()) {
        b.ensure_grad();
        kernels::matmul_nn(a.data().data(), g, b.grad().data(), k, m, n);
      }
    });
  }
  return out;
}

namespace {

// Generic elementwise unary op; dfy computes the local derivative from the
// input and output values.
template <class F, class DF>
Tensor unary_op(const char* name, const Tensor& x, F&& f, DF&& dfy) {
  Tensor out = Tensor::zeros(x.shape());
  const std::size_t n = x.numel();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = f(x.data()[i]);
  if (tracing({&x})) {
    trace(name, {&x}, out, [x, out, dfy]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      x.ensure_grad();
      const std::size_t n2 = x.numel();
      for (std::size_t i = 0; i < n2; ++i)
        x.grad()[i] += out.grad()[i] * dfy(x.data()[i], out.data()[i]);
    });
  }
  return out;
}

}  // namespace

Tensor tanh(const Tensor& x) {
  return unary_op(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      "sigmoid", x, [](double v) { return stable_sigmoid(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& x) {
  return unary_op(
      "exp", x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (std::size_t i = 0; i < x.numel(); ++i)
    if (!(x.data()[i] > 0.0))
      throw DomainError("log: non-positive element " + std::to_string(x.data()[i]) +
                        " at index " + std::to_string(i));
  return unary_op(
      "log", x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor neg(const Tensor& x) {
  return unary_op(
      "neg", x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

namespace {

enum class BinKind { Add, Sub, Mul };

Tensor binary_op(const char* name, BinKind kind, const Tensor& a, const Tensor& b) {
  const bool broadcast = a.ndim() == 2 && b.ndim() == 1 && b.dim(0) == a.dim(1);
  if (!broadcast && a.shape() != b.shape())
    throw ShapeError(std::string(name) + ": incompatible shapes " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  Tensor out = Tensor::zeros(a.shape());
  const std::size_t n = a.numel();
  const std::size_t cols = broadcast ? static_cast<std::size_t>(a.dim(1)) : n;
  for (std::size_t i = 0; i < n; ++i) {
    const double bv = b.data()[broadcast ? i % cols : i];
    switch (kind) {
      case BinKind::Add: out.data()[i] = a.data()[i] + bv; break;
      case BinKind::Sub: out.data()[i] = a.data()[i] - bv; break;
      case BinKind::Mul: out.data()[i] = a.data()[i] * bv; break;
    }
  }
  if (tracing({&a, &b})) {
    trace(name, {&a, &b}, out, [a, b, out, kind, broadcast, cols]() mutable {
      if (!out.has_grad()) return;
      const std::size_t n2 = out.numel();
      if (a.requires_grad()) {
        a.ensure_grad();
        for (std::size_t i = 0; i < n2; ++i) {
          const double g = out.grad()[i];
          const double bv = b.data()[broadcast ? i % cols : i];
          a.grad()[i] += kind == BinKind::Mul ? g * bv : g;
        }
      }
      if (b.requires_grad()) {
        b.ensure_grad();
        for (std::size_t i = 0; i < n2; ++i) {
          const double g = out.grad()[i];
          const std::size_t j = broadcast ? i % cols : i;
          switch (kind) {
            case BinKind::Add: b.grad()[j] += g; break;
            case BinKind::Sub: b.grad()[j] -= g; break;
            case BinKind::Mul: b.grad()[j] += g * a.data()[i]; break;
          }
        }
      }
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op("add", BinKind::Add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op("sub", BinKind::Sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op("mul", BinKind::Mul, a, b); }

Tensor scale(const Tensor& x, double c) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out.data()[i] = c * x.data()[i];
  if (tracing({&x})) {
    trace("scale", {&x}, out, [x, out, c]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      x.ensure_grad();
      for (std::size_t i = 0; i < x.numel(); ++i) x.grad()[i] += c * out.grad()[i];
    });
  }
  return out;
}

Tensor add_const(const Tensor& x, double c) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out.data()[i] = x.data()[i] + c;
  if (tracing({&x})) {
    trace("add_const", {&x}, out, [x, out]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      x.ensure_grad();
      for (std::size_t i = 0; i < x.numel(); ++i) x.grad()[i] += out.grad()[i];
    });
  }
  return out;
}

Tensor softmax_masked(const Tensor& x, const Mask& mask) {
  if (x.ndim() != 1)
    throw ShapeError("softmax_masked: expected 1-D input, got " + shape_str(x.shape()));
  const std::size_t n = x.numel();
  if (mask.size() != n)
    throw ShapeError("softmax_masked: mask length " + std::to_string(mask.size()) +
                     " does not match input length " + std::to_string(n));
  double maxv = -HUGE_VAL;
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) {
      any = true;
      maxv = std::max(maxv, x.data()[i]);
    }
  }
  if (!any) throw InvalidMaskError("softmax_masked: mask selects no positions");
  Tensor out = Tensor::zeros(x.shape());
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) {
      out.data()[i] = std::exp(x.data()[i] - maxv);
      z += out.data()[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i]) out.data()[i] /= z;
  if (tracing({&x})) {
    Mask m = mask;
    trace("softmax_masked", {&x}, out, [x, out, m]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      x.ensure_grad();
      const std::size_t n2 = x.numel();
      double s = 0.0;
      for (std::size_t i = 0; i < n2; ++i)
        if (m[i]) s += out.grad()[i] * out.data()[i];
      for (std::size_t i = 0; i < n2; ++i)
        if (m[i]) x.grad()[i] += out.data()[i] * (out.grad()[i] - s);
    });
  }
  return out;
}

Tensor softmax(const Tensor& x) {
  return softmax_masked(x, Mask(x.numel(), 1));
}

namespace {

int leading_rows(const Tensor& x) {
  if (x.ndim() == 1 || x.ndim() == 2) return x.dim(0);
  throw ShapeError("row access expects a 1-D or 2-D tensor, got " + shape_str(x.shape()));
}

std::size_t row_width(const Tensor& x) {
  return x.ndim() == 2 ? static_cast<std::size_t>(x.dim(1)) : 1;
}

}  // namespace

Tensor slice_rows(const Tensor& x, int lo, int hi) {
  const int rows = leading_rows(x);
  if (lo < 0 || hi <= lo || hi > rows)
    throw IndexError("slice_rows: range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                     ") out of bounds for " + std::to_string(rows) + " rows");
  const std::size_t w = row_width(x);
  std::vector<int> out_shape = x.shape();
  out_shape[0] = hi - lo;
  Tensor out = Tensor::zeros(out_shape);
  std::copy(x.data().begin() + static_cast<std::ptrdiff_t>(lo * w),
            x.data().begin() + static_cast<std::ptrdiff_t>(hi * w), out.data().begin());
  if (tracing({&x})) {
    trace("slice_rows", {&x}, out, [x, out, lo, w]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      x.ensure_grad();
      const std::size_t n2 = out.numel();
      const std::size_t base = static_cast<std::size_t>(lo) * w;
      for (std::size_t i = 0; i < n2; ++i) x.grad()[base + i] += out.grad()[i];
    });
  }
  return out;
}

Tensor take_rows(const Tensor& x, const std::vector<int>& rows) {
  check_2d("take_rows", x);
  if (rows.empty()) throw IndexError("take_rows: empty row list");
  const int s = x.dim(0);
  const std::size_t w = row_width(x);
  for (int r : rows)
    if (r < 0 || r >= s)
      throw IndexError("take_rows: row " + std::to_string(r) + " out of bounds for " +
                       std::to_string(s) + " rows");
  Tensor out = Tensor::zeros({static_cast<int>(rows.size()), x.dim(1)});
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(rows[i] * w), w,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * w));
  if (tracing({&x})) {
    std::vector<int> idx = rows;
    trace("take_rows", {&x}, out, [x, out, idx, w]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      x.ensure_grad();
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::size_t src = i * w, dst = static_cast<std::size_t>(idx[i]) * w;
        for (std::size_t j = 0; j < w; ++j) x.grad()[dst + j] += out.grad()[src + j];
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  Tensor out = Tensor::scalar(s);
  if (tracing({&x})) {
    trace("sum", {&x}, out, [x, out]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      x.ensure_grad();
      const double g = out.grad()[0];
      for (std::size_t i = 0; i < x.numel(); ++i) x.grad()[i] += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  const double inv = 1.0 / static_cast<double>(x.numel());
  double s = 0.0;
  for (double v : x.data()) s += v;
  Tensor out = Tensor::scalar(s * inv);
  if (tracing({&x})) {
    trace("mean", {&x}, out, [x, out, inv]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      x.ensure_grad();
      const double g = out.grad()[0] * inv;
      for (std::size_t i = 0; i < x.numel(); ++i) x.grad()[i] += g;
    });
  }
  return out;
}

Tensor sum_axis(const Tensor& x, int axis) {
  check_2d("sum_axis", x);
  if (axis != 0 && axis != 1)
    throw ShapeError("sum_axis: invalid axis " + std::to_string(axis) + " for shape " +
                     shape_str(x.shape()));
  const int m = x.dim(0), n = x.dim(1);
  Tensor out = Tensor::zeros({axis == 0 ? n : m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out.data()[static_cast<std::size_t>(axis == 0 ? j : i)] +=
          x.data()[static_cast<std::size_t>(i) * n + j];
  if (tracing({&x})) {
    trace("sum_axis", {&x}, out, [x, out, axis, m, n]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      x.ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          x.grad()[static_cast<std::size_t>(i) * n + j] +=
              out.grad()[static_cast<std::size_t>(axis == 0 ? j : i)];
    });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat: no parts");
  int total = 0;
  for (const Tensor& p : parts) {
    if (p.ndim() != 1)
      throw ShapeError("concat: expected 1-D parts, got " + shape_str(p.shape()));
    total += p.dim(0);
  }
  Tensor out = Tensor::zeros({total});
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    std::copy(p.data().begin(), p.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(off));
    off += p.numel();
  }
  bool any = false;
  if (GraphTape::current())
    for (const Tensor& p : parts) any = any || p.requires_grad();
  if (any) {
    GraphTape* tape = GraphTape::current();
    for (const Tensor& p : parts) tape->node_id(p);
    tape->node_id(out);
    out.set_requires_grad(true);
    std::vector<Tensor> ins = parts;
    tape->record("concat", out, [ins, out]() mutable {
      if (!out.has_grad()) return;
      std::size_t off2 = 0;
      for (Tensor& p : ins) {
        if (p.requires_grad()) {
          p.ensure_grad();
          for (std::size_t i = 0; i < p.numel(); ++i) p.grad()[i] += out.grad()[off2 + i];
        }
        off2 += p.numel();
      }
    });
  }
  return out;
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  const int d = rows.front().dim(0);
  for (const Tensor& r : rows)
    if (r.ndim() != 1 || r.dim(0) != d)
      throw ShapeError("stack_rows: row shape " + shape_str(r.shape()) + " does not match [" +
                       std::to_string(d) + "]");
  Tensor out = Tensor::zeros({static_cast<int>(rows.size()), d});
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].data().begin(), rows[i].data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(i * d));
  bool any = false;
  if (GraphTape::current())
    for (const Tensor& r : rows) any = any || r.requires_grad();
  if (any) {
    GraphTape* tape = GraphTape::current();
    for (const Tensor& r : rows) tape->node_id(r);
    tape->node_id(out);
    out.set_requires_grad(true);
    std::vector<Tensor> ins = rows;
    const std::size_t w = static_cast<std::size_t>(d);
    tape->record("stack_rows", out, [ins, out, w]() mutable {
      if (!out.has_grad()) return;
      for (std::size_t i = 0; i < ins.size(); ++i) {
        Tensor& r = ins[i];
        if (!r.requires_grad()) continue;
        r.ensure_grad();
        for (std::size_t j = 0; j < w; ++j) r.grad()[j] += out.grad()[i * w + j];
      }
    });
  }
  return out;
}

Tensor expand(const Tensor& x, int n) {
  if (x.numel() != 1)
    throw ShapeError("expand: expected a scalar tensor, got " + shape_str(x.shape()));
  if (n < 1) throw ShapeError("expand: length must be positive, got " + std::to_string(n));
  Tensor out = Tensor::zeros({n});
  std::fill(out.data().begin(), out.data().end(), x.data()[0]);
  if (tracing({&x})) {
    trace("expand", {&x}, out, [x, out]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      x.ensure_grad();
      double s = 0.0;
      for (double g : out.grad()) s += g;
      x.grad()[0] += s;
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
  std::size_t n = 1;
  for (int d : shape) n *= d > 0 ? static_cast<std::size_t>(d) : 0;
  if (n != x.numel())
    throw ShapeError("reshape: element count mismatch: " + shape_str(x.shape()) + " -> " +
                     shape_str(shape));
  Tensor out = Tensor::from(std::move(shape), x.data());
  if (tracing({&x})) {
    trace("reshape", {&x}, out, [x, out]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      x.ensure_grad();
      for (std::size_t i = 0; i < x.numel(); ++i) x.grad()[i] += out.grad()[i];
    });
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, int target) {
  if (logits.ndim() != 1)
    throw ShapeError("cross_entropy: expected 1-D logits, got " + shape_str(logits.shape()));
  const int v = logits.dim(0);
  if (target < 0 || target >= v)
    throw IndexError("cross_entropy: target " + std::to_string(target) +
                     " out of range for vocab " + std::to_string(v));
  double maxv = -HUGE_VAL;
  for (double x : logits.data()) maxv = std::max(maxv, x);
  double z = 0.0;
  for (double x : logits.data()) z += std::exp(x - maxv);
  const double lse = maxv + std::log(z);
  Tensor out = Tensor::scalar(lse - logits.data()[static_cast<std::size_t>(target)]);
  if (tracing({&logits})) {
    trace("cross_entropy", {&logits}, out, [logits, out, target, maxv, z]() mutable {
      if (!out.has_grad() || !logits.requires_grad()) return;
      logits.ensure_grad();
      const double g = out.grad()[0];
      for (std::size_t i = 0; i < logits.numel(); ++i) {
        const double p = std::exp(logits.data()[i] - maxv) / z;
        logits.grad()[i] += g * (p - (static_cast<int>(i) == target ? 1.0 : 0.0));
      }
    });
  }
  return out;
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 1 || b.ndim() != 1 || a.dim(0) != b.dim(0))
    throw ShapeError("dot: expected matching 1-D tensors, got " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  return sum(mul(a, b));
}

}  // namespace monoattn
