/*
 * Copyright 2026 The clforge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "clforge/numcore/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "clforge/error.hpp"

namespace clforge::num {

namespace {

Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw NumericError("operation on an unbound variable");
  return *a.tape;
}

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) throw NumericError("operands recorded on different tapes");
  return tape_of(a);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw NumericError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

void require_rank2(const char* op, const Tensor& a) {
  if (a.rank() != 2) throw NumericError(std::string(op) + ": expected a matrix, got " + shape_str(a.shape()));
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

// Elementwise unary op whose derivative is a function of (x, y).
template <typename F, typename D>
Var unary(const char* op, Var a, F f, D dfdx) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  return t.push(op, Tensor(x.shape(), std::move(out)), {a.id}, [ai = a.id, dfdx](Tape& tp, std::size_t self) {
    auto g = tp.grad(self);
    const auto& xv = tp.value(ai);
    const auto& yv = tp.value(self);
    auto acc = tp.grad_accumulator(ai);
    for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * dfdx(xv[i], yv[i]);
  });
}

}  // namespace

const Tensor& Var::value() const { return tape_of(*this).value(id); }

Var Tape::parameter(std::string id, Tensor value) {
  nodes_.push_back(Node{"parameter", std::move(value), {}, record_grad_, std::move(id), nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{"constant", std::move(value), {}, false, {}, nullptr});
  return Var{this, nodes_.size() - 1};
}

void Tape::clear() {
  nodes_.clear();
  grads_.clear();
}

Var Tape::push(const char* op, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by operation '") + op + "' (node " +
                       std::to_string(nodes_.size()) + ")");
  }
  bool needs = false;
  if (record_grad_) {
    for (auto i : inputs) needs = needs || nodes_[i].needs_grad;
  }
  Node node{op, std::move(value), {}, needs, {}, nullptr};
  if (needs) {
    node.inputs = std::move(inputs);
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

std::span<double> Tape::grad_accumulator(std::size_t id) {
  auto& g = grads_[id];
  if (g.empty()) g.assign(nodes_[id].value.size(), 0.0);
  return g;
}

GradMap backward(Var loss) {
  Tape& t = tape_of(loss);
  const Tensor& lv = t.value(loss.id);
  if (!lv.is_scalar()) throw NumericError("backward requires scalar loss, got shape " + shape_str(lv.shape()));
  if (!t.recording()) throw NumericError("backward on a tape that does not record gradients");

  t.grads_.assign(t.nodes_.size(), {});
  if (t.nodes_[loss.id].needs_grad) t.grad_accumulator(loss.id)[0] = 1.0;

  for (std::size_t n = loss.id + 1; n-- > 0;) {
    auto& node = t.nodes_[n];
    if (!node.backward || t.grads_[n].empty()) continue;
    node.backward(t, n);
    for (auto in : node.inputs) {
      for (double g : t.grads_[in]) {
        if (!std::isfinite(g)) {
          std::string op = node.op;
          t.clear();
          throw NumericError("non-finite gradient in backward of operation '" + op + "' (node " +
                             std::to_string(n) + ")");
        }
      }
    }
    // Intermediate gradients are no longer needed once propagated.
    if (node.param_id.empty()) std::vector<double>().swap(t.grads_[n]);
  }

  GradMap out;
  for (std::size_t n = 0; n < t.nodes_.size(); ++n) {
    const auto& node = t.nodes_[n];
    if (node.param_id.empty()) continue;
    auto it = out.find(node.param_id);
    if (it == out.end()) it = out.emplace(node.param_id, Tensor::zeros(node.value.shape())).first;
    if (!t.grads_[n].empty()) {
      auto dst = it->second.mutable_data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += t.grads_[n][i];
    }
  }
  t.clear();
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape("add", x, y);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return t.push("add", Tensor(x.shape(), std::move(out)), {a.id, b.id}, [ai = a.id, bi = b.id](Tape& tp, std::size_t self) {
    auto g = tp.grad(self);
    for (auto in : {ai, bi}) {
      if (!tp.needs_grad(in)) continue;
      auto acc = tp.grad_accumulator(in);
      for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape("sub", x, y);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return t.push("sub", Tensor(x.shape(), std::move(out)), {a.id, b.id}, [ai = a.id, bi = b.id](Tape& tp, std::size_t self) {
    auto g = tp.grad(self);
    if (tp.needs_grad(ai)) {
      auto acc = tp.grad_accumulator(ai);
      for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
    }
    if (tp.needs_grad(bi)) {
      auto acc = tp.grad_accumulator(bi);
      for (std::size_t i = 0; i < g.size(); ++i) acc[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape("mul", x, y);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return t.push("mul", Tensor(x.shape(), std::move(out)), {a.id, b.id}, [ai = a.id, bi = b.id](Tape& tp, std::size_t self) {
    auto g = tp.grad(self);
    const auto& xv = tp.value(ai);
    const auto& yv = tp.value(bi);
    if (tp.needs_grad(ai)) {
      auto acc = tp.grad_accumulator(ai);
      for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * yv[i];
    }
    if (tp.needs_grad(bi)) {
      auto acc = tp.grad_accumulator(bi);
      for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * xv[i];
    }
  });
}

Var scale(Var a, double s) {
  return unary("scale", a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Var square(Var a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var tanh(Var a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var gelu(Var a) {
  return unary(
      "gelu", a,
      [](double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x))); },
      [](double x, double) {
        const double u = kGeluC * (x + kGeluA * x * x * x);
        const double th = std::tanh(u);
        return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
      });
}

Var add_row(Var a, Var bias) {
  Tape& t = tape_of(a, bias);
  const Tensor& x = a.value();
  const Tensor& b = bias.value();
  require_rank2("add_row", x);
  const std::size_t m = x.rows(), n = x.cols();
  if (b.size() != n) throw NumericError("add_row: bias of " + std::to_string(b.size()) + " for " + std::to_string(n) + " columns");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] + b[j];
  }
  return t.push("add_row", Tensor(x.shape(), std::move(out)), {a.id, bias.id}, [ai = a.id, bi = bias.id, m, n](Tape& tp, std::size_t self) {
    auto g = tp.grad(self);
    if (tp.needs_grad(ai)) {
      auto acc = tp.grad_accumulator(ai);
      for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
    }
    if (tp.needs_grad(bi)) {
      auto acc = tp.grad_accumulator(bi);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) acc[j] += g[i * n + j];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Matrix products

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_rank2("matmul", x);
  require_rank2("matmul", y);
  const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
  if (y.rows() != k) throw NumericError("matmul: inner dimensions " + shape_str(x.shape()) + " x " + shape_str(y.shape()));
  std::vector<double> out(m * n, 0.0);
  const double* xp = x.data().data();
  const double* yp = y.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = xp[i * k + p];
      const double* yr = yp + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += xv * yr[j];
    }
  }
  return t.push("matmul", Tensor({m, n}, std::move(out)), {a.id, b.id}, [ai = a.id, bi = b.id, m, k, n](Tape& tp, std::size_t self) {
    const double* g = tp.grad(self).data();
    const double* xp = tp.value(ai).data().data();
    const double* yp = tp.value(bi).data().data();
    if (tp.needs_grad(ai)) {
      double* acc = tp.grad_accumulator(ai).data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double* yr = yp + p * n;
          const double* gr = g + i * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += gr[j] * yr[j];
          acc[i * k + p] += s;
        }
      }
    }
    if (tp.needs_grad(bi)) {
      double* acc = tp.grad_accumulator(bi).data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* gr = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double xv = xp[i * k + p];
          double* ar = acc + p * n;
          for (std::size_t j = 0; j < n; ++j) ar[j] += xv * gr[j];
        }
      }
    }
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_rank2("matmul_nt", x);
  require_rank2("matmul_nt", y);
  const std::size_t m = x.rows(), k = x.cols(), n = y.rows();
  if (y.cols() != k) throw NumericError("matmul_nt: inner dimensions " + shape_str(x.shape()) + " x " + shape_str(y.shape()) + "^T");
  std::vector<double> out(m * n);
  const double* xp = x.data().data();
  const double* yp = y.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* xr = xp + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* yr = yp + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += xr[p] * yr[p];
      out[i * n + j] = s;
    }
  }
  return t.push("matmul_nt", Tensor({m, n}, std::move(out)), {a.id, b.id}, [ai = a.id, bi = b.id, m, k, n](Tape& tp, std::size_t self) {
    const double* g = tp.grad(self).data();
    const double* xp = tp.value(ai).data().data();
    const double* yp = tp.value(bi).data().data();
    if (tp.needs_grad(ai)) {
      double* acc = tp.grad_accumulator(ai).data();
      for (std::size_t i = 0; i < m; ++i) {
        double* ar = acc + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = g[i * n + j];
          if (gv == 0.0) continue;
          const double* yr = yp + j * k;
          for (std::size_t p = 0; p < k; ++p) ar[p] += gv * yr[p];
        }
      }
    }
    if (tp.needs_grad(bi)) {
      double* acc = tp.grad_accumulator(bi).data();
      for (std::size_t i = 0; i < m; ++i) {
        const double* xr = xp + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = g[i * n + j];
          if (gv == 0.0) continue;
          double* ar = acc + j * k;
          for (std::size_t p = 0; p < k; ++p) ar[p] += gv * xr[p];
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Indexing

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  require_rank2("slice_cols", x);
  const std::size_t m = x.rows(), n = x.cols();
  if (count == 0 || start + count > n) throw NumericError("slice_cols: range out of bounds");
  std::vector<double> out(m * count);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(x.data().begin() + i * n + start, count, out.begin() + i * count);
  }
  return t.push("slice_cols", Tensor({m, count}, std::move(out)), {a.id}, [ai = a.id, m, n, start, count](Tape& tp, std::size_t self) {
    auto g = tp.grad(self);
    auto acc = tp.grad_accumulator(ai);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < count; ++j) acc[i * n + start + j] += g[i * count + j];
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw NumericError("concat_cols: no inputs");
  Tape& t = tape_of(parts[0]);
  const std::size_t m = parts[0].value().rows();
  std::vector<std::size_t> widths, ids;
  std::size_t n = 0;
  for (const auto& p : parts) {
    if (p.tape != &t) throw NumericError("operands recorded on different tapes");
    require_rank2("concat_cols", p.value());
    if (p.value().rows() != m) throw NumericError("concat_cols: row counts differ");
    widths.push_back(p.value().cols());
    ids.push_back(p.id);
    n += widths.back();
  }
  std::vector<double> out(m * n);
  std::size_t off = 0;
  for (std::size_t q = 0; q < parts.size(); ++q) {
    const auto& v = parts[q].value();
    for (std::size_t i = 0; i < m; ++i) std::copy_n(v.data().begin() + i * widths[q], widths[q], out.begin() + i * n + off);
    off += widths[q];
  }
  return t.push("concat_cols", Tensor({m, n}, std::move(out)), ids, [ids, widths, m, n](Tape& tp, std::size_t self) {
    auto g = tp.grad(self);
    std::size_t off = 0;
    for (std::size_t q = 0; q < ids.size(); ++q) {
      if (tp.needs_grad(ids[q])) {
        auto acc = tp.grad_accumulator(ids[q]);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < widths[q]; ++j) acc[i * widths[q] + j] += g[i * n + off + j];
        }
      }
      off += widths[q];
    }
  });
}

Var select_rows(Var a, std::vector<std::size_t> rows) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  require_rank2("select_rows", x);
  const std::size_t m = x.rows(), n = x.cols();
  if (rows.empty()) throw NumericError("select_rows: no rows selected");
  std::vector<double> out(rows.size() * n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= m) throw NumericError("select_rows: row index out of range");
    std::copy_n(x.data().begin() + rows[r] * n, n, out.begin() + r * n);
  }
  const std::size_t k = rows.size();
  return t.push("select_rows", Tensor({k, n}, std::move(out)), {a.id}, [ai = a.id, rows = std::move(rows), n](Tape& tp, std::size_t self) {
    auto g = tp.grad(self);
    auto acc = tp.grad_accumulator(ai);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t j = 0; j < n; ++j) acc[rows[r] * n + j] += g[r * n + j];
    }
  });
}

Var embedding(Var table, std::vector<int> ids) {
  Tape& t = tape_of(table);
  const Tensor& w = table.value();
  require_rank2("embedding", w);
  const std::size_t v = w.rows(), d = w.cols();
  if (ids.empty()) throw NumericError("embedding: empty id sequence");
  std::vector<double> out(ids.size() * d);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= v) throw NumericError("embedding: id " + std::to_string(ids[r]) + " out of range");
    std::copy_n(w.data().begin() + static_cast<std::size_t>(ids[r]) * d, d, out.begin() + r * d);
  }
  const std::size_t len = ids.size();
  return t.push("embedding", Tensor({len, d}, std::move(out)), {table.id}, [ti = table.id, ids = std::move(ids), d](Tape& tp, std::size_t self) {
    auto g = tp.grad(self);
    auto acc = tp.grad_accumulator(ti);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      const std::size_t base = static_cast<std::size_t>(ids[r]) * d;
      for (std::size_t j = 0; j < d; ++j) acc[base + j] += g[r * d + j];
    }
  });
}

// ---------------------------------------------------------------------------
// Normalisation

Var masked_softmax(Var a, bool causal) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  require_rank2("masked_softmax", x);
  const std::size_t m = x.rows(), n = x.cols();
  if (causal && m != n) throw NumericError("masked_softmax: causal mask needs a square matrix");
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t width = causal ? i + 1 : n;
    const double* row = x.data().data() + i * n;
    double mx = row[0];
    for (std::size_t j = 1; j < width; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      out[i * n + j] = std::exp(row[j] - mx);
      z += out[i * n + j];
    }
    for (std::size_t j = 0; j < width; ++j) out[i * n + j] /= z;
  }
  return t.push("masked_softmax", Tensor({m, n}, std::move(out)), {a.id}, [ai = a.id, m, n, causal](Tape& tp, std::size_t self) {
    auto g = tp.grad(self);
    const auto& y = tp.value(self);
    auto acc = tp.grad_accumulator(ai);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t width = causal ? i + 1 : n;
      double dot = 0.0;
      for (std::size_t j = 0; j < width; ++j) dot += g[i * n + j] * y[i * n + j];
      for (std::size_t j = 0; j < width; ++j) acc[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
    }
  });
}

Var softmax(Var a) { return masked_softmax(a, false); }

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& t = tape_of(x, gain);
  if (bias.tape != &t) throw NumericError("operands recorded on different tapes");
  const Tensor& xv = x.value();
  require_rank2("layer_norm", xv);
  const std::size_t m = xv.rows(), n = xv.cols();
  if (gain.value().size() != n || bias.value().size() != n) throw NumericError("layer_norm: gain/bias size mismatch");
  const auto& gv = gain.value();
  const auto& bv = bias.value();
  std::vector<double> out(m * n);
  std::vector<double> xhat(m * n), inv(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data().data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mu) * inv[i];
      out[i * n + j] = xhat[i * n + j] * gv[j] + bv[j];
    }
  }
  return t.push("layer_norm", Tensor({m, n}, std::move(out)), {x.id, gain.id, bias.id},
                [xi = x.id, gi = gain.id, bi = bias.id, m, n, xhat = std::move(xhat), inv = std::move(inv)](Tape& tp, std::size_t self) {
                  auto g = tp.grad(self);
                  const auto& gv = tp.value(gi);
                  if (tp.needs_grad(gi)) {
                    auto acc = tp.grad_accumulator(gi);
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t j = 0; j < n; ++j) acc[j] += g[i * n + j] * xhat[i * n + j];
                  }
                  if (tp.needs_grad(bi)) {
                    auto acc = tp.grad_accumulator(bi);
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t j = 0; j < n; ++j) acc[j] += g[i * n + j];
                  }
                  if (tp.needs_grad(xi)) {
                    auto acc = tp.grad_accumulator(xi);
                    const double inv_n = 1.0 / static_cast<double>(n);
                    for (std::size_t i = 0; i < m; ++i) {
                      double s1 = 0.0, s2 = 0.0;
                      for (std::size_t j = 0; j < n; ++j) {
                        const double dxh = g[i * n + j] * gv[j];
                        s1 += dxh;
                        s2 += dxh * xhat[i * n + j];
                      }
                      for (std::size_t j = 0; j < n; ++j) {
                        const double dxh = g[i * n + j] * gv[j];
                        acc[i * n + j] += inv[i] * (dxh - s1 * inv_n - xhat[i * n + j] * s2 * inv_n);
                      }
                    }
                  }
                });
}

Var dropout(Var a, double p, Rng& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw NumericError("dropout probability must be < 1");
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  std::vector<double> mask(x.size());
  const double keep = 1.0 / (1.0 - p);
  for (auto& v : mask) v = rng.uniform() < p ? 0.0 : keep;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * mask[i];
  return t.push("dropout", Tensor(x.shape(), std::move(out)), {a.id}, [ai = a.id, mask = std::move(mask)](Tape& tp, std::size_t self) {
    auto g = tp.grad(self);
    auto acc = tp.grad_accumulator(ai);
    for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * mask[i];
  });
}

// ---------------------------------------------------------------------------
// Reductions and losses

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return t.push("sum", Tensor::scalar(s), {a.id}, [ai = a.id](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0];
    for (auto& v : tp.grad_accumulator(ai)) v += g;
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var cross_entropy(Var logits, std::vector<int> targets) {
  Tape& t = tape_of(logits);
  const Tensor& x = logits.value();
  require_rank2("cross_entropy", x);
  const std::size_t m = x.rows(), n = x.cols();
  if (targets.size() != m) throw NumericError("cross_entropy: " + std::to_string(targets.size()) + " targets for " + std::to_string(m) + " rows");
  std::size_t count = 0;
  for (int tg : targets) {
    if (tg >= static_cast<int>(n)) throw NumericError("cross_entropy: target out of range");
    if (tg >= 0) ++count;
  }
  if (count == 0) throw NumericError("cross_entropy: no targets");
  std::vector<double> probs(m * n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (targets[i] < 0) continue;
    const double* row = x.data().data() + i * n;
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      probs[i * n + j] = std::exp(row[j] - mx);
      z += probs[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) probs[i * n + j] /= z;
    total += mx + std::log(z) - row[targets[i]];
  }
  const double inv = 1.0 / static_cast<double>(count);
  return t.push("cross_entropy", Tensor::scalar(total * inv), {logits.id},
                [li = logits.id, m, n, inv, targets = std::move(targets), probs = std::move(probs)](Tape& tp, std::size_t self) {
                  const double g = tp.grad(self)[0] * inv;
                  auto acc = tp.grad_accumulator(li);
                  for (std::size_t i = 0; i < m; ++i) {
                    if (targets[i] < 0) continue;
                    for (std::size_t j = 0; j < n; ++j) acc[i * n + j] += g * probs[i * n + j];
                    acc[i * n + static_cast<std::size_t>(targets[i])] -= g;
                  }
                });
}

}  // namespace clforge::num
