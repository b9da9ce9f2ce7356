// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/graph.hpp"

#include <algorithm>
#include <cmath>

#include "gadgetforge/error.hpp"
#include "gadgetforge/kernels.hpp"

namespace gadgetforge {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::ShapeMismatch, what);
}

}  // namespace

Var Graph::push(Tensor value, bool needs_grad, std::function<void(Graph&, const Node&)> backprop) {
  Node n;
  n.own = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Graph::leaf(const Tensor& value, Tensor* grad_sink) {
  Node n;
  n.borrowed = &value;
  n.sink = grad_sink;
  n.needs_grad = grad_sink != nullptr;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tensor& Graph::value(Var v) const { return node(v).value(); }

Tensor Graph::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty()) return Tensor(n.value().rows, n.value().cols);
  return n.grad;
}

Tensor& Graph::grad_ref(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) n.grad = Tensor(n.value().rows, n.value().cols);
  return n.grad;
}

void Graph::backward(Var loss, double seed) {
  const Tensor& l = value(loss);
  require(l.rows == 1 && l.cols == 1, "backward needs a scalar loss");
  if (!needs(loss)) return;
  grad_ref(loss).data[0] += seed;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backprop) n.backprop(*this, n);
    if (n.sink) {
      require(n.sink->same_shape(n.grad), "gradient sink shape");
      for (std::size_t k = 0; k < n.grad.size(); ++k) n.sink->data[k] += n.grad.data[k];
    }
  }
}

Var Graph::matmul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require(av.cols == bv.rows, "matmul inner dimensions differ");
  Tensor c(av.rows, bv.cols);
  kernels::matmul(av.data, bv.data, c.data, av.rows, av.cols, bv.cols);
  return push(std::move(c), needs(a) || needs(b), [a, b](Graph& g, const Node& self) {
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    const std::size_t m = A.rows, k = A.cols, n = B.cols;
    if (g.needs(a)) kernels::matmul_a_bt_serial(self.grad.data, B.data, g.grad_ref(a).data, m, n, k);
    if (g.needs(b)) kernels::matmul_at_b_serial(A.data, self.grad.data, g.grad_ref(b).data, m, k, n);
  });
}

Var Graph::add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require(av.same_shape(bv), "add shapes differ");
  Tensor c = av;
  for (std::size_t i = 0; i < c.size(); ++i) c.data[i] += bv.data[i];
  return push(std::move(c), needs(a) || needs(b), [a, b](Graph& g, const Node& self) {
    for (Var v : {a, b}) {
      if (!g.needs(v)) continue;
      Tensor& gv = g.grad_ref(v);
      for (std::size_t i = 0; i < gv.size(); ++i) gv.data[i] += self.grad.data[i];
    }
  });
}

Var Graph::add_row(Var a, Var row) {
  const Tensor& av = value(a);
  const Tensor& rv = value(row);
  require(rv.rows == 1 && rv.cols == av.cols, "add_row needs a 1 x cols row");
  Tensor c = av;
  for (std::size_t r = 0; r < c.rows; ++r) {
    for (std::size_t j = 0; j < c.cols; ++j) c(r, j) += rv.data[j];
  }
  return push(std::move(c), needs(a) || needs(row), [a, row](Graph& g, const Node& self) {
    if (g.needs(a)) {
      Tensor& ga = g.grad_ref(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += self.grad.data[i];
    }
    if (g.needs(row)) {
      Tensor& gr = g.grad_ref(row);
      for (std::size_t r = 0; r < self.grad.rows; ++r) {
        for (std::size_t j = 0; j < self.grad.cols; ++j) gr.data[j] += self.grad(r, j);
      }
    }
  });
}

Var Graph::mul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require(av.same_shape(bv), "mul shapes differ");
  Tensor c = av;
  for (std::size_t i = 0; i < c.size(); ++i) c.data[i] *= bv.data[i];
  return push(std::move(c), needs(a) || needs(b), [a, b](Graph& g, const Node& self) {
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    if (g.needs(a)) {
      Tensor& ga = g.grad_ref(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += self.grad.data[i] * B.data[i];
    }
    if (g.needs(b)) {
      Tensor& gb = g.grad_ref(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] += self.grad.data[i] * A.data[i];
    }
  });
}

Var Graph::affine(Var a, double alpha, double beta) {
  Tensor c = value(a);
  for (double& x : c.data) x = alpha * x + beta;
  return push(std::move(c), needs(a), [a, alpha](Graph& g, const Node& self) {
    Tensor& ga = g.grad_ref(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += alpha * self.grad.data[i];
  });
}

Var Graph::mul_const(Var a, const Tensor& factor) {
  const Tensor& av = value(a);
  require(av.same_shape(factor), "mul_const shapes differ");
  Tensor c = av;
  for (std::size_t i = 0; i < c.size(); ++i) c.data[i] *= factor.data[i];
  return push(std::move(c), needs(a), [a, factor](Graph& g, const Node& self) {
    Tensor& ga = g.grad_ref(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += self.grad.data[i] * factor.data[i];
  });
}

Var Graph::sigmoid(Var a) {
  Tensor y = value(a);
  for (double& x : y.data) x = 1.0 / (1.0 + std::exp(-x));
  return push(std::move(y), needs(a), [a](Graph& g, const Node& self) {
    const Tensor& Y = self.value();
    Tensor& ga = g.grad_ref(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += self.grad.data[i] * Y.data[i] * (1.0 - Y.data[i]);
  });
}

Var Graph::tanh(Var a) {
  Tensor y = value(a);
  for (double& x : y.data) x = std::tanh(x);
  return push(std::move(y), needs(a), [a](Graph& g, const Node& self) {
    const Tensor& Y = self.value();
    Tensor& ga = g.grad_ref(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += self.grad.data[i] * (1.0 - Y.data[i] * Y.data[i]);
  });
}

Var Graph::relu(Var a) {
  Tensor y = value(a);
  for (double& x : y.data) x = x > 0.0 ? x : 0.0;
  return push(std::move(y), needs(a), [a](Graph& g, const Node& self) {
    const Tensor& X = g.value(a);
    Tensor& ga = g.grad_ref(a);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      if (X.data[i] > 0.0) ga.data[i] += self.grad.data[i];
    }
  });
}

Var Graph::concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat of nothing");
  const std::size_t rows = value(parts[0]).rows;
  std::size_t cols = 0;
  bool grad = false;
  for (Var p : parts) {
    require(value(p).rows == rows, "concat row counts differ");
    cols += value(p).cols;
    grad = grad || needs(p);
  }
  Tensor c(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& pv = value(p);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(pv.row_span(r).begin(), pv.row_span(r).end(), c.data.begin() + static_cast<std::ptrdiff_t>(r * cols + offset));
    }
    offset += pv.cols;
  }
  std::vector<Var> list(parts.begin(), parts.end());
  return push(std::move(c), grad, [list](Graph& g, const Node& self) {
    std::size_t off = 0;
    for (Var p : list) {
      const std::size_t w = g.value(p).cols;
      if (g.needs(p)) {
        Tensor& gp = g.grad_ref(p);
        for (std::size_t r = 0; r < gp.rows; ++r) {
          for (std::size_t j = 0; j < w; ++j) gp(r, j) += self.grad(r, off + j);
        }
      }
      off += w;
    }
  });
}

Var Graph::slice_rows(Var a, std::size_t start, std::size_t count) {
  const Tensor& av = value(a);
  require(start + count <= av.rows, "slice_rows out of range");
  Tensor c(count, av.cols);
  std::copy(av.data.begin() + static_cast<std::ptrdiff_t>(start * av.cols),
            av.data.begin() + static_cast<std::ptrdiff_t>((start + count) * av.cols), c.data.begin());
  return push(std::move(c), needs(a), [a, start](Graph& g, const Node& self) {
    Tensor& ga = g.grad_ref(a);
    const std::size_t base = start * ga.cols;
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga.data[base + i] += self.grad.data[i];
  });
}

Var Graph::slice_cols(Var a, std::size_t start, std::size_t count) {
  const Tensor& av = value(a);
  require(start + count <= av.cols, "slice_cols out of range");
  Tensor c(av.rows, count);
  for (std::size_t r = 0; r < av.rows; ++r) {
    for (std::size_t j = 0; j < count; ++j) c(r, j) = av(r, start + j);
  }
  return push(std::move(c), needs(a), [a, start](Graph& g, const Node& self) {
    Tensor& ga = g.grad_ref(a);
    for (std::size_t r = 0; r < self.grad.rows; ++r) {
      for (std::size_t j = 0; j < self.grad.cols; ++j) ga(r, start + j) += self.grad(r, j);
    }
  });
}

Var Graph::transpose(Var a) {
  Tensor t = gadgetforge::transpose(value(a));
  return push(std::move(t), needs(a), [a](Graph& g, const Node& self) {
    Tensor& ga = g.grad_ref(a);
    for (std::size_t r = 0; r < ga.rows; ++r) {
      for (std::size_t c = 0; c < ga.cols; ++c) ga(r, c) += self.grad(c, r);
    }
  });
}

Var Graph::softmax_rows(Var a, const Tensor* additive_mask) {
  const Tensor& av = value(a);
  if (additive_mask) require(additive_mask->rows == 1 && additive_mask->cols == av.cols, "softmax mask shape");
  Tensor y(av.rows, av.cols);
  for (std::size_t r = 0; r < av.rows; ++r) {
    double mx = -HUGE_VAL;
    for (std::size_t c = 0; c < av.cols; ++c) {
      y(r, c) = av(r, c) + (additive_mask ? additive_mask->data[c] : 0.0);
      mx = std::max(mx, y(r, c));
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < av.cols; ++c) {
      y(r, c) = std::exp(y(r, c) - mx);
      sum += y(r, c);
    }
    for (std::size_t c = 0; c < av.cols; ++c) y(r, c) /= sum;
  }
  return push(std::move(y), needs(a), [a](Graph& g, const Node& self) {
    const Tensor& Y = self.value();
    Tensor& ga = g.grad_ref(a);
    for (std::size_t r = 0; r < Y.rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < Y.cols; ++c) dot += self.grad(r, c) * Y(r, c);
      for (std::size_t c = 0; c < Y.cols; ++c) ga(r, c) += Y(r, c) * (self.grad(r, c) - dot);
    }
  });
}

Var Graph::layer_norm(Var a, Var gamma, Var beta, double eps) {
  const Tensor& x = value(a);
  const Tensor& gm = value(gamma);
  const Tensor& bt = value(beta);
  require(gm.rows == 1 && gm.cols == x.cols && bt.same_shape(gm), "layer_norm parameter shape");
  const std::size_t n = x.cols;
  Tensor xhat(x.rows, n);
  std::vector<double> inv_std(x.rows);
  Tensor y(x.rows, n);
  for (std::size_t r = 0; r < x.rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < n; ++c) mean += x(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (x(r, c) - mean) * (x(r, c) - mean);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      xhat(r, c) = (x(r, c) - mean) * inv_std[r];
      y(r, c) = xhat(r, c) * gm.data[c] + bt.data[c];
    }
  }
  return push(std::move(y), needs(a) || needs(gamma) || needs(beta),
              [a, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& g, const Node& self) {
                const Tensor& dy = self.grad;
                const Tensor& gm = g.value(gamma);
                const std::size_t n = dy.cols;
                if (g.needs(gamma) || g.needs(beta)) {
                  for (std::size_t r = 0; r < dy.rows; ++r) {
                    for (std::size_t c = 0; c < n; ++c) {
                      if (g.needs(gamma)) g.grad_ref(gamma).data[c] += dy(r, c) * xhat(r, c);
                      if (g.needs(beta)) g.grad_ref(beta).data[c] += dy(r, c);
                    }
                  }
                }
                if (!g.needs(a)) return;
                Tensor& ga = g.grad_ref(a);
                for (std::size_t r = 0; r < dy.rows; ++r) {
                  double sum = 0.0, sum_x = 0.0;
                  for (std::size_t c = 0; c < n; ++c) {
                    const double d = dy(r, c) * gm.data[c];
                    sum += d;
                    sum_x += d * xhat(r, c);
                  }
                  const double scale = inv_std[r] / static_cast<double>(n);
                  for (std::size_t c = 0; c < n; ++c) {
                    const double d = dy(r, c) * gm.data[c];
                    ga(r, c) += scale * (static_cast<double>(n) * d - sum - xhat(r, c) * sum_x);
                  }
                }
              });
}

Var Graph::gather_rows(Var table, std::span<const std::uint32_t> ids) {
  const Tensor& t = value(table);
  Tensor out(ids.size(), t.cols);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    require(ids[r] < t.rows, "gather index out of range");
    std::copy(t.row_span(ids[r]).begin(), t.row_span(ids[r]).end(), out.row_span(r).begin());
  }
  std::vector<std::uint32_t> idx(ids.begin(), ids.end());
  return push(std::move(out), needs(table), [table, idx = std::move(idx)](Graph& g, const Node& self) {
    Tensor& gt = g.grad_ref(table);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto dst = gt.row_span(idx[r]);
      auto src = self.grad.row_span(r);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
  });
}

Var Graph::cross_entropy(Var logits, std::size_t label) {
  const Tensor& z = value(logits);
  require(z.rows == 1, "cross_entropy takes a single row");
  if (label >= z.cols) throw Error(Errc::LabelOutOfRange, "label exceeds class count", label);
  const double mx = *std::max_element(z.data.begin(), z.data.end());
  double sum = 0.0;
  for (double v : z.data) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  Tensor loss(1, 1, lse - z.data[label]);
  return push(std::move(loss), needs(logits), [logits, label, lse](Graph& g, const Node& self) {
    const Tensor& Z = g.value(logits);
    Tensor& gz = g.grad_ref(logits);
    const double d = self.grad.data[0];
    for (std::size_t c = 0; c < Z.cols; ++c) {
      gz.data[c] += d * (std::exp(Z.data[c] - lse) - (c == label ? 1.0 : 0.0));
    }
  });
}

}  // namespace gadgetforge
