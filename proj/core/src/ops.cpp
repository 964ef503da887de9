#include "pssr/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pssr::ad {

namespace {

std::shared_ptr<TensorNode> make_node(std::vector<int> shape,
                                      std::vector<std::shared_ptr<TensorNode>> parents) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value.assign(static_cast<size_t>(shape_size(n->shape)), 0.0);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->needs_grad) n->needs_grad = true;
  return n;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int pad) {
  if (input.rank() != 4)
    throw std::invalid_argument("conv2d: input must be [N,Cin,H,W], got " + shape_str(input.shape()));
  if (weight.rank() != 4)
    throw std::invalid_argument("conv2d: weight must be [Cout,Cin,k,k], got " + shape_str(weight.shape()));
  if (bias.rank() != 1)
    throw std::invalid_argument("conv2d: bias must be [Cout], got " + shape_str(bias.shape()));

  const int n_batch = input.dim(0), ci = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int co = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != ci)
    throw std::invalid_argument("conv2d: weight in-channels " + std::to_string(weight.dim(1)) +
                                " != input channels " + std::to_string(ci));
  if (weight.dim(3) != k)
    throw std::invalid_argument("conv2d: kernel must be square, got " + shape_str(weight.shape()));
  if (k % 2 == 0) throw std::invalid_argument("conv2d: kernel size must be odd, got " + std::to_string(k));
  if (bias.dim(0) != co)
    throw std::invalid_argument("conv2d: bias length " + std::to_string(bias.dim(0)) +
                                " != out channels " + std::to_string(co));
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be positive");
  if (pad < 0) throw std::invalid_argument("conv2d: pad must be non-negative");
  if (h + 2 * pad < k || w + 2 * pad < k)
    throw std::invalid_argument("conv2d: padded input " + std::to_string(h + 2 * pad) + "x" +
                                std::to_string(w + 2 * pad) + " smaller than kernel " + std::to_string(k));

  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (w + 2 * pad - k) / stride + 1;

  auto node = make_node({n_batch, co, ho, wo}, {input.node(), weight.node(), bias.node()});

  const double* in = input.values().data();
  const double* wt = weight.values().data();
  const double* bs = bias.values().data();
  double* out = node->value.data();

  auto in_at = [&](int n, int c) { return in + (static_cast<int64_t>(n) * ci + c) * h * w; };
  auto out_at = [&](int n, int c) { return out + (static_cast<int64_t>(n) * co + c) * ho * wo; };

  for (int n = 0; n < n_batch; ++n) {
    for (int c = 0; c < co; ++c) {
      double* oplane = out_at(n, c);
      for (int i = 0; i < ho * wo; ++i) oplane[i] = bs[c];
      for (int cc = 0; cc < ci; ++cc) {
        const double* iplane = in_at(n, cc);
        for (int kh = 0; kh < k; ++kh) {
          for (int kw = 0; kw < k; ++kw) {
            const double wv = wt[((static_cast<int64_t>(c) * ci + cc) * k + kh) * k + kw];
            const int off = kw - pad;
            for (int oy = 0; oy < ho; ++oy) {
              const int iy = oy * stride + kh - pad;
              if (iy < 0 || iy >= h) continue;
              const double* irow = iplane + static_cast<int64_t>(iy) * w;
              double* orow = oplane + static_cast<int64_t>(oy) * wo;
              int x0 = 0, x1 = wo;
              while (x0 < x1 && x0 * stride + off < 0) ++x0;
              while (x1 > x0 && (x1 - 1) * stride + off >= w) --x1;
              if (stride == 1) {
                for (int ox = x0; ox < x1; ++ox) orow[ox] += wv * irow[ox + off];
              } else {
                for (int ox = x0; ox < x1; ++ox) orow[ox] += wv * irow[ox * stride + off];
              }
            }
          }
        }
      }
    }
  }

  if (node->needs_grad) {
    auto in_node = input.node();
    auto w_node = weight.node();
    auto b_node = bias.node();
    node->backward_fn = [=](TensorNode& self) {
      const double* g = self.grad.data();
      const double* inv = in_node->value.data();
      const double* wtv = w_node->value.data();
      const bool need_in = in_node->needs_grad;
      const bool need_w = w_node->needs_grad;
      const bool need_b = b_node->needs_grad;
      double* gin = need_in ? in_node->grad.data() : nullptr;
      double* gwt = need_w ? w_node->grad.data() : nullptr;
      double* gbs = need_b ? b_node->grad.data() : nullptr;

      for (int n = 0; n < n_batch; ++n) {
        for (int c = 0; c < co; ++c) {
          const double* gplane = g + (static_cast<int64_t>(n) * co + c) * ho * wo;
          if (need_b) {
            double acc = 0.0;
            for (int i = 0; i < ho * wo; ++i) acc += gplane[i];
            gbs[c] += acc;
          }
          if (!need_in && !need_w) continue;
          for (int cc = 0; cc < ci; ++cc) {
            const double* iplane = inv + (static_cast<int64_t>(n) * ci + cc) * h * w;
            double* giplane = need_in ? gin + (static_cast<int64_t>(n) * ci + cc) * h * w : nullptr;
            for (int kh = 0; kh < k; ++kh) {
              for (int kw = 0; kw < k; ++kw) {
                const int64_t widx = ((static_cast<int64_t>(c) * ci + cc) * k + kh) * k + kw;
                const double wv = wtv[widx];
                const int off = kw - pad;
                double wacc = 0.0;
                for (int oy = 0; oy < ho; ++oy) {
                  const int iy = oy * stride + kh - pad;
                  if (iy < 0 || iy >= h) continue;
                  const double* grow = gplane + static_cast<int64_t>(oy) * wo;
                  int x0 = 0, x1 = wo;
                  while (x0 < x1 && x0 * stride + off < 0) ++x0;
                  while (x1 > x0 && (x1 - 1) * stride + off >= w) --x1;
                  if (need_w) {
                    const double* irow = iplane + static_cast<int64_t>(iy) * w;
                    if (stride == 1) {
                      for (int ox = x0; ox < x1; ++ox) wacc += irow[ox + off] * grow[ox];
                    } else {
                      for (int ox = x0; ox < x1; ++ox) wacc += irow[ox * stride + off] * grow[ox];
                    }
                  }
                  if (need_in) {
                    double* girow = giplane + static_cast<int64_t>(iy) * w;
                    if (stride == 1) {
                      for (int ox = x0; ox < x1; ++ox) girow[ox + off] += wv * grow[ox];
                    } else {
                      for (int ox = x0; ox < x1; ++ox) girow[ox * stride + off] += wv * grow[ox];
                    }
                  }
                }
                if (need_w) gwt[widx] += wacc;
              }
            }
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input.rank() != 2)
    throw std::invalid_argument("dense: input must be [N,D], got " + shape_str(input.shape()));
  if (weight.rank() != 2)
    throw std::invalid_argument("dense: weight must be [D,M], got " + shape_str(weight.shape()));
  const int n_batch = input.dim(0), d = input.dim(1), m = weight.dim(1);
  if (weight.dim(0) != d)
    throw std::invalid_argument("dense: inner dimensions disagree, input D=" + std::to_string(d) +
                                " weight D=" + std::to_string(weight.dim(0)));
  if (bias.rank() != 1 || bias.dim(0) != m)
    throw std::invalid_argument("dense: bias must be [M=" + std::to_string(m) + "], got " +
                                shape_str(bias.shape()));

  auto node = make_node({n_batch, m}, {input.node(), weight.node(), bias.node()});
  const double* in = input.values().data();
  const double* wt = weight.values().data();
  const double* bs = bias.values().data();
  double* out = node->value.data();

  for (int n = 0; n < n_batch; ++n) {
    double* orow = out + static_cast<int64_t>(n) * m;
    for (int j = 0; j < m; ++j) orow[j] = bs[j];
    const double* irow = in + static_cast<int64_t>(n) * d;
    for (int i = 0; i < d; ++i) {
      const double x = irow[i];
      const double* wrow = wt + static_cast<int64_t>(i) * m;
      for (int j = 0; j < m; ++j) orow[j] += x * wrow[j];
    }
  }

  if (node->needs_grad) {
    auto in_node = input.node();
    auto w_node = weight.node();
    auto b_node = bias.node();
    node->backward_fn = [=](TensorNode& self) {
      const double* g = self.grad.data();
      const double* inv = in_node->value.data();
      const double* wtv = w_node->value.data();
      for (int n = 0; n < n_batch; ++n) {
        const double* grow = g + static_cast<int64_t>(n) * m;
        const double* irow = inv + static_cast<int64_t>(n) * d;
        if (b_node->needs_grad) {
          double* gb = b_node->grad.data();
          for (int j = 0; j < m; ++j) gb[j] += grow[j];
        }
        if (in_node->needs_grad) {
          double* girow = in_node->grad.data() + static_cast<int64_t>(n) * d;
          for (int i = 0; i < d; ++i) {
            const double* wrow = wtv + static_cast<int64_t>(i) * m;
            double acc = 0.0;
            for (int j = 0; j < m; ++j) acc += wrow[j] * grow[j];
            girow[i] += acc;
          }
        }
        if (w_node->needs_grad) {
          double* gw = w_node->grad.data();
          for (int i = 0; i < d; ++i) {
            const double x = irow[i];
            double* gwrow = gw + static_cast<int64_t>(i) * m;
            for (int j = 0; j < m; ++j) gwrow[j] += x * grow[j];
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor leaky_relu(const Tensor& input, double slope) {
  if (!(slope > 0.0 && slope < 1.0))
    throw std::invalid_argument("leaky_relu: slope must lie in (0,1), got " + std::to_string(slope));
  auto node = make_node(input.shape(), {input.node()});
  const auto& x = input.values();
  auto& y = node->value;
  for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];

  if (node->needs_grad) {
    auto in_node = input.node();
    node->backward_fn = [in_node, slope](TensorNode& self) {
      if (!in_node->needs_grad) return;
      const double* g = self.grad.data();
      const double* x = in_node->value.data();
      double* gi = in_node->grad.data();
      const size_t n = self.value.size();
      for (size_t i = 0; i < n; ++i) gi[i] += (x[i] > 0.0 ? 1.0 : slope) * g[i];
    };
  }
  return Tensor(std::move(node));
}

namespace {

Tensor elementwise_linear(const char* op, const Tensor& a, const Tensor& b, double sb) {
  check_same_shape(op, a, b);
  auto node = make_node(a.shape(), {a.node(), b.node()});
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& y = node->value;
  for (size_t i = 0; i < av.size(); ++i) y[i] = av[i] + sb * bv[i];

  if (node->needs_grad) {
    auto an = a.node();
    auto bn = b.node();
    node->backward_fn = [an, bn, sb](TensorNode& self) {
      const double* g = self.grad.data();
      const size_t n = self.value.size();
      if (an->needs_grad) {
        double* ga = an->grad.data();
        for (size_t i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (bn->needs_grad) {
        double* gb = bn->grad.data();
        for (size_t i = 0; i < n; ++i) gb[i] += sb * g[i];
      }
    };
  }
  return Tensor(std::move(node));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise_linear("add", a, b, 1.0); }
Tensor subtract(const Tensor& a, const Tensor& b) { return elementwise_linear("subtract", a, b, -1.0); }

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no operands");
  const int r = parts[0].rank();
  if (r != 2 && r != 4)
    throw std::invalid_argument("concat_channels: expects 2-D or 4-D tensors, got rank " +
                                std::to_string(r));
  int total_c = 0;
  for (const auto& p : parts) {
    if (p.rank() != r)
      throw std::invalid_argument("concat_channels: mixed ranks " + std::to_string(r) + " and " +
                                  std::to_string(p.rank()));
    for (int d = 0; d < r; ++d) {
      if (d == 1) continue;
      if (p.dim(d) != parts[0].dim(d))
        throw std::invalid_argument("concat_channels: dimension " + std::to_string(d) +
                                    " mismatch: " + shape_str(parts[0].shape()) + " vs " +
                                    shape_str(p.shape()));
    }
    total_c += p.dim(1);
  }

  std::vector<int> oshape = parts[0].shape();
  oshape[1] = total_c;
  std::vector<std::shared_ptr<TensorNode>> parents;
  parents.reserve(parts.size());
  for (const auto& p : parts) parents.push_back(p.node());
  auto node = make_node(oshape, std::move(parents));

  const int n_batch = oshape[0];
  const int64_t plane = (r == 4) ? static_cast<int64_t>(oshape[2]) * oshape[3] : 1;
  double* out = node->value.data();
  for (int n = 0; n < n_batch; ++n) {
    int64_t coff = 0;
    for (const auto& p : parts) {
      const int pc = p.dim(1);
      const double* src = p.values().data() + static_cast<int64_t>(n) * pc * plane;
      double* dst = out + (static_cast<int64_t>(n) * total_c + coff) * plane;
      std::copy(src, src + static_cast<int64_t>(pc) * plane, dst);
      coff += pc;
    }
  }

  if (node->needs_grad) {
    auto parents_copy = node->parents;
    node->backward_fn = [parents_copy, n_batch, total_c, plane](TensorNode& self) {
      const double* g = self.grad.data();
      for (int n = 0; n < n_batch; ++n) {
        int64_t coff = 0;
        for (const auto& p : parents_copy) {
          const int pc = p->shape[1];
          if (p->needs_grad) {
            double* dst = p->grad.data() + static_cast<int64_t>(n) * pc * plane;
            const double* src = g + (static_cast<int64_t>(n) * total_c + coff) * plane;
            const int64_t cnt = static_cast<int64_t>(pc) * plane;
            for (int64_t i = 0; i < cnt; ++i) dst[i] += src[i];
          }
          coff += pc;
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor slice_channels(const Tensor& input, int c0, int c1) {
  const int r = input.rank();
  if (r != 2 && r != 4)
    throw std::invalid_argument("slice_channels: expects 2-D or 4-D tensors, got rank " +
                                std::to_string(r));
  const int c = input.dim(1);
  if (!(0 <= c0 && c0 < c1 && c1 <= c))
    throw std::invalid_argument("slice_channels: range [" + std::to_string(c0) + "," +
                                std::to_string(c1) + ") out of bounds for " + std::to_string(c) +
                                " channels");
  std::vector<int> oshape = input.shape();
  oshape[1] = c1 - c0;
  auto node = make_node(oshape, {input.node()});

  const int n_batch = oshape[0];
  const int nc = c1 - c0;
  const int64_t plane = (r == 4) ? static_cast<int64_t>(oshape[2]) * oshape[3] : 1;
  const double* in = input.values().data();
  double* out = node->value.data();
  for (int n = 0; n < n_batch; ++n) {
    const double* src = in + (static_cast<int64_t>(n) * c + c0) * plane;
    double* dst = out + static_cast<int64_t>(n) * nc * plane;
    std::copy(src, src + static_cast<int64_t>(nc) * plane, dst);
  }

  if (node->needs_grad) {
    auto in_node = input.node();
    node->backward_fn = [in_node, n_batch, c, c0, nc, plane](TensorNode& self) {
      if (!in_node->needs_grad) return;
      const double* g = self.grad.data();
      for (int n = 0; n < n_batch; ++n) {
        double* dst = in_node->grad.data() + (static_cast<int64_t>(n) * c + c0) * plane;
        const double* src = g + static_cast<int64_t>(n) * nc * plane;
        const int64_t cnt = static_cast<int64_t>(nc) * plane;
        for (int64_t i = 0; i < cnt; ++i) dst[i] += src[i];
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor global_avg_pool(const Tensor& input) {
  if (input.rank() != 4)
    throw std::invalid_argument("global_avg_pool: input must be [N,C,H,W], got " +
                                shape_str(input.shape()));
  const int n_batch = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int64_t plane = static_cast<int64_t>(h) * w;
  auto node = make_node({n_batch, c}, {input.node()});
  const double* in = input.values().data();
  double* out = node->value.data();
  for (int n = 0; n < n_batch; ++n) {
    for (int cc = 0; cc < c; ++cc) {
      const double* p = in + (static_cast<int64_t>(n) * c + cc) * plane;
      double acc = 0.0;
      for (int64_t i = 0; i < plane; ++i) acc += p[i];
      out[static_cast<int64_t>(n) * c + cc] = acc / static_cast<double>(plane);
    }
  }

  if (node->needs_grad) {
    auto in_node = input.node();
    node->backward_fn = [in_node, n_batch, c, plane](TensorNode& self) {
      if (!in_node->needs_grad) return;
      const double* g = self.grad.data();
      const double inv = 1.0 / static_cast<double>(plane);
      for (int n = 0; n < n_batch; ++n) {
        for (int cc = 0; cc < c; ++cc) {
          const double gv = g[static_cast<int64_t>(n) * c + cc] * inv;
          double* p = in_node->grad.data() + (static_cast<int64_t>(n) * c + cc) * plane;
          for (int64_t i = 0; i < plane; ++i) p[i] += gv;
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor avg_pool2x2(const Tensor& input) {
  if (input.rank() != 4)
    throw std::invalid_argument("avg_pool2x2: input must be [N,C,H,W], got " +
                                shape_str(input.shape()));
  const int n_batch = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h % 2 != 0 || w % 2 != 0)
    throw std::invalid_argument("avg_pool2x2: spatial dims must be even, got " +
                                std::to_string(h) + "x" + std::to_string(w));
  const int ho = h / 2, wo = w / 2;
  auto node = make_node({n_batch, c, ho, wo}, {input.node()});
  const double* in = input.values().data();
  double* out = node->value.data();
  for (int n = 0; n < n_batch; ++n) {
    for (int cc = 0; cc < c; ++cc) {
      const double* ip = in + (static_cast<int64_t>(n) * c + cc) * h * w;
      double* op = out + (static_cast<int64_t>(n) * c + cc) * ho * wo;
      for (int oy = 0; oy < ho; ++oy) {
        const double* r0 = ip + static_cast<int64_t>(2 * oy) * w;
        const double* r1 = r0 + w;
        for (int ox = 0; ox < wo; ++ox)
          op[static_cast<int64_t>(oy) * wo + ox] =
              0.25 * (r0[2 * ox] + r0[2 * ox + 1] + r1[2 * ox] + r1[2 * ox + 1]);
      }
    }
  }

  if (node->needs_grad) {
    auto in_node = input.node();
    node->backward_fn = [in_node, n_batch, c, h, w, ho, wo](TensorNode& self) {
      if (!in_node->needs_grad) return;
      const double* g = self.grad.data();
      for (int n = 0; n < n_batch; ++n) {
        for (int cc = 0; cc < c; ++cc) {
          double* ip = in_node->grad.data() + (static_cast<int64_t>(n) * c + cc) * h * w;
          const double* gp = g + (static_cast<int64_t>(n) * c + cc) * ho * wo;
          for (int oy = 0; oy < ho; ++oy) {
            double* r0 = ip + static_cast<int64_t>(2 * oy) * w;
            double* r1 = r0 + w;
            for (int ox = 0; ox < wo; ++ox) {
              const double gv = 0.25 * gp[static_cast<int64_t>(oy) * wo + ox];
              r0[2 * ox] += gv;
              r0[2 * ox + 1] += gv;
              r1[2 * ox] += gv;
              r1[2 * ox + 1] += gv;
            }
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor mse(const Tensor& a, const Tensor& b) {
  check_same_shape("mse", a, b);
  auto node = make_node({1}, {a.node(), b.node()});
  const auto& av = a.values();
  const auto& bv = b.values();
  const size_t n = av.size();
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = av[i] - bv[i];
    acc += d * d;
  }
  node->value[0] = acc / static_cast<double>(n);

  if (node->needs_grad) {
    auto an = a.node();
    auto bn = b.node();
    node->backward_fn = [an, bn, n](TensorNode& self) {
      const double g = self.grad[0] * 2.0 / static_cast<double>(n);
      const double* av = an->value.data();
      const double* bv = bn->value.data();
      if (an->needs_grad) {
        double* ga = an->grad.data();
        for (size_t i = 0; i < n; ++i) ga[i] += g * (av[i] - bv[i]);
      }
      if (bn->needs_grad) {
        double* gb = bn->grad.data();
        for (size_t i = 0; i < n; ++i) gb[i] -= g * (av[i] - bv[i]);
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor scalar_combine(const std::vector<Tensor>& terms, const std::vector<double>& weights) {
  if (terms.empty()) throw std::invalid_argument("scalar_combine: no terms");
  if (terms.size() != weights.size())
    throw std::invalid_argument("scalar_combine: " + std::to_string(terms.size()) + " terms vs " +
                                std::to_string(weights.size()) + " weights");
  std::vector<std::shared_ptr<TensorNode>> parents;
  for (const auto& t : terms) {
    if (t.size() != 1)
      throw std::invalid_argument("scalar_combine: non-scalar term " + shape_str(t.shape()));
    parents.push_back(t.node());
  }
  auto node = make_node({1}, std::move(parents));
  double acc = 0.0;
  for (size_t i = 0; i < terms.size(); ++i) acc += weights[i] * terms[i].values()[0];
  node->value[0] = acc;

  if (node->needs_grad) {
    auto parents_copy = node->parents;
    auto w = weights;
    node->backward_fn = [parents_copy, w](TensorNode& self) {
      const double g = self.grad[0];
      for (size_t i = 0; i < parents_copy.size(); ++i)
        if (parents_copy[i]->needs_grad) parents_copy[i]->grad[0] += w[i] * g;
    };
  }
  return Tensor(std::move(node));
}

}  // namespace pssr::ad
