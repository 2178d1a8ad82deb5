#include "votenet/autodiff/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace votenet::ad {

namespace {

std::vector<double>& grad_of(TensorImpl& t) {
  if (t.grad.empty()) t.grad.assign(t.data.size(), 0.0);
  return t.grad;
}

// Offsets into an operand of shape `in` for every flat index of `out`, where
// `in` broadcasts to `out` under trailing alignment.
std::vector<std::size_t> broadcast_offsets(const Shape& in, const Shape& out) {
  const std::size_t n = element_count(out);
  std::vector<std::size_t> offsets(n);
  const std::size_t rank = out.size();
  const std::size_t lead = rank - in.size();
  const auto in_strides = strides_of(in);
  std::vector<std::size_t> stride(rank, 0);
  for (std::size_t d = 0; d < in.size(); ++d) {
    stride[lead + d] = in[d] == 1 ? 0 : in_strides[d];
  }
  std::vector<std::size_t> idx(rank, 0);
  std::size_t off = 0;
  for (std::size_t i = 0; i < n; ++i) {
    offsets[i] = off;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      off += stride[d];
      if (idx[d] < out[d]) break;
      off -= stride[d] * idx[d];
      idx[d] = 0;
    }
  }
  return offsets;
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_axis(const Tensor& a, std::size_t axis, const char* op) {
  if (axis >= a.rank()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " invalid for shape " + shape_string(a.shape()));
  }
}

struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t d = 0; d < axis; ++d) r.outer *= s[d];
  r.n = s[axis];
  for (std::size_t d = axis + 1; d < s.size(); ++d) r.inner *= s[d];
  return r;
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
    const std::size_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("shapes " + shape_string(a) + " and " + shape_string(b) +
                       " are not broadcastable");
    }
    out[rank - 1 - i] = std::max(da, db);
  }
  return out;
}

bool Graph::should_record(std::initializer_list<const Tensor*> inputs) const {
  if (!record_) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

Tensor Graph::make_output(Shape shape, std::vector<double> data,
                          std::initializer_list<const Tensor*> inputs) const {
  return Tensor(std::move(shape), std::move(data), should_record(inputs));
}

void Graph::push(const Tensor& output, std::initializer_list<const Tensor*> inputs,
                 std::function<void()> adjoint) {
  Record r;
  r.output = output.impl();
  for (const Tensor* t : inputs) r.inputs.push_back(t->impl());
  r.adjoint = std::move(adjoint);
  tape_.push_back(std::move(r));
}

void Graph::check_live() const {
  if (consumed_) throw GraphError("graph already consumed by backward(); build a new graph");
}

Tensor Graph::elementwise(ElementwiseKind kind, const Tensor& a, const Tensor* b) {
  check_live();
  const bool binary = kind == ElementwiseKind::add || kind == ElementwiseKind::sub ||
                      kind == ElementwiseKind::mul || kind == ElementwiseKind::div;
  if (binary != (b != nullptr)) {
    throw std::invalid_argument(binary ? "binary elementwise op needs two operands"
                                       : "unary elementwise op takes one operand");
  }

  if (!binary) {
    const auto x = a.data();
    std::vector<double> y(x.size());
    switch (kind) {
      case ElementwiseKind::log:
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (!(x[i] > 0.0)) {
            throw DomainError("log of non-positive value " + std::to_string(x[i]) +
                              " at flat index " + std::to_string(i));
          }
          y[i] = std::log(x[i]);
        }
        break;
      case ElementwiseKind::exp:
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::exp(x[i]);
        break;
      case ElementwiseKind::sigmoid:
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = stable_sigmoid(x[i]);
        break;
      case ElementwiseKind::relu:
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
        break;
      case ElementwiseKind::square:
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * x[i];
        break;
      default:
        break;
    }
    Tensor out = make_output(a.shape(), std::move(y), {&a});
    if (out.requires_grad()) {
      push(out, {&a}, [kind, ai = a.impl(), oi = out.impl()] {
        if (!ai->requires_grad) return;
        auto& ga = grad_of(*ai);
        const auto& g = oi->grad;
        const auto& x = ai->data;
        const auto& y = oi->data;
        const std::size_t n = x.size();
        switch (kind) {
          case ElementwiseKind::log:
            for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] / x[i];
            break;
          case ElementwiseKind::exp:
            for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * y[i];
            break;
          case ElementwiseKind::sigmoid:
            for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
            break;
          case ElementwiseKind::relu:
            for (std::size_t i = 0; i < n; ++i) ga[i] += x[i] > 0.0 ? g[i] : 0.0;
            break;
          case ElementwiseKind::square:
            for (std::size_t i = 0; i < n; ++i) ga[i] += 2.0 * x[i] * g[i];
            break;
          default:
            break;
        }
      });
    }
    return out;
  }

  const Shape shape = broadcast_shape(a.shape(), b->shape());
  const std::size_t n = element_count(shape);
  const bool same = a.shape() == shape && b->shape() == shape;
  std::vector<std::size_t> oa, ob;
  if (!same) {
    oa = broadcast_offsets(a.shape(), shape);
    ob = broadcast_offsets(b->shape(), shape);
  }
  const auto x = a.data();
  const auto z = b->data();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x[same ? i : oa[i]];
    const double v = z[same ? i : ob[i]];
    switch (kind) {
      case ElementwiseKind::add: y[i] = u + v; break;
      case ElementwiseKind::sub: y[i] = u - v; break;
      case ElementwiseKind::mul: y[i] = u * v; break;
      case ElementwiseKind::div: y[i] = u / v; break;
      default: break;
    }
  }
  Tensor out = make_output(shape, std::move(y), {&a, b});
  if (out.requires_grad()) {
    push(out, {&a, b},
         [kind, same, n, oa = std::move(oa), ob = std::move(ob), ai = a.impl(), bi = b->impl(),
          oi = out.impl()] {
           const auto& g = oi->grad;
           const auto& x = ai->data;
           const auto& z = bi->data;
           if (ai->requires_grad) {
             auto& ga = grad_of(*ai);
             for (std::size_t i = 0; i < n; ++i) {
               const std::size_t ia = same ? i : oa[i];
               const std::size_t ib = same ? i : ob[i];
               switch (kind) {
                 case ElementwiseKind::add:
                 case ElementwiseKind::sub: ga[ia] += g[i]; break;
                 case ElementwiseKind::mul: ga[ia] += g[i] * z[ib]; break;
                 case ElementwiseKind::div: ga[ia] += g[i] / z[ib]; break;
                 default: break;
               }
             }
           }
           if (bi->requires_grad) {
             auto& gb = grad_of(*bi);
             for (std::size_t i = 0; i < n; ++i) {
               const std::size_t ia = same ? i : oa[i];
               const std::size_t ib = same ? i : ob[i];
               switch (kind) {
                 case ElementwiseKind::add: gb[ib] += g[i]; break;
                 case ElementwiseKind::sub: gb[ib] -= g[i]; break;
                 case ElementwiseKind::mul: gb[ib] += g[i] * x[ia]; break;
                 case ElementwiseKind::div: gb[ib] -= g[i] * x[ia] / (z[ib] * z[ib]); break;
                 default: break;
               }
             }
           }
         });
  }
  return out;
}

Tensor Graph::affine(const Tensor& a, double factor, double offset) {
  check_live();
  const auto x = a.data();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * factor + offset;
  Tensor out = make_output(a.shape(), std::move(y), {&a});
  if (out.requires_grad()) {
    push(out, {&a}, [factor, ai = a.impl(), oi = out.impl()] {
      auto& ga = grad_of(*ai);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * oi->grad[i];
    });
  }
  return out;
}

Tensor Graph::clamp(const Tensor& a, double lo, double hi) {
  check_live();
  const auto x = a.data();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::clamp(x[i], lo, hi);
  Tensor out = make_output(a.shape(), std::move(y), {&a});
  if (out.requires_grad()) {
    push(out, {&a}, [lo, hi, ai = a.impl(), oi = out.impl()] {
      auto& ga = grad_of(*ai);
      for (std::size_t i = 0; i < ga.size(); ++i) {
        const double v = ai->data[i];
        if (v >= lo && v <= hi) ga[i] += oi->grad[i];
      }
    });
  }
  return out;
}

Tensor Graph::map(const Tensor& a, const std::function<double(double)>& fn,
                  const std::function<double(double)>& derivative) {
  check_live();
  const auto x = a.data();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fn(x[i]);
  Tensor out = make_output(a.shape(), std::move(y), {&a});
  if (out.requires_grad()) {
    push(out, {&a}, [derivative, ai = a.impl(), oi = out.impl()] {
      auto& ga = grad_of(*ai);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += oi->grad[i] * derivative(ai->data[i]);
    });
  }
  return out;
}

Tensor Graph::softmax(const Tensor& a, std::size_t axis) {
  check_live();
  check_axis(a, axis, "softmax");
  const AxisSplit s = split_at(a.shape(), axis);
  const auto x = a.data();
  std::vector<double> y(x.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < s.n; ++k) peak = std::max(peak, x[base + k * s.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < s.n; ++k) {
        const double e = std::exp(x[base + k * s.inner] - peak);
        y[base + k * s.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < s.n; ++k) y[base + k * s.inner] /= total;
    }
  }
  Tensor out = make_output(a.shape(), std::move(y), {&a});
  if (out.requires_grad()) {
    push(out, {&a}, [s, ai = a.impl(), oi = out.impl()] {
      auto& ga = grad_of(*ai);
      const auto& g = oi->grad;
      const auto& y = oi->data;
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t in = 0; in < s.inner; ++in) {
          const std::size_t base = o * s.n * s.inner + in;
          double dot = 0.0;
          for (std::size_t k = 0; k < s.n; ++k) {
            const std::size_t i = base + k * s.inner;
            dot += g[i] * y[i];
          }
          for (std::size_t k = 0; k < s.n; ++k) {
            const std::size_t i = base + k * s.inner;
            ga[i] += y[i] * (g[i] - dot);
          }
        }
      }
    });
  }
  return out;
}

Tensor Graph::log_softmax(const Tensor& a, std::size_t axis) {
  check_live();
  check_axis(a, axis, "log_softmax");
  const AxisSplit s = split_at(a.shape(), axis);
  const auto x = a.data();
  std::vector<double> y(x.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < s.n; ++k) peak = std::max(peak, x[base + k * s.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < s.n; ++k) total += std::exp(x[base + k * s.inner] - peak);
      const double lse = peak + std::log(total);
      for (std::size_t k = 0; k < s.n; ++k) y[base + k * s.inner] = x[base + k * s.inner] - lse;
    }
  }
  Tensor out = make_output(a.shape(), std::move(y), {&a});
  if (out.requires_grad()) {
    push(out, {&a}, [s, ai = a.impl(), oi = out.impl()] {
      auto& ga = grad_of(*ai);
      const auto& g = oi->grad;
      const auto& y = oi->data;
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t in = 0; in < s.inner; ++in) {
          const std::size_t base = o * s.n * s.inner + in;
          double gsum = 0.0;
          for (std::size_t k = 0; k < s.n; ++k) gsum += g[base + k * s.inner];
          for (std::size_t k = 0; k < s.n; ++k) {
            const std::size_t i = base + k * s.inner;
            ga[i] += g[i] - std::exp(y[i]) * gsum;
          }
        }
      }
    });
  }
  return out;
}

Tensor Graph::reduce(const Tensor& a, ReduceKind kind, std::vector<std::size_t> axes) {
  check_live();
  std::vector<bool> reduced(a.rank(), false);
  for (std::size_t ax : axes) {
    check_axis(a, ax, "reduce");
    if (reduced[ax]) throw ShapeError("reduce: duplicate axis " + std::to_string(ax));
    reduced[ax] = true;
  }
  Shape out_shape;
  std::size_t count = 1;
  for (std::size_t d = 0; d < a.rank(); ++d) {
    if (reduced[d]) {
      count *= a.shape()[d];
    } else {
      out_shape.push_back(a.shape()[d]);
    }
  }
  // Map each input element to its output slot.
  const Shape& in_shape = a.shape();
  const std::size_t rank = in_shape.size();
  std::vector<std::size_t> out_stride(rank, 0);
  {
    const auto os = strides_of(out_shape);
    std::size_t j = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      if (!reduced[d]) out_stride[d] = os[j++];
    }
  }
  const std::size_t n = a.size();
  std::vector<std::size_t> slot(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t off = 0;
  for (std::size_t i = 0; i < n; ++i) {
    slot[i] = off;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      off += out_stride[d];
      if (idx[d] < in_shape[d]) break;
      off -= out_stride[d] * idx[d];
      idx[d] = 0;
    }
  }
  const double factor = kind == ReduceKind::mean ? 1.0 / static_cast<double>(count) : 1.0;
  std::vector<double> y(element_count(out_shape), 0.0);
  const auto x = a.data();
  for (std::size_t i = 0; i < n; ++i) y[slot[i]] += x[i];
  if (factor != 1.0) {
    for (double& v : y) v *= factor;
  }
  Tensor out = make_output(std::move(out_shape), std::move(y), {&a});
  if (out.requires_grad()) {
    push(out, {&a}, [factor, slot = std::move(slot), ai = a.impl(), oi = out.impl()] {
      auto& ga = grad_of(*ai);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * oi->grad[slot[i]];
    });
  }
  return out;
}

Tensor Graph::sum(const Tensor& a) {
  std::vector<std::size_t> axes(a.rank());
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
  return reduce(a, ReduceKind::sum, std::move(axes));
}

Tensor Graph::mean(const Tensor& a) {
  std::vector<std::size_t> axes(a.rank());
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
  return reduce(a, ReduceKind::mean, std::move(axes));
}

Tensor Graph::conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride,
                     Padding padding) {
  check_live();
  if (input.rank() != 3) throw ShapeError("conv2d: input must be H x W x Cin, got " + shape_string(input.shape()));
  if (kernel.rank() != 4) throw ShapeError("conv2d: kernel must be kh x kw x Cin x Cout, got " + shape_string(kernel.shape()));
  if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
  const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const std::size_t kh = kernel.dim(0), kw = kernel.dim(1), cout = kernel.dim(3);
  if (kernel.dim(2) != cin) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.dim(2)) +
                     " input channels, input has " + std::to_string(cin));
  }
  std::size_t ho = 0, wo = 0, pad_top = 0, pad_left = 0;
  if (padding == Padding::same) {
    ho = (h + stride - 1) / stride;
    wo = (w + stride - 1) / stride;
    const std::size_t need_h = (ho - 1) * stride + kh;
    const std::size_t need_w = (wo - 1) * stride + kw;
    pad_top = need_h > h ? (need_h - h) / 2 : 0;
    pad_left = need_w > w ? (need_w - w) / 2 : 0;
  } else {
    if (kh > h || kw > w) {
      throw ShapeError("conv2d: kernel " + shape_string(kernel.shape()) +
                       " larger than padded input " + shape_string(input.shape()));
    }
    ho = (h - kh) / stride + 1;
    wo = (w - kw) / stride + 1;
  }

  struct Geometry {
    std::size_t h, w, cin, kh, kw, cout, ho, wo, stride, pad_top, pad_left;
  };
  const Geometry geo{h, w, cin, kh, kw, cout, ho, wo, stride, pad_top, pad_left};

  // Visits every (output pixel, kernel tap) pair whose input pixel lies
  // inside the image.
  auto for_each_tap = [](const Geometry& gm, auto&& fn) {
    for (std::size_t oy = 0; oy < gm.ho; ++oy) {
      for (std::size_t ky = 0; ky < gm.kh; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * gm.stride + ky) -
                                  static_cast<std::ptrdiff_t>(gm.pad_top);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(gm.h)) continue;
        for (std::size_t ox = 0; ox < gm.wo; ++ox) {
          for (std::size_t kx = 0; kx < gm.kw; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * gm.stride + kx) -
                                      static_cast<std::ptrdiff_t>(gm.pad_left);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(gm.w)) continue;
            fn((oy * gm.wo + ox) * gm.cout,
               (static_cast<std::size_t>(iy) * gm.w + static_cast<std::size_t>(ix)) * gm.cin,
               (ky * gm.kw + kx) * gm.cin * gm.cout);
          }
        }
      }
    }
  };

  std::vector<double> y(ho * wo * cout, 0.0);
  {
    const double* x = input.data().data();
    const double* k = kernel.data().data();
    double* out = y.data();
    for_each_tap(geo, [&](std::size_t o, std::size_t i, std::size_t kb) {
      for (std::size_t ci = 0; ci < geo.cin; ++ci) {
        const double v = x[i + ci];
        const double* krow = k + kb + ci * geo.cout;
        double* orow = out + o;
        for (std::size_t co = 0; co < geo.cout; ++co) orow[co] += v * krow[co];
      }
    });
  }
  Tensor out = make_output({ho, wo, cout}, std::move(y), {&input, &kernel});
  if (out.requires_grad()) {
    push(out, {&input, &kernel},
         [geo, for_each_tap, ii = input.impl(), ki = kernel.impl(), oi = out.impl()] {
           const double* g = oi->grad.data();
           const double* x = ii->data.data();
           const double* k = ki->data.data();
           double* gi = ii->requires_grad ? grad_of(*ii).data() : nullptr;
           double* gk = ki->requires_grad ? grad_of(*ki).data() : nullptr;
           for_each_tap(geo, [&](std::size_t o, std::size_t i, std::size_t kb) {
             const double* grow = g + o;
             for (std::size_t ci = 0; ci < geo.cin; ++ci) {
               const double* krow = k + kb + ci * geo.cout;
               if (gi != nullptr) {
                 double acc = 0.0;
                 for (std::size_t co = 0; co < geo.cout; ++co) acc += grow[co] * krow[co];
                 gi[i + ci] += acc;
               }
               if (gk != nullptr) {
                 const double v = x[i + ci];
                 double* gkrow = gk + kb + ci * geo.cout;
                 for (std::size_t co = 0; co < geo.cout; ++co) gkrow[co] += v * grow[co];
               }
             }
           });
         });
  }
  return out;
}

Tensor Graph::resize_nearest(const Tensor& a, std::size_t factor, ResizeDirection direction) {
  check_live();
  if (a.rank() != 3) throw ShapeError("resize_nearest: expected H x W x C, got " + shape_string(a.shape()));
  if (factor == 0) throw std::invalid_argument("resize_nearest: factor must be positive");
  const std::size_t h = a.dim(0), w = a.dim(1), c = a.dim(2);
  std::size_t ho = 0, wo = 0;
  if (direction == ResizeDirection::up) {
    ho = h * factor;
    wo = w * factor;
  } else {
    if (h % factor != 0 || w % factor != 0) {
      throw ShapeError("resize_nearest: " + shape_string(a.shape()) +
                       " not divisible by factor " + std::to_string(factor));
    }
    ho = h / factor;
    wo = w / factor;
  }
  // Source offset for every output element.
  std::vector<std::size_t> src(ho * wo * c);
  for (std::size_t y = 0; y < ho; ++y) {
    const std::size_t sy = direction == ResizeDirection::up ? y / factor : y * factor;
    for (std::size_t x = 0; x < wo; ++x) {
      const std::size_t sx = direction == ResizeDirection::up ? x / factor : x * factor;
      for (std::size_t ch = 0; ch < c; ++ch) {
        src[(y * wo + x) * c + ch] = (sy * w + sx) * c + ch;
      }
    }
  }
  const auto xs = a.data();
  std::vector<double> out_data(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out_data[i] = xs[src[i]];
  Tensor out = make_output({ho, wo, c}, std::move(out_data), {&a});
  if (out.requires_grad()) {
    push(out, {&a}, [src = std::move(src), ai = a.impl(), oi = out.impl()] {
      auto& ga = grad_of(*ai);
      for (std::size_t i = 0; i < src.size(); ++i) ga[src[i]] += oi->grad[i];
    });
  }
  return out;
}

Tensor Graph::concat_last(const Tensor& a, const Tensor& b) {
  check_live();
  if (a.rank() == 0 || a.rank() != b.rank() ||
      !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin())) {
    throw ShapeError("concat_last: incompatible shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  const std::size_t ca = a.shape().back(), cb = b.shape().back();
  const std::size_t rows = a.size() / ca;
  Shape shape = a.shape();
  shape.back() = ca + cb;
  std::vector<double> y(rows * (ca + cb));
  const auto xa = a.data();
  const auto xb = b.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(xa.begin() + r * ca, ca, y.begin() + r * (ca + cb));
    std::copy_n(xb.begin() + r * cb, cb, y.begin() + r * (ca + cb) + ca);
  }
  Tensor out = make_output(std::move(shape), std::move(y), {&a, &b});
  if (out.requires_grad()) {
    push(out, {&a, &b}, [rows, ca, cb, ai = a.impl(), bi = b.impl(), oi = out.impl()] {
      const auto& g = oi->grad;
      if (ai->requires_grad) {
        auto& ga = grad_of(*ai);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < ca; ++j) ga[r * ca + j] += g[r * (ca + cb) + j];
      }
      if (bi->requires_grad) {
        auto& gb = grad_of(*bi);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < cb; ++j) gb[r * cb + j] += g[r * (ca + cb) + ca + j];
      }
    });
  }
  return out;
}

Tensor Graph::slice_last(const Tensor& a, std::size_t begin, std::size_t count) {
  check_live();
  if (a.rank() == 0 || count == 0 || begin + count > a.shape().back()) {
    throw ShapeError("slice_last: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") invalid for " + shape_string(a.shape()));
  }
  const std::size_t c = a.shape().back();
  const std::size_t rows = a.size() / c;
  Shape shape = a.shape();
  shape.back() = count;
  std::vector<double> y(rows * count);
  const auto x = a.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.begin() + r * c + begin, count, y.begin() + r * count);
  }
  Tensor out = make_output(std::move(shape), std::move(y), {&a});
  if (out.requires_grad()) {
    push(out, {&a}, [rows, c, begin, count, ai = a.impl(), oi = out.impl()] {
      auto& ga = grad_of(*ai);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < count; ++j) ga[r * c + begin + j] += oi->grad[r * count + j];
    });
  }
  return out;
}

Tensor Graph::reshape(const Tensor& a, Shape shape) {
  check_live();
  if (element_count(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(a.shape()) + " as " + shape_string(shape));
  }
  Tensor out = make_output(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()), {&a});
  if (out.requires_grad()) {
    push(out, {&a}, [ai = a.impl(), oi = out.impl()] {
      auto& ga = grad_of(*ai);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += oi->grad[i];
    });
  }
  return out;
}

Tensor Graph::matmul(const Tensor& a, const Tensor& b) {
  check_live();
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> y(m * n, 0.0);
  const auto x = a.data();
  const auto z = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double v = x[i * k + p];
      for (std::size_t j = 0; j < n; ++j) y[i * n + j] += v * z[p * n + j];
    }
  }
  Tensor out = make_output({m, n}, std::move(y), {&a, &b});
  if (out.requires_grad()) {
    push(out, {&a, &b}, [m, k, n, ai = a.impl(), bi = b.impl(), oi = out.impl()] {
      const auto& g = oi->grad;
      if (ai->requires_grad) {
        auto& ga = grad_of(*ai);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bi->data[p * n + j];
            ga[i * k + p] += acc;
          }
      }
      if (bi->requires_grad) {
        auto& gb = grad_of(*bi);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double v = ai->data[i * k + p];
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += v * g[i * n + j];
          }
      }
    });
  }
  return out;
}

Tensor Graph::transpose(const Tensor& a) {
  check_live();
  if (a.rank() != 2) throw ShapeError("transpose: expected rank 2, got " + shape_string(a.shape()));
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> y(m * n);
  const auto x = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[j * m + i] = x[i * n + j];
  Tensor out = make_output({n, m}, std::move(y), {&a});
  if (out.requires_grad()) {
    push(out, {&a}, [m, n, ai = a.impl(), oi = out.impl()] {
      auto& ga = grad_of(*ai);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += oi->grad[j * m + i];
    });
  }
  return out;
}

void Graph::backward(const Tensor& root, std::span<Tensor> params) {
  check_live();
  if (root.size() != 1) {
    throw ShapeError("backward: root must be a scalar, got shape " + shape_string(root.shape()));
  }
  auto producer = std::find_if(tape_.rbegin(), tape_.rend(),
                               [&](const Record& r) { return r.output.get() == root.id(); });
  if (producer == tape_.rend()) {
    throw GraphError("backward: root was not produced by this graph");
  }
  consumed_ = true;

  for (const Record& r : tape_) {
    r.output->grad.assign(r.output->data.size(), 0.0);
    for (const auto& in : r.inputs) {
      if (in->requires_grad) in->grad.assign(in->data.size(), 0.0);
    }
  }
  for (Tensor& p : params) {
    p.zero_grad();
  }

  std::unordered_set<const TensorImpl*> reachable{root.id()};
  producer->output->grad[0] = 1.0;
  for (auto it = producer; it != tape_.rend(); ++it) {
    if (reachable.count(it->output.get()) == 0) continue;
    it->adjoint();
    for (const auto& in : it->inputs) {
      if (in->requires_grad) reachable.insert(in.get());
    }
  }
}

}  // namespace votenet::ad
