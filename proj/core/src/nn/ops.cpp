#include "lvr/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "lvr/error.hpp"

namespace lvr::nn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

void require_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.size() != rank) {
    throw ShapeError(std::string(what) + " expects rank " + std::to_string(rank) + ", got " +
                     shape_string(s));
  }
}

void require_same(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                     shape_string(b));
  }
}

template <typename T>
void require_finite(std::span<const T> v, const char* what) {
  for (T x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string(what) + ": non-finite input");
  }
}

struct ConvGeometry {
  std::size_t c, h, w, kh, kw, stride, ph, pw, ho, wo;
  std::size_t rows() const { return c * kh * kw; }
  std::size_t cols() const { return ho * wo; }
};

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  const auto H = static_cast<std::ptrdiff_t>(g.h);
  const auto W = static_cast<std::ptrdiff_t>(g.w);
  for (std::size_t c = 0; c < g.c; ++c) {
    const T* plane = x + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        T* out = col + ((c * g.kh + ki) * g.kw + kj) * g.cols();
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                          static_cast<std::ptrdiff_t>(g.ph);
          T* row = out + oy * g.wo;
          if (iy < 0 || iy >= H) {
            std::fill(row, row + g.wo, T{0});
            continue;
          }
          const T* src = plane + iy * W;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                            static_cast<std::ptrdiff_t>(g.pw);
            row[ox] = (ix < 0 || ix >= W) ? T{0} : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* dx) {
  const auto H = static_cast<std::ptrdiff_t>(g.h);
  const auto W = static_cast<std::ptrdiff_t>(g.w);
  for (std::size_t c = 0; c < g.c; ++c) {
    T* plane = dx + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const T* in = col + ((c * g.kh + ki) * g.kw + kj) * g.cols();
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                          static_cast<std::ptrdiff_t>(g.ph);
          if (iy < 0 || iy >= H) continue;
          T* dst = plane + iy * W;
          const T* row = in + oy * g.wo;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                            static_cast<std::ptrdiff_t>(g.pw);
            if (ix >= 0 && ix < W) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

template <typename T>
Var<T> unary(Tape<T>& tape, const Var<T>& x, auto fwd, auto deriv_from_out) {
  Tensor<T> out(x->value.shape());
  auto in = x->value.data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return tape.emit(std::move(out), {x}, [deriv_from_out](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * deriv_from_out(self.value[i], p.value[i]);
    }
  });
}

}  // namespace

template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& input, const Var<T>& kernel, const Var<T>& bias,
              std::size_t stride) {
  const auto& xs = input->value.shape();
  const auto& ks = kernel->value.shape();
  require_rank(xs, 4, "conv2d input");
  require_rank(ks, 4, "conv2d kernel");
  if (xs[1] != ks[1]) {
    throw ShapeError("conv2d: input " + shape_string(xs) + " has " + std::to_string(xs[1]) +
                     " channels but kernel " + shape_string(ks) + " expects " +
                     std::to_string(ks[1]));
  }
  if (ks[2] % 2 == 0 || ks[3] % 2 == 0) {
    throw ShapeError("conv2d: kernel extents must be odd, got " + shape_string(ks));
  }
  if (bias->value.shape() != Shape{ks[0]}) {
    throw ShapeError("conv2d: bias " + shape_string(bias->value.shape()) + " does not match kernel " +
                     shape_string(ks));
  }
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");

  const std::size_t n = xs[0];
  const std::size_t f = ks[0];
  ConvGeometry g{xs[1], xs[2], xs[3], ks[2], ks[3], stride, ks[2] / 2, ks[3] / 2,
                 strided_extent(xs[2], stride), strided_extent(xs[3], stride)};

  Tensor<T> out({n, f, g.ho, g.wo});
  std::vector<T> col(g.rows() * g.cols());
  ConstMatMap<T> wmat(kernel->value.data().data(), f, g.rows());
  for (std::size_t b = 0; b < n; ++b) {
    im2col(input->value.data().data() + b * g.c * g.h * g.w, g, col.data());
    ConstMatMap<T> cmat(col.data(), g.rows(), g.cols());
    MatMap<T> omat(out.data().data() + b * f * g.cols(), f, g.cols());
    omat.noalias() = wmat * cmat;
    for (std::size_t k = 0; k < f; ++k) omat.row(k).array() += bias->value[k];
  }

  return tape.emit(std::move(out), {input, kernel, bias}, [g, n, f](Node<T>& self) {
    auto& x = *self.parents[0];
    auto& w = *self.parents[1];
    auto& bb = *self.parents[2];
    std::vector<T> col(g.rows() * g.cols());
    ConstMatMap<T> wmat(w.value.data().data(), f, g.rows());
    for (std::size_t b = 0; b < n; ++b) {
      ConstMatMap<T> gout(self.grad.data().data() + b * f * g.cols(), f, g.cols());
      if (bb.requires_grad) {
        auto& db = bb.ensure_grad();
        for (std::size_t k = 0; k < f; ++k) db[k] += gout.row(k).sum();
      }
      if (w.requires_grad) {
        im2col(x.value.data().data() + b * g.c * g.h * g.w, g, col.data());
        ConstMatMap<T> cmat(col.data(), g.rows(), g.cols());
        MatMap<T> dw(w.ensure_grad().data().data(), f, g.rows());
        dw.noalias() += gout * cmat.transpose();
      }
      if (x.requires_grad) {
        MatMap<T> dcol(col.data(), g.rows(), g.cols());
        dcol.noalias() = wmat.transpose() * gout;
        col2im_add(col.data(), g, x.ensure_grad().data().data() + b * g.c * g.h * g.w);
      }
    }
  });
}

template <typename T>
Var<T> dense(Tape<T>& tape, const Var<T>& input, const Var<T>& weight, const Var<T>& bias) {
  const auto& xs = input->value.shape();
  const auto& ws = weight->value.shape();
  require_rank(xs, 2, "dense input");
  require_rank(ws, 2, "dense weight");
  if (xs[1] != ws[1]) {
    throw ShapeError("dense: input " + shape_string(xs) + " does not match weight " +
                     shape_string(ws));
  }
  if (bias->value.shape() != Shape{ws[0]}) {
    throw ShapeError("dense: bias " + shape_string(bias->value.shape()) + " does not match weight " +
                     shape_string(ws));
  }
  const std::size_t n = xs[0], din = xs[1], dout = ws[0];
  Tensor<T> out({n, dout});
  ConstMatMap<T> x(input->value.data().data(), n, din);
  ConstMatMap<T> w(weight->value.data().data(), dout, din);
  MatMap<T> y(out.data().data(), n, dout);
  // Row by row so a sample's output does not depend on the batch it sits in.
  for (std::size_t i = 0; i < n; ++i) y.row(i).noalias() = x.row(i) * w.transpose();
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bvec(bias->value.data().data(), dout);
  y.rowwise() += bvec;

  return tape.emit(std::move(out), {input, weight, bias}, [n, din, dout](Node<T>& self) {
    auto& xi = *self.parents[0];
    auto& wi = *self.parents[1];
    auto& bi = *self.parents[2];
    ConstMatMap<T> gy(self.grad.data().data(), n, dout);
    if (xi.requires_grad) {
      MatMap<T> dx(xi.ensure_grad().data().data(), n, din);
      ConstMatMap<T> w(wi.value.data().data(), dout, din);
      dx.noalias() += gy * w;
    }
    if (wi.requires_grad) {
      MatMap<T> dw(wi.ensure_grad().data().data(), dout, din);
      ConstMatMap<T> x(xi.value.data().data(), n, din);
      dw.noalias() += gy.transpose() * x;
    }
    if (bi.requires_grad) {
      Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(bi.ensure_grad().data().data(), dout);
      db += gy.colwise().sum();
    }
  });
}

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x) {
  return unary(
      tape, x, [](T v) { return v > T{0} ? v : T{0}; },
      [](T, T in) { return in > T{0} ? T{1} : T{0}; });
}

template <typename T>
Var<T> sigmoid(Tape<T>& tape, const Var<T>& x) {
  return unary(
      tape, x,
      [](T v) {
        if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
        const T e = std::exp(v);
        return e / (T{1} + e);
      },
      [](T out, T) { return out * (T{1} - out); });
}

template <typename T>
Var<T> downsample2(Tape<T>& tape, const Var<T>& x) {
  const auto& s = x->value.shape();
  require_rank(s, 4, "downsample2");
  const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
  const std::size_t ho = strided_extent(h, 2), wo = strided_extent(w, 2);
  Tensor<T> out({s[0], s[1], ho, wo});
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        out[(p * ho + i) * wo + j] = x->value[(p * h + 2 * i) * w + 2 * j];
      }
    }
  }
  return tape.emit(std::move(out), {x}, [planes, h, w, ho, wo](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t p = 0; p < planes; ++p) {
      for (std::size_t i = 0; i < ho; ++i) {
        for (std::size_t j = 0; j < wo; ++j) {
          g[(p * h + 2 * i) * w + 2 * j] += self.grad[(p * ho + i) * wo + j];
        }
      }
    }
  });
}

template <typename T>
Var<T> upsample2(Tape<T>& tape, const Var<T>& x, std::size_t out_h, std::size_t out_w) {
  const auto& s = x->value.shape();
  require_rank(s, 4, "upsample2");
  const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
  if ((out_h != 2 * h && out_h + 1 != 2 * h) || (out_w != 2 * w && out_w + 1 != 2 * w)) {
    throw ShapeError("upsample2: cannot map " + shape_string(s) + " to " + std::to_string(out_h) +
                     "x" + std::to_string(out_w));
  }
  Tensor<T> out({s[0], s[1], out_h, out_w});
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < out_h; ++i) {
      for (std::size_t j = 0; j < out_w; ++j) {
        out[(p * out_h + i) * out_w + j] = x->value[(p * h + i / 2) * w + j / 2];
      }
    }
  }
  return tape.emit(std::move(out), {x}, [planes, h, w, out_h, out_w](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t p = 0; p < planes; ++p) {
      for (std::size_t i = 0; i < out_h; ++i) {
        for (std::size_t j = 0; j < out_w; ++j) {
          g[(p * h + i / 2) * w + j / 2] += self.grad[(p * out_h + i) * out_w + j];
        }
      }
    }
  });
}

template <typename T>
Var<T> reshape(Tape<T>& tape, const Var<T>& x, Shape shape) {
  return tape.emit(x->value.reshaped(std::move(shape)), {x}, [](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  return add_scaled(tape, a, b, T{1});
}

template <typename T>
Var<T> add_scaled(Tape<T>& tape, const Var<T>& a, const Var<T>& b, T scale) {
  require_same(a->value.shape(), b->value.shape(), "add");
  Tensor<T> out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + scale * b->value[i];
  return tape.emit(std::move(out), {a, b}, [scale](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * self.grad[i];
    }
  });
}

template <typename T>
Var<T> mul(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  require_same(a->value.shape(), b->value.shape(), "mul");
  Tensor<T> out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * b->value[i];
  return tape.emit(std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x) {
  T total{0};
  for (T v : x->value.data()) total += v;
  return tape.emit(Tensor<T>({1}, std::vector<T>{total}), {x}, [](Node<T>& self) {
    auto& g = self.parents[0]->ensure_grad();
    const T up = self.grad[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += up;
  });
}

template <typename T>
Var<T> bce_loss(Tape<T>& tape, const Var<T>& prediction, const Tensor<T>& target) {
  require_same(prediction->value.shape(), target.shape(), "bce_loss");
  require_finite<T>(prediction->value.data(), "bce_loss prediction");
  require_finite<T>(target.data(), "bce_loss target");
  const T lo = static_cast<T>(kBceClip);
  const T hi = T{1} - lo;
  const std::size_t count = target.size();
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double p = std::clamp(prediction->value[i], lo, hi);
    const double t = target[i];
    total -= t * std::log(p) + (1.0 - t) * std::log1p(-p);
  }
  Tensor<T> out({1}, std::vector<T>{static_cast<T>(total / static_cast<double>(count))});
  return tape.emit(std::move(out), {prediction}, [target, lo, hi, count](Node<T>& self) {
    auto& p = *self.parents[0];
    auto& g = p.ensure_grad();
    const T scale = self.grad[0] / static_cast<T>(count);
    for (std::size_t i = 0; i < count; ++i) {
      const T v = p.value[i];
      if (v < lo || v > hi) continue;
      const T t = target[i];
      g[i] += scale * ((v - t) / (v * (T{1} - v)));
    }
  });
}

template <typename T>
Var<T> kl_unit_normal(Tape<T>& tape, const Var<T>& mu, const Var<T>& log_var) {
  require_same(mu->value.shape(), log_var->value.shape(), "kl_unit_normal");
  require_rank(mu->value.shape(), 2, "kl_unit_normal");
  require_finite<T>(log_var->value.data(), "kl_unit_normal log_var");
  require_finite<T>(mu->value.data(), "kl_unit_normal mu");
  const std::size_t batch = mu->value.dim(0);
  double total = 0.0;
  for (std::size_t i = 0; i < mu->value.size(); ++i) {
    const double m = mu->value[i];
    const double lv = log_var->value[i];
    total += 0.5 * (m * m + std::exp(lv) - 1.0 - lv);
  }
  Tensor<T> out({1}, std::vector<T>{static_cast<T>(total / static_cast<double>(batch))});
  return tape.emit(std::move(out), {mu, log_var}, [batch](Node<T>& self) {
    auto& m = *self.parents[0];
    auto& lv = *self.parents[1];
    const T scale = self.grad[0] / static_cast<T>(batch);
    if (m.requires_grad) {
      auto& g = m.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * m.value[i];
    }
    if (lv.requires_grad) {
      auto& g = lv.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += scale * T{0.5} * (std::exp(lv.value[i]) - T{1});
      }
    }
  });
}

template <typename T>
Var<T> reparameterize(Tape<T>& tape, const Var<T>& mu, const Var<T>& log_var,
                      const Tensor<T>& eps) {
  require_same(mu->value.shape(), log_var->value.shape(), "reparameterize");
  require_same(mu->value.shape(), eps.shape(), "reparameterize eps");
  Tensor<T> out(mu->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mu->value[i] + std::exp(T{0.5} * log_var->value[i]) * eps[i];
  }
  return tape.emit(std::move(out), {mu, log_var}, [eps](Node<T>& self) {
    auto& m = *self.parents[0];
    auto& lv = *self.parents[1];
    if (m.requires_grad) {
      auto& g = m.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (lv.requires_grad) {
      auto& g = lv.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += self.grad[i] * T{0.5} * std::exp(T{0.5} * lv.value[i]) * eps[i];
      }
    }
  });
}

template <typename T>
Var<T> pair_distance(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  require_same(a->value.shape(), b->value.shape(), "pair_distance");
  require_rank(a->value.shape(), 2, "pair_distance");
  const std::size_t n = a->value.dim(0), d = a->value.dim(1);
  Tensor<T> out({n});
  for (std::size_t r = 0; r < n; ++r) {
    T acc{0};
    for (std::size_t k = 0; k < d; ++k) {
      const T diff = a->value[r * d + k] - b->value[r * d + k];
      acc += diff * diff;
    }
    out[r] = std::sqrt(acc);
  }
  return tape.emit(std::move(out), {a, b}, [n, d](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    for (std::size_t r = 0; r < n; ++r) {
      const T dist = self.value[r];
      if (dist <= T{0}) continue;
      const T scale = self.grad[r] / dist;
      for (std::size_t k = 0; k < d; ++k) {
        const T diff = pa.value[r * d + k] - pb.value[r * d + k];
        if (pa.requires_grad) pa.ensure_grad()[r * d + k] += scale * diff;
        if (pb.requires_grad) pb.ensure_grad()[r * d + k] -= scale * diff;
      }
    }
  });
}

template <typename T>
Var<T> contrastive_loss(Tape<T>& tape, const Var<T>& distances, std::span<const std::uint8_t> labels,
                        T margin) {
  require_rank(distances->value.shape(), 1, "contrastive_loss");
  const std::size_t n = distances->value.size();
  if (labels.size() != n) {
    throw ShapeError("contrastive_loss: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " distances");
  }
  if (!(margin > T{0})) throw ConfigError("contrastive_loss: margin must be positive");
  std::vector<std::uint8_t> y(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += contrastive_loss(static_cast<double>(distances->value[i]), y[i],
                              static_cast<double>(margin));
  }
  Tensor<T> out({1}, std::vector<T>{static_cast<T>(total / static_cast<double>(n))});
  return tape.emit(std::move(out), {distances}, [y, margin, n](Node<T>& self) {
    auto& p = *self.parents[0];
    auto& g = p.ensure_grad();
    const T scale = self.grad[0] / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const T d = p.value[i];
      if (y[i] == 0) {
        g[i] += scale * d;
      } else if (d < margin) {
        g[i] -= scale * (margin - d);
      }
    }
  });
}

double contrastive_loss(double distance, int label, double margin) {
  if (label != 0 && label != 1) {
    throw ConfigError("contrastive_loss: label must be 0 or 1, got " + std::to_string(label));
  }
  if (!(margin > 0.0)) throw ConfigError("contrastive_loss: margin must be positive");
  if (!(distance >= 0.0)) throw NumericError("contrastive_loss: distance must be >= 0");
  if (label == 0) return 0.5 * distance * distance;
  const double hinge = std::max(0.0, margin - distance);
  return 0.5 * hinge * hinge;
}

#define LVR_INSTANTIATE_OPS(T)                                                                   \
  template Var<T> conv2d(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&, std::size_t);   \
  template Var<T> dense(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&);                \
  template Var<T> relu(Tape<T>&, const Var<T>&);                                               \
  template Var<T> sigmoid(Tape<T>&, const Var<T>&);                                            \
  template Var<T> downsample2(Tape<T>&, const Var<T>&);                                        \
  template Var<T> upsample2(Tape<T>&, const Var<T>&, std::size_t, std::size_t);                \
  template Var<T> reshape(Tape<T>&, const Var<T>&, Shape);                                     \
  template Var<T> add(Tape<T>&, const Var<T>&, const Var<T>&);                                 \
  template Var<T> mul(Tape<T>&, const Var<T>&, const Var<T>&);                                 \
  template Var<T> add_scaled(Tape<T>&, const Var<T>&, const Var<T>&, T);                       \
  template Var<T> sum(Tape<T>&, const Var<T>&);                                                \
  template Var<T> bce_loss(Tape<T>&, const Var<T>&, const Tensor<T>&);                         \
  template Var<T> kl_unit_normal(Tape<T>&, const Var<T>&, const Var<T>&);                      \
  template Var<T> reparameterize(Tape<T>&, const Var<T>&, const Var<T>&, const Tensor<T>&);    \
  template Var<T> pair_distance(Tape<T>&, const Var<T>&, const Var<T>&);                       \
  template Var<T> contrastive_loss(Tape<T>&, const Var<T>&, std::span<const std::uint8_t>, T);

LVR_INSTANTIATE_OPS(float)
LVR_INSTANTIATE_OPS(double)

#undef LVR_INSTANTIATE_OPS

}  // namespace lvr::nn
