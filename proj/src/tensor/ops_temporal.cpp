#include <limits>

#include "dstsa/tensor/ops.hpp"
#include "dstsa/tensor/parallel.hpp"
#include "kernels.hpp"

namespace dstsa::ops {

std::size_t temporal_output_length(std::size_t frames, std::size_t kernel,
                                   const TemporalConvSpec& spec) {
  if (kernel == 0 || spec.stride == 0 || spec.dilation == 0) {
    throw ConfigError("temporal window needs positive kernel, stride and dilation");
  }
  const long span = static_cast<long>(spec.dilation * (kernel - 1) + 1);
  const long padded = static_cast<long>(frames + 2 * spec.padding);
  if (padded < span) {
    throw ConfigError("temporal output length < 1: T=" + std::to_string(frames) +
                      ", kernel=" + std::to_string(kernel) +
                      ", dilation=" + std::to_string(spec.dilation) +
                      ", padding=" + std::to_string(spec.padding));
  }
  return static_cast<std::size_t>((padded - span) / static_cast<long>(spec.stride)) + 1;
}

namespace {

void require_ntv(const Shape& s, const char* op) {
  if (s.size() != 4) {
    throw DimensionError(std::string(op) + " expects (N, C, T, V), got " + to_string(s));
  }
}

// Column matrix (Cin * k) x (T_out * V) of the zero-padded dilated taps.
template <typename T>
void gather_columns(const T* x, std::size_t cin, std::size_t frames, std::size_t joints,
                    std::size_t k, std::size_t t_out, const TemporalConvSpec& spec, T* col) {
  const std::size_t width = t_out * joints;
  for (std::size_t c = 0; c < cin; ++c) {
    for (std::size_t j = 0; j < k; ++j) {
      T* row = col + (c * k + j) * width;
      for (std::size_t t = 0; t < t_out; ++t) {
        const long src = static_cast<long>(t * spec.stride + j * spec.dilation) -
                         static_cast<long>(spec.padding);
        T* dst = row + t * joints;
        if (src < 0 || src >= static_cast<long>(frames)) {
          std::fill_n(dst, joints, T{0});
        } else {
          std::copy_n(x + (c * frames + static_cast<std::size_t>(src)) * joints, joints, dst);
        }
      }
    }
  }
}

template <typename T>
void scatter_columns(const T* col, std::size_t cin, std::size_t frames, std::size_t joints,
                     std::size_t k, std::size_t t_out, const TemporalConvSpec& spec, T* gx) {
  const std::size_t width = t_out * joints;
  for (std::size_t c = 0; c < cin; ++c) {
    for (std::size_t j = 0; j < k; ++j) {
      const T* row = col + (c * k + j) * width;
      for (std::size_t t = 0; t < t_out; ++t) {
        const long src = static_cast<long>(t * spec.stride + j * spec.dilation) -
                         static_cast<long>(spec.padding);
        if (src < 0 || src >= static_cast<long>(frames)) continue;
        T* dst = gx + (c * frames + static_cast<std::size_t>(src)) * joints;
        const T* from = row + t * joints;
        for (std::size_t v = 0; v < joints; ++v) dst[v] += from[v];
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv_temporal(const Var<T>& x, const Var<T>& weight, const std::optional<Var<T>>& bias,
                     const TemporalConvSpec& spec) {
  require_ntv(x.shape(), "conv_temporal");
  const Shape& ws = weight.shape();
  const std::size_t batch = x.dim(0);
  const std::size_t cin = x.dim(1);
  const std::size_t frames = x.dim(2);
  const std::size_t joints = x.dim(3);
  if (ws.size() != 3 || ws[1] != cin) {
    throw DimensionError("conv_temporal: weight " + to_string(ws) + " for input " +
                         to_string(x.shape()));
  }
  const std::size_t cout = ws[0];
  const std::size_t k = ws[2];
  if (bias && bias->shape() != Shape{cout}) {
    throw DimensionError("conv_temporal: bias " + to_string(bias->shape()));
  }
  const std::size_t t_out = temporal_output_length(frames, k, spec);
  const std::size_t width = t_out * joints;
  // A 1-wide, unit-stride, unpadded kernel reads the input directly.
  const bool direct = k == 1 && spec.stride == 1 && spec.padding == 0;

  Tensor<T> out(Shape{batch, cout, t_out, joints});
  const T* px = x.value().data();
  const T* pw = weight.value().data();
  const T* pbias = bias ? bias->value().data() : nullptr;
  T* po = out.data();
  parallel_for(batch, [&](std::size_t i) {
    const T* xi = px + i * cin * frames * joints;
    AlignedVector<T> col;
    const T* cols = xi;
    if (!direct) {
      col.resize(cin * k * width);
      gather_columns(xi, cin, frames, joints, k, t_out, spec, col.data());
      cols = col.data();
    }
    detail::ConstMatMap<T> W(pw, cout, cin * k);
    detail::ConstMatMap<T> C(cols, cin * k, width);
    detail::MatMap<T> Y(po + i * cout * width, cout, width);
    Y.noalias() = W * C;
    if (pbias) {
      for (std::size_t c = 0; c < cout; ++c) Y.row(c).array() += pbias[c];
    }
  });

  std::vector<Var<T>> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  return Var<T>::make(
      std::move(out), std::move(inputs),
      [=](Node<T>& self) {
        const auto& nx = self.parents[0];
        const auto& nw = self.parents[1];
        const T* g = self.grad.data();
        const T* xv = nx->value.data();
        const T* w = nw->value.data();
        Tensor<T>* gx = grad_target(nx);
        Tensor<T>* gw = grad_target(nw);
        if (gx) {
          T* dst = gx->data();
          parallel_for(batch, [&](std::size_t i) {
            detail::ConstMatMap<T> W(w, cout, cin * k);
            detail::ConstMatMap<T> G(g + i * cout * width, cout, width);
            T* gxi = dst + i * cin * frames * joints;
            if (direct) {
              detail::MatMap<T> D(gxi, cin, width);
              D.noalias() += W.transpose() * G;
            } else {
              AlignedVector<T> gcol(cin * k * width);
              detail::MatMap<T> D(gcol.data(), cin * k, width);
              D.noalias() = W.transpose() * G;
              scatter_columns(gcol.data(), cin, frames, joints, k, t_out, spec, gxi);
            }
          });
        }
        if (gw) {
          detail::MatMap<T> D(gw->data(), cout, cin * k);
          AlignedVector<T> col(direct ? 0 : cin * k * width);
          for (std::size_t i = 0; i < batch; ++i) {
            const T* xi = xv + i * cin * frames * joints;
            const T* cols = xi;
            if (!direct) {
              gather_columns(xi, cin, frames, joints, k, t_out, spec, col.data());
              cols = col.data();
            }
            detail::ConstMatMap<T> C(cols, cin * k, width);
            detail::ConstMatMap<T> G(g + i * cout * width, cout, width);
            D.noalias() += G * C.transpose();
          }
        }
        if (self.parents.size() > 2) {
          if (Tensor<T>* gb = grad_target(self.parents[2])) {
            T* dst = gb->data();
            for (std::size_t i = 0; i < batch; ++i) {
              detail::ConstMatMap<T> G(g + i * cout * width, cout, width);
              for (std::size_t c = 0; c < cout; ++c) dst[c] += G.row(c).sum();
            }
          }
        }
      },
      "conv_temporal");
}

template <typename T>
Var<T> max_pool_temporal(const Var<T>& x, std::size_t window, std::size_t stride,
                         std::size_t padding) {
  require_ntv(x.shape(), "max_pool_temporal");
  const std::size_t batch = x.dim(0);
  const std::size_t channels = x.dim(1);
  const std::size_t frames = x.dim(2);
  const std::size_t joints = x.dim(3);
  const std::size_t t_out =
      temporal_output_length(frames, window, TemporalConvSpec{stride, 1, padding});
  Tensor<T> out(Shape{batch, channels, t_out, joints});
  // Winning source frame per output element, needed by the backward pass.
  auto winners = std::make_shared<std::vector<std::uint32_t>>(out.numel());
  const T* px = x.value().data();
  T* po = out.data();
  for (std::size_t plane = 0; plane < batch * channels; ++plane) {
    const T* src = px + plane * frames * joints;
    for (std::size_t t = 0; t < t_out; ++t) {
      for (std::size_t v = 0; v < joints; ++v) {
        T best = -std::numeric_limits<T>::infinity();
        std::uint32_t arg = 0;
        bool found = false;
        for (std::size_t j = 0; j < window; ++j) {
          const long f = static_cast<long>(t * stride + j) - static_cast<long>(padding);
          if (f < 0 || f >= static_cast<long>(frames)) continue;
          const T val = src[static_cast<std::size_t>(f) * joints + v];
          if (!found || val > best) {
            best = val;
            arg = static_cast<std::uint32_t>(f);
            found = true;
          }
        }
        const std::size_t o = (plane * t_out + t) * joints + v;
        po[o] = best;
        (*winners)[o] = arg;
      }
    }
  }
  return Var<T>::make(
      std::move(out), {x},
      [winners, frames, joints, t_out](Node<T>& self) {
        Tensor<T>* g = grad_target(self.parents[0]);
        if (!g) return;
        const T* gy = self.grad.data();
        T* gx = g->data();
        const std::size_t planes = self.value.numel() / (t_out * joints);
        for (std::size_t plane = 0; plane < planes; ++plane) {
          for (std::size_t t = 0; t < t_out; ++t) {
            for (std::size_t v = 0; v < joints; ++v) {
              const std::size_t o = (plane * t_out + t) * joints + v;
              gx[(plane * frames + (*winners)[o]) * joints + v] += gy[o];
            }
          }
        }
      },
      "max_pool_temporal");
}

template <typename T>
Var<T> subsample_frames(const Var<T>& x, std::size_t stride) {
  require_ntv(x.shape(), "subsample_frames");
  if (stride == 0) throw ConfigError("subsample_frames: stride must be positive");
  const std::size_t planes = x.dim(0) * x.dim(1);
  const std::size_t frames = x.dim(2);
  const std::size_t joints = x.dim(3);
  const std::size_t t_out = (frames + stride - 1) / stride;
  Tensor<T> out(Shape{x.dim(0), x.dim(1), t_out, joints});
  const T* px = x.value().data();
  T* po = out.data();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t t = 0; t < t_out; ++t) {
      std::copy_n(px + (p * frames + t * stride) * joints, joints, po + (p * t_out + t) * joints);
    }
  }
  return Var<T>::make(
      std::move(out), {x},
      [planes, frames, joints, t_out, stride](Node<T>& self) {
        Tensor<T>* g = grad_target(self.parents[0]);
        if (!g) return;
        const T* gy = self.grad.data();
        T* gx = g->data();
        for (std::size_t p = 0; p < planes; ++p) {
          for (std::size_t t = 0; t < t_out; ++t) {
            T* dst = gx + (p * frames + t * stride) * joints;
            const T* src = gy + (p * t_out + t) * joints;
            for (std::size_t v = 0; v < joints; ++v) dst[v] += src[v];
          }
        }
      },
      "subsample_frames");
}

#define DSTSA_INSTANTIATE(T)                                                                  \
  template Var<T> conv_temporal(const Var<T>&, const Var<T>&, const std::optional<Var<T>>&,   \
                                const TemporalConvSpec&);                                     \
  template Var<T> max_pool_temporal(const Var<T>&, std::size_t, std::size_t, std::size_t);    \
  template Var<T> subsample_frames(const Var<T>&, std::size_t);

DSTSA_INSTANTIATE(float)
DSTSA_INSTANTIATE(double)
#undef DSTSA_INSTANTIATE

}  // namespace dstsa::ops
