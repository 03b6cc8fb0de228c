#include "dstsa/verify/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace dstsa::verify::oracle {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double hardswish(double z) { return z * std::clamp(z + 3.0, 0.0, 6.0) / 6.0; }

// theta over a row of pairwise differences; softmax needs the whole row.
void theta_row(std::vector<double>& row, nn::Theta kind) {
  if (kind == nn::Theta::Softmax) {
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& r : row) total += (r = std::exp(r - peak));
    for (double& r : row) r /= total;
    return;
  }
  for (double& r : row) r = theta(r, kind);
}

}  // namespace

double theta(double z, nn::Theta kind) {
  switch (kind) {
    case nn::Theta::Tanh: return std::tanh(z);
    case nn::Theta::Relu: return z > 0.0 ? z : 0.0;
    case nn::Theta::Sigmoid: return sigmoid(z);
    case nn::Theta::Softmax: return std::exp(z);  // unnormalized; see theta_row
  }
  return z;
}

Pooled tgp(const Tensor<double>& x) {
  const std::size_t n = x.dim(0), c = x.dim(1), t = x.dim(2), v = x.dim(3);
  Pooled p{Tensor<double>(Shape{n, t}), Tensor<double>(Shape{n, c, v})};
  for (std::size_t b = 0; b < n; ++b) {
    std::vector<double> score(t, 0.0);
    for (std::size_t f = 0; f < t; ++f) {
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t j = 0; j < v; ++j) score[f] += x.at({b, ch, f, j});
      score[f] /= static_cast<double>(c * v);
    }
    const double peak = *std::max_element(score.begin(), score.end());
    double total = 0.0;
    for (double s : score) total += std::exp(s - peak);
    for (std::size_t f = 0; f < t; ++f) p.weights.at({b, f}) = std::exp(score[f] - peak) / total;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t j = 0; j < v; ++j)
        for (std::size_t f = 0; f < t; ++f)
          p.out.at({b, ch, j}) += p.weights.at({b, f}) * x.at({b, ch, f, j});
  }
  return p;
}

Pooled grouped_cgp(const Tensor<double>& x, std::size_t groups, bool gated) {
  const std::size_t n = x.dim(0), c = x.dim(1), t = x.dim(2), v = x.dim(3);
  const std::size_t width = c / groups;
  Pooled p{Tensor<double>(Shape{n, c}), Tensor<double>(Shape{n, groups, t, v})};
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t k = 0; k < groups; ++k) {
      std::vector<double> score(width, 0.0);
      for (std::size_t q = 0; q < width; ++q) {
        for (std::size_t f = 0; f < t; ++f)
          for (std::size_t j = 0; j < v; ++j) score[q] += x.at({b, k * width + q, f, j});
        score[q] /= static_cast<double>(t * v);
      }
      const double peak = *std::max_element(score.begin(), score.end());
      double total = 0.0;
      for (double s : score) total += std::exp(s - peak);
      for (std::size_t q = 0; q < width; ++q) {
        const double w = gated ? std::exp(score[q] - peak) / total : 1.0 / static_cast<double>(width);
        p.weights.at({b, k * width + q}) = w;
        for (std::size_t f = 0; f < t; ++f)
          for (std::size_t j = 0; j < v; ++j)
            p.out.at({b, k, f, j}) += w * x.at({b, k * width + q, f, j});
      }
    }
  }
  return p;
}

Tensor<double> stca(const Tensor<double>& x, const nn::Stca<double>& p) {
  const std::size_t n = x.dim(0), c = x.dim(1), t = x.dim(2), v = x.dim(3);
  const Tensor<double>& w1 = p.reduce.weight.value();
  const Tensor<double>& b1 = p.reduce.bias->value();
  const Tensor<double>& wt = p.temporal_head.weight.value();
  const Tensor<double>& bt = p.temporal_head.bias->value();
  const Tensor<double>& wv = p.joint_head.weight.value();
  const Tensor<double>& bv = p.joint_head.bias->value();
  const std::size_t hidden = w1.dim(0);
  Tensor<double> out(x.shape());
  for (std::size_t b = 0; b < n; ++b) {
    // joined[ch][l]: l < T holds the joint-mean of frame l, l >= T the frame-mean of joint l-T.
    std::vector<std::vector<double>> joined(c, std::vector<double>(t + v, 0.0));
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t f = 0; f < t; ++f)
        for (std::size_t j = 0; j < v; ++j) {
          joined[ch][f] += x.at({b, ch, f, j}) / static_cast<double>(v);
          joined[ch][t + j] += x.at({b, ch, f, j}) / static_cast<double>(t);
        }
    }
    std::vector<std::vector<double>> mixed(hidden, std::vector<double>(t + v, 0.0));
    for (std::size_t h = 0; h < hidden; ++h)
      for (std::size_t l = 0; l < t + v; ++l) {
        double z = b1[h];
        for (std::size_t ch = 0; ch < c; ++ch) z += w1.at({h, ch}) * joined[ch][l];
        mixed[h][l] = hardswish(z);
      }
    for (std::size_t ch = 0; ch < c; ++ch) {
      std::vector<double> gate_t(t), gate_v(v);
      for (std::size_t f = 0; f < t; ++f) {
        double z = bt[ch];
        for (std::size_t h = 0; h < hidden; ++h) z += wt.at({ch, h}) * mixed[h][f];
        gate_t[f] = sigmoid(z);
      }
      for (std::size_t j = 0; j < v; ++j) {
        double z = bv[ch];
        for (std::size_t h = 0; h < hidden; ++h) z += wv.at({ch, h}) * mixed[h][t + j];
        gate_v[j] = sigmoid(z);
      }
      for (std::size_t f = 0; f < t; ++f)
        for (std::size_t j = 0; j < v; ++j)
          out.at({b, ch, f, j}) = x.at({b, ch, f, j}) * gate_t[f] * gate_v[j];
    }
  }
  return out;
}

GraphConvRef graph_conv(const Tensor<double>& x, const nn::GraphConv<double>& layer) {
  const auto& opt = layer.options();
  const std::size_t n = x.dim(0), cin = x.dim(1), t = x.dim(2), v = x.dim(3);
  const Tensor<double>& w = layer.weight.weight.value();
  const std::size_t cout = w.dim(0);
  const std::size_t k = opt.groups;
  const std::size_t width = cout / k;

  GraphConvRef r;
  const Tensor<double> s = layer.stca ? stca(x, *layer.stca) : x;
  r.x_hat = Tensor<double>(Shape{n, cout, t, v});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t f = 0; f < t; ++f)
        for (std::size_t j = 0; j < v; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < cin; ++c) acc += w.at({o, c}) * s.at({b, c, f, j});
          r.x_hat.at({b, o, f, j}) = acc;
        }
  r.out = Tensor<double>(Shape{n, cout, t, v});

  if (opt.enable_gcgc) {
    Tensor<double> pooled(Shape{n, cin, v});
    if (opt.use_tgp) {
      pooled = tgp(x).out;
    } else {
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t j = 0; j < v; ++j) {
            for (std::size_t f = 0; f < t; ++f) pooled.at({b, c, j}) += x.at({b, c, f, j});
            pooled.at({b, c, j}) /= static_cast<double>(t);
          }
    }
    auto project = [&](const nn::ChannelLinear<double>& phi, std::size_t b, std::size_t o,
                       std::size_t j) {
      double acc = phi.bias->value()[o];
      for (std::size_t c = 0; c < cin; ++c) acc += phi.weight.value().at({o, c}) * pooled.at({b, c, j});
      return acc;
    };
    const double alpha = layer.alpha.value().item();
    r.a_channel = Tensor<double>(Shape{n, cout, v, v});
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t i = 0; i < v; ++i) {
          std::vector<double> row(v);
          for (std::size_t j = 0; j < v; ++j) {
            row[j] = project(layer.phi1, b, o, i) - project(layer.phi2, b, o, j);
          }
          theta_row(row, opt.theta);
          for (std::size_t j = 0; j < v; ++j) {
            const double fixed = layer.bank ? layer.bank->value().at({o / width, i, j}) : 0.0;
            r.a_channel.at({b, o, i, j}) = alpha * row[j] + fixed;
          }
        }
    r.gc = Tensor<double>(Shape{n, cout, t, v});
    const double a = layer.a.value().item();
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t f = 0; f < t; ++f)
          for (std::size_t j = 0; j < v; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < v; ++i)
              acc += r.x_hat.at({b, o, f, i}) * r.a_channel.at({b, o, i, j});
            r.gc.at({b, o, f, j}) = acc;
            r.out.at({b, o, f, j}) += a * acc;
          }
  }

  if (opt.enable_gtgc) {
    const Tensor<double> m = grouped_cgp(x, k, opt.use_cgp).out;
    const double phi3 = layer.phi3.value().item();
    r.a_temporal = Tensor<double>(Shape{n, k, t, v, v});
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t g = 0; g < k; ++g)
        for (std::size_t f = 0; f < t; ++f)
          for (std::size_t i = 0; i < v; ++i) {
            std::vector<double> row(v);
            for (std::size_t j = 0; j < v; ++j) {
              row[j] = phi3 * m.at({b, g, f, i}) - phi3 * m.at({b, g, f, j});
            }
            theta_row(row, opt.theta);
            for (std::size_t j = 0; j < v; ++j) r.a_temporal.at({b, g, f, i, j}) = row[j];
          }
    r.gt = Tensor<double>(Shape{n, cout, t, v});
    const double bw = layer.b.value().item();
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t f = 0; f < t; ++f)
          for (std::size_t j = 0; j < v; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < v; ++i)
              acc += r.x_hat.at({b, o, f, i}) * r.a_temporal.at({b, o / width, f, i, j});
            r.gt.at({b, o, f, j}) = acc;
            r.out.at({b, o, f, j}) += bw * acc;
          }
  }
  return r;
}

Tensor<double> permute_joints(const Tensor<double>& x, const std::vector<std::size_t>& perm) {
  const std::size_t v = x.shape().back();
  Tensor<double> y(x.shape());
  for (std::size_t base = 0; base < x.numel(); base += v)
    for (std::size_t j = 0; j < v; ++j) y[base + perm[j]] = x[base + j];
  return y;
}

Tensor<double> permute_frames(const Tensor<double>& x, const std::vector<std::size_t>& perm) {
  const std::size_t n = x.dim(0), c = x.dim(1), t = x.dim(2), v = x.dim(3);
  Tensor<double> y(x.shape());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t f = 0; f < t; ++f)
        for (std::size_t j = 0; j < v; ++j) y.at({b, ch, perm[f], j}) = x.at({b, ch, f, j});
  return y;
}

}  // namespace dstsa::verify::oracle
