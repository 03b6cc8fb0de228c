#include "dstsa/nn/mstcn.hpp"

#include <charconv>

#include "dstsa/errors.hpp"

namespace dstsa::nn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<Branch> parse_branches(std::string_view text) {
  std::vector<Branch> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string_view tok = trim(text.substr(start, comma - start));
    start = comma + 1;
    if (tok == "M") {
      out.push_back({BranchKind::MaxPool, 1});
    } else if (tok == "S") {
      out.push_back({BranchKind::Shortcut, 1});
    } else if (tok == "tcn") {
      out.push_back({BranchKind::Plain, 1});
    } else if (tok.size() > 1 && tok.front() == 'g') {
      std::size_t d = 0;
      const auto [end, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), d);
      if (ec != std::errc() || end != tok.data() + tok.size() || d == 0) {
        throw ConfigError("bad dilated branch '" + std::string(tok) + "'");
      }
      out.push_back({BranchKind::Dilated, d});
    } else {
      throw ConfigError("unknown temporal branch '" + std::string(tok) + "' in '" +
                        std::string(text) + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty temporal branch list");
  if (out.size() > 1) {
    for (const auto& b : out) {
      if (b.kind == BranchKind::Plain) throw ConfigError("'tcn' cannot be combined with branches");
    }
  }
  return out;
}

std::string branches_name(const std::vector<Branch>& branches) {
  std::string s;
  for (const auto& b : branches) {
    if (!s.empty()) s += ',';
    switch (b.kind) {
      case BranchKind::Dilated: s += "g" + std::to_string(b.dilation); break;
      case BranchKind::MaxPool: s += "M"; break;
      case BranchKind::Shortcut: s += "S"; break;
      case BranchKind::Plain: s += "tcn"; break;
    }
  }
  return s;
}

std::vector<std::size_t> split_channels(std::size_t total, std::size_t parts) {
  if (parts == 0 || total < parts) {
    throw ConfigError("cannot split " + std::to_string(total) + " channels over " +
                      std::to_string(parts) + " branches");
  }
  std::vector<std::size_t> out(parts, total / parts);
  for (std::size_t i = 0; i < total % parts; ++i) ++out[i];
  return out;
}

std::size_t branch_output_length(std::size_t frames, std::size_t kernel, std::size_t dilation,
                                 std::size_t stride) {
  if (kernel % 2 == 0) {
    throw ConfigError("temporal kernel must be odd for same padding, got " +
                      std::to_string(kernel));
  }
  return ops::temporal_output_length(frames, kernel,
                                     {stride, dilation, dilation * (kernel - 1) / 2});
}

template <typename T>
TemporalConv<T>::TemporalConv(std::size_t cin, std::size_t cout, std::size_t kernel,
                              const ops::TemporalConvSpec& spec_, bool with_bias, Rng& rng)
    : weight(fan_in_uniform<T>(Shape{cout, cin, kernel}, cin * kernel, rng)), spec(spec_) {
  if (with_bias) bias = zeros_param<T>(Shape{cout});
}

template <typename T>
Var<T> TemporalConv<T>::operator()(const Var<T>& x) const {
  return ops::conv_temporal(x, weight, bias, spec);
}

template <typename T>
void TemporalConv<T>::collect(Collector<T>& c, const std::string& prefix) const {
  c.param(prefix + ".weight", weight);
  if (bias) c.param(prefix + ".bias", *bias);
}

template <typename T>
MsTcn<T>::MsTcn(std::size_t cin, std::size_t cout, const MsTcnOptions& options, Rng& rng)
    : options_(options) {
  if (options.stride != 1 && options.stride != 2) {
    throw ConfigError("temporal stride must be 1 or 2, got " + std::to_string(options.stride));
  }
  if (options.branches.empty()) throw ConfigError("empty temporal branch list");
  const auto widths = split_channels(cout, options.branches.size());
  for (std::size_t i = 0; i < options.branches.size(); ++i) {
    const Branch& br = options.branches[i];
    BranchLayer layer{br, std::nullopt, std::nullopt};
    switch (br.kind) {
      case BranchKind::Plain: {
        if (options.plain_kernel % 2 == 0) {
          throw ConfigError("temporal kernel must be odd, got " +
                            std::to_string(options.plain_kernel));
        }
        layer.conv.emplace(cin, cout, options.plain_kernel,
                           ops::TemporalConvSpec{options.stride, 1, (options.plain_kernel - 1) / 2},
                           true, rng);
        break;
      }
      case BranchKind::Dilated: {
        if (options.kernel % 2 == 0) {
          throw ConfigError("temporal kernel must be odd, got " + std::to_string(options.kernel));
        }
        layer.reduce.emplace(cin, widths[i], true, rng);
        layer.conv.emplace(
            widths[i], widths[i], options.kernel,
            ops::TemporalConvSpec{options.stride, br.dilation, br.dilation * (options.kernel - 1) / 2},
            true, rng);
        break;
      }
      case BranchKind::MaxPool:
      case BranchKind::Shortcut:
        layer.reduce.emplace(cin, widths[i], true, rng);
        break;
    }
    layers.push_back(std::move(layer));
  }
}

template <typename T>
Var<T> MsTcn<T>::branch_forward(std::size_t index, const Var<T>& x) const {
  const BranchLayer& layer = layers.at(index);
  Var<T> h = layer.reduce ? (*layer.reduce)(x) : x;
  switch (layer.branch.kind) {
    case BranchKind::Plain:
    case BranchKind::Dilated: return (*layer.conv)(h);
    case BranchKind::MaxPool: return ops::max_pool_temporal(h, 3, options_.stride, 1);
    case BranchKind::Shortcut: return ops::subsample_frames(h, options_.stride);
  }
  return h;
}

template <typename T>
Var<T> MsTcn<T>::operator()(const Var<T>& x) const {
  if (layers.size() == 1) return branch_forward(0, x);
  std::vector<Var<T>> outs;
  outs.reserve(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) outs.push_back(branch_forward(i, x));
  return ops::concat(outs, 1);
}

template <typename T>
void MsTcn<T>::collect(Collector<T>& c, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string p = prefix + ".branch" + std::to_string(i);
    if (layers[i].reduce) layers[i].reduce->collect(c, p + ".reduce");
    if (layers[i].conv) layers[i].conv->collect(c, p + ".conv");
  }
}

template struct TemporalConv<float>;
template struct TemporalConv<double>;
template class MsTcn<float>;
template class MsTcn<double>;

}  // namespace dstsa::nn
