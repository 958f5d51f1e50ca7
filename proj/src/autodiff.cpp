#include "ddist/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels.hpp"

namespace ddist {

namespace {

constexpr float kProbabilityFloor = 1e-12f;

kernels::ConvGeometry conv_geometry(const Shape& x, const Shape& w, Padding padding) {
  kernels::ConvGeometry g{};
  g.channels = x[1];
  g.height = x[2];
  g.width = x[3];
  g.kernel_h = w[2];
  g.kernel_w = w[3];
  if (padding == Padding::kSame) {
    g.pad_h = (g.kernel_h - 1) / 2;
    g.pad_w = (g.kernel_w - 1) / 2;
    g.out_h = g.height;
    g.out_w = g.width;
  } else {
    g.pad_h = g.pad_w = 0;
    g.out_h = g.height - g.kernel_h + 1;
    g.out_w = g.width - g.kernel_w + 1;
  }
  return g;
}

void add_into(std::optional<Tensor>& slot, const Tensor& g) {
  if (!slot) {
    slot = g;
    return;
  }
  auto dst = slot->data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// Row-wise stabilized softmax of a [rows, cols] buffer.
void softmax_rows(std::span<const float> in, std::span<float> out, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const float* z = in.data() + r * cols;
    float* p = out.data() + r * cols;
    const float top = *std::max_element(z, z + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(static_cast<double>(z[c]) - top);
    for (std::size_t c = 0; c < cols; ++c) {
      p[c] = static_cast<float>(std::exp(static_cast<double>(z[c]) - top) / total);
    }
  }
}

}  // namespace

const Tensor& Gradients::operator[](NodeId id) const {
  if (!contains(id)) throw UsageError("no gradient recorded for node " + std::to_string(id));
  return *by_node_[id];
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id >= nodes_.size()) throw UsageError("unknown graph node " + std::to_string(id));
  return nodes_[id];
}

NodeId Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

bool Graph::any_needs_grad(std::initializer_list<NodeId> ids) const {
  return std::any_of(ids.begin(), ids.end(), [&](NodeId id) { return node(id).needs_grad; });
}

const Tensor& Graph::value(NodeId id) const { return node(id).value; }
const std::string& Graph::name(NodeId id) const { return node(id).name; }

NodeId Graph::input(Tensor value, bool differentiable) {
  Node n(Op::kInput, {}, std::move(value));
  n.needs_grad = differentiable;
  n.is_leaf = differentiable;
  return push(std::move(n));
}

NodeId Graph::parameter(std::string name, Tensor value) {
  Node n(Op::kParameter, {}, std::move(value));
  n.needs_grad = true;
  n.is_leaf = true;
  n.name = std::move(name);
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw DimensionError("matmul", av.shape(), bv.shape());
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  kernels::gemm_nn(av.data(), bv.data(), out.data(), m, k, n, false);
  Node node_(Op::kMatmul, {a, b}, std::move(out));
  node_.needs_grad = any_needs_grad({a, b});
  return push(std::move(node_));
}

NodeId Graph::conv2d(NodeId x, NodeId filters, Padding padding) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(filters);
  if (xv.rank() != 4 || wv.rank() != 4 || xv.dim(1) != wv.dim(1)) {
    throw DimensionError("conv2d", xv.shape(), wv.shape());
  }
  if (padding == Padding::kSame && (wv.dim(2) % 2 == 0 || wv.dim(3) % 2 == 0)) {
    throw DimensionError("conv2d", "same padding needs odd kernel extents, got " +
                                       shape_string(wv.shape()));
  }
  if (padding == Padding::kValid && (wv.dim(2) > xv.dim(2) || wv.dim(3) > xv.dim(3))) {
    throw DimensionError("conv2d", xv.shape(), wv.shape());
  }
  const auto g = conv_geometry(xv.shape(), wv.shape(), padding);
  const std::size_t batch = xv.dim(0), filters_n = wv.dim(0);
  const std::size_t patch = g.patch(), positions = g.positions();
  const std::size_t image_size = g.channels * g.height * g.width;

  // One product per layer: cols [patch, batch*positions], result [F, batch*positions].
  const std::size_t wide = batch * positions;
  Tensor cols({patch, wide});
  for (std::size_t b = 0; b < batch; ++b) {
    kernels::im2col(xv.data().subspan(b * image_size, image_size), g, cols.data().data() + b * positions, wide);
  }
  std::vector<float> product(filters_n * wide);
  kernels::gemm_nn(wv.data(), cols.data(), product, filters_n, patch, wide, false);
  Tensor out({batch, filters_n, g.out_h, g.out_w});
  for (std::size_t f = 0; f < filters_n; ++f) {
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(product.begin() + static_cast<std::ptrdiff_t>(f * wide + b * positions), positions,
                  out.data().begin() + static_cast<std::ptrdiff_t>((b * filters_n + f) * positions));
    }
  }
  Node n(Op::kConv2d, {x, filters}, std::move(out));
  n.needs_grad = any_needs_grad({x, filters});
  n.padding = padding;
  if (node(filters).needs_grad) n.aux = std::move(cols);
  return push(std::move(n));
}

NodeId Graph::maxpool2x2(NodeId x) {
  const Tensor& xv = value(x);
  if (xv.rank() != 4 || xv.dim(2) % 2 != 0 || xv.dim(3) % 2 != 0) {
    throw DimensionError("maxpool2x2", "needs [B,C,H,W] with even H and W, got " +
                                           shape_string(xv.shape()));
  }
  const std::size_t planes = xv.dim(0) * xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({xv.dim(0), xv.dim(1), oh, ow});
  std::vector<std::uint32_t> index(out.size());
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = p * h * w + (2 * oy) * w + 2 * ox;
        // Strict comparison in row-major window order keeps the first maximum.
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t at = p * h * w + (2 * oy + dy) * w + 2 * ox + dx;
            if (xv[at] > xv[best]) best = at;
          }
        }
        const std::size_t o = p * oh * ow + oy * ow + ox;
        out[o] = xv[best];
        index[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  Node n(Op::kMaxPool, {x}, std::move(out));
  n.needs_grad = any_needs_grad({x});
  n.index = std::move(index);
  return push(std::move(n));
}

NodeId Graph::relu(NodeId x) {
  Tensor out = value(x);
  for (auto& v : out.data()) v = v > 0.0f ? v : 0.0f;
  Node n(Op::kRelu, {x}, std::move(out));
  n.needs_grad = any_needs_grad({x});
  return push(std::move(n));
}

NodeId Graph::add_bias(NodeId x, NodeId bias) {
  const Tensor& xv = value(x);
  const Tensor& bv = value(bias);
  const bool rank2 = xv.rank() == 2 && bv.rank() == 1 && bv.dim(0) == xv.dim(1);
  const bool rank4 = xv.rank() == 4 && bv.rank() == 1 && bv.dim(0) == xv.dim(1);
  if (!rank2 && !rank4) throw DimensionError("add_bias", xv.shape(), bv.shape());
  Tensor out = xv;
  const std::size_t channels = bv.dim(0);
  const std::size_t inner = rank4 ? xv.dim(2) * xv.dim(3) : 1;
  float* o = out.data().data();
  for (std::size_t row = 0; row < xv.dim(0); ++row) {
    for (std::size_t c = 0; c < channels; ++c) {
      const float b = bv[c];
      for (std::size_t i = 0; i < inner; ++i) *o++ += b;
    }
  }
  Node n(Op::kAddBias, {x, bias}, std::move(out));
  n.needs_grad = any_needs_grad({x, bias});
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.shape() != bv.shape()) throw DimensionError("add", av.shape(), bv.shape());
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  Node n(Op::kAdd, {a, b}, std::move(out));
  n.needs_grad = any_needs_grad({a, b});
  return push(std::move(n));
}

NodeId Graph::reshape(NodeId x, Shape shape) {
  const Tensor& xv = value(x);
  if (shape_size(shape) != xv.size()) throw DimensionError("reshape", xv.shape(), shape);
  Node n(Op::kReshape, {x}, xv.reshaped(std::move(shape)));
  n.needs_grad = any_needs_grad({x});
  return push(std::move(n));
}

NodeId Graph::divide(NodeId x, float divisor) {
  if (!(divisor != 0.0f) || !std::isfinite(divisor)) {
    throw UsageError("divide: divisor must be finite and nonzero");
  }
  Tensor out = value(x);
  for (auto& v : out.data()) v /= divisor;
  Node n(Op::kDivide, {x}, std::move(out));
  n.needs_grad = any_needs_grad({x});
  n.scalar = divisor;
  return push(std::move(n));
}

NodeId Graph::multiply(NodeId x, Tensor mask) {
  const Tensor& xv = value(x);
  if (mask.shape() != xv.shape()) throw DimensionError("multiply", xv.shape(), mask.shape());
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  Node n(Op::kMultiply, {x}, std::move(out));
  n.needs_grad = any_needs_grad({x});
  n.aux = std::move(mask);
  return push(std::move(n));
}

NodeId Graph::softmax(NodeId x) {
  const Tensor& xv = value(x);
  if (xv.rank() != 2) throw DimensionError("softmax", "needs a rank-2 tensor, got " + shape_string(xv.shape()));
  Tensor out(xv.shape());
  softmax_rows(xv.data(), out.data(), xv.dim(0), xv.dim(1));
  Node n(Op::kSoftmax, {x}, std::move(out));
  n.needs_grad = any_needs_grad({x});
  return push(std::move(n));
}

NodeId Graph::softmax_cross_entropy(NodeId logits, Tensor labels) {
  const Tensor& zv = value(logits);
  if (zv.rank() != 2 || labels.shape() != zv.shape()) {
    throw DimensionError("softmax_cross_entropy", zv.shape(), labels.shape());
  }
  const std::size_t rows = zv.dim(0), cols = zv.dim(1);
  Tensor probs(zv.shape());
  softmax_rows(zv.data(), probs.data(), rows, cols);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (labels[i] != 0.0f) {
      total -= labels[i] * std::log(std::max(probs[i], kProbabilityFloor));
    }
  }
  Node n(Op::kSoftmaxCrossEntropy, {logits}, Tensor({1}, {static_cast<float>(total / rows)}));
  n.needs_grad = any_needs_grad({logits});
  n.aux = std::move(probs);
  n.aux2 = std::move(labels);
  return push(std::move(n));
}

Gradients Graph::backward(NodeId seed) const {
  const Tensor& v = value(seed);
  if (v.size() != 1) {
    throw UsageError("backward: node " + std::to_string(seed) + " has shape " +
                     shape_string(v.shape()) + "; non-scalar seeds need an explicit gradient");
  }
  return backward(seed, Tensor(v.shape(), 1.0f));
}

Gradients Graph::backward(NodeId seed, const Tensor& seed_gradient) const {
  const Tensor& sv = value(seed);
  if (seed_gradient.shape() != sv.shape()) {
    throw DimensionError("backward seed", sv.shape(), seed_gradient.shape());
  }
  std::vector<std::optional<Tensor>> adj(nodes_.size());
  adj[seed] = seed_gradient;

  for (std::size_t idx = seed + 1; idx-- > 0;) {
    const Node& n = nodes_[idx];
    if (!n.needs_grad || !adj[idx] || n.is_leaf) continue;
    const Tensor& g = *adj[idx];

    switch (n.op) {
      case Op::kInput:
      case Op::kParameter:
        break;
      case Op::kMatmul: {
        const Tensor& a = nodes_[n.inputs[0]].value;
        const Tensor& b = nodes_[n.inputs[1]].value;
        const std::size_t m = a.dim(0), k = a.dim(1), cols = b.dim(1);
        if (nodes_[n.inputs[0]].needs_grad) {
          Tensor ga(a.shape());
          kernels::gemm_nt(g.data(), b.data(), ga.data(), m, cols, k, false);
          add_into(adj[n.inputs[0]], ga);
        }
        if (nodes_[n.inputs[1]].needs_grad) {
          Tensor gb(b.shape());
          kernels::gemm_tn(a.data(), g.data(), gb.data(), m, k, cols, false);
          add_into(adj[n.inputs[1]], gb);
        }
        break;
      }
      case Op::kConv2d: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        const Tensor& w = nodes_[n.inputs[1]].value;
        const auto geo = conv_geometry(x.shape(), w.shape(), n.padding);
        const std::size_t batch = x.dim(0), filters_n = w.dim(0);
        const std::size_t patch = geo.patch(), positions = geo.positions();
        const std::size_t image_size = geo.channels * geo.height * geo.width;
        const std::size_t wide = batch * positions;
        std::vector<float> gwide(filters_n * wide);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t f = 0; f < filters_n; ++f) {
            std::copy_n(g.data().begin() + static_cast<std::ptrdiff_t>((b * filters_n + f) * positions),
                        positions, gwide.begin() + static_cast<std::ptrdiff_t>(f * wide + b * positions));
          }
        }
        if (nodes_[n.inputs[1]].needs_grad) {
          Tensor gw(w.shape());
          kernels::gemm_nt(gwide, n.aux.data(), gw.data(), filters_n, wide, patch, false);
          add_into(adj[n.inputs[1]], gw);
        }
        if (nodes_[n.inputs[0]].needs_grad) {
          Tensor gx(x.shape());
          std::vector<float> dcols(patch * wide);
          kernels::gemm_tn(w.data(), gwide, dcols, filters_n, patch, wide, false);
          for (std::size_t b = 0; b < batch; ++b) {
            kernels::col2im(dcols.data() + b * positions, wide, geo, gx.data().subspan(b * image_size, image_size));
          }
          add_into(adj[n.inputs[0]], gx);
        }
        break;
      }
      case Op::kMaxPool: {
        Tensor gx(nodes_[n.inputs[0]].value.shape());
        for (std::size_t o = 0; o < g.size(); ++o) gx[n.index[o]] += g[o];
        add_into(adj[n.inputs[0]], gx);
        break;
      }
      case Op::kRelu: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        Tensor gx(x.shape());
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = x[i] > 0.0f ? g[i] : 0.0f;
        add_into(adj[n.inputs[0]], gx);
        break;
      }
      case Op::kAddBias: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        if (nodes_[n.inputs[0]].needs_grad) add_into(adj[n.inputs[0]], g);
        if (nodes_[n.inputs[1]].needs_grad) {
          const Tensor& bias = nodes_[n.inputs[1]].value;
          const std::size_t channels = bias.dim(0);
          const std::size_t inner = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
          std::vector<double> sums(channels, 0.0);
          const float* gi = g.data().data();
          for (std::size_t row = 0; row < x.dim(0); ++row) {
            for (std::size_t c = 0; c < channels; ++c) {
              double acc = 0.0;
              for (std::size_t i = 0; i < inner; ++i) acc += *gi++;
              sums[c] += acc;
            }
          }
          Tensor gb(bias.shape());
          for (std::size_t c = 0; c < channels; ++c) gb[c] = static_cast<float>(sums[c]);
          add_into(adj[n.inputs[1]], gb);
        }
        break;
      }
      case Op::kAdd:
        for (NodeId in : n.inputs) {
          if (nodes_[in].needs_grad) add_into(adj[in], g);
        }
        break;
      case Op::kReshape:
        add_into(adj[n.inputs[0]], g.reshaped(nodes_[n.inputs[0]].value.shape()));
        break;
      case Op::kDivide: {
        Tensor gx = g;
        for (auto& v : gx.data()) v /= n.scalar;
        add_into(adj[n.inputs[0]], gx);
        break;
      }
      case Op::kMultiply: {
        Tensor gx = g;
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= n.aux[i];
        add_into(adj[n.inputs[0]], gx);
        break;
      }
      case Op::kSoftmax: {
        const Tensor& p = n.value;
        const std::size_t rows = p.dim(0), cols = p.dim(1);
        Tensor gx(p.shape());
        for (std::size_t r = 0; r < rows; ++r) {
          double dot = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            dot += static_cast<double>(g[r * cols + c]) * p[r * cols + c];
          }
          for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            gx[i] = static_cast<float>(p[i] * (g[i] - dot));
          }
        }
        add_into(adj[n.inputs[0]], gx);
        break;
      }
      case Op::kSoftmaxCrossEntropy: {
        // d/dz of the row-mean cross-entropy: (p - y) / rows.
        const Tensor& p = n.aux;
        const Tensor& y = n.aux2;
        const double scale = static_cast<double>(g[0]) / static_cast<double>(p.dim(0));
        Tensor gx(p.shape());
        for (std::size_t i = 0; i < gx.size(); ++i) {
          gx[i] = static_cast<float>((static_cast<double>(p[i]) - y[i]) * scale);
        }
        add_into(adj[n.inputs[0]], gx);
        break;
      }
    }
    if (!n.is_leaf) adj[idx].reset();
  }

  std::vector<std::optional<Tensor>> result(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].is_leaf) continue;
    result[i] = adj[i] ? std::move(adj[i]) : std::optional<Tensor>(Tensor(nodes_[i].value.shape()));
  }
  return Gradients(std::move(result));
}

}  // namespace ddist
