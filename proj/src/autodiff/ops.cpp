#include "stegosplat/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "stegosplat/core/error.hpp"

namespace stegosplat::autodiff {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ')';
  return os.str();
}

template <class T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

template <class T>
Var Tape<T>::leaf(BasicTensor<T> value, bool requires_grad) {
  if (consumed_) throw std::logic_error("tape already consumed by backward");
  nodes_.push_back(Node{std::move(value), {}, {}, requires_grad, true});
  return Var{nodes_.size() - 1};
}

template <class T>
Var Tape<T>::record(BasicTensor<T> value, std::vector<Var> inputs, BackwardFn backward) {
  if (consumed_) throw std::logic_error("tape already consumed by backward");
  bool rg = false;
  for (Var v : inputs) rg = rg || nodes_.at(v.id).requires_grad;
  nodes_.push_back(Node{std::move(value), std::move(inputs), rg ? std::move(backward) : BackwardFn{},
                        rg, false});
  return Var{nodes_.size() - 1};
}

template <class T>
Gradients<T> Tape<T>::backward(Var loss) {
  if (consumed_) throw std::logic_error("tape already consumed by backward");
  if (loss.id >= nodes_.size()) throw std::invalid_argument("backward: loss is not on this tape");
  if (nodes_[loss.id].value.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " +
                     shape_string(nodes_[loss.id].value.shape()));
  }
  consumed_ = true;
  std::vector<std::optional<BasicTensor<T>>> grads(nodes_.size());
  if (!nodes_[loss.id].requires_grad) return Gradients<T>(std::move(grads));
  grads[loss.id] = BasicTensor<T>(nodes_[loss.id].value.shape(), T{1});

  std::vector<BasicTensor<T>*> grad_in;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.is_leaf || !node.requires_grad || !grads[id]) continue;
    grad_in.assign(node.inputs.size(), nullptr);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const std::size_t in = node.inputs[k].id;
      if (!nodes_[in].requires_grad) continue;
      if (!grads[in]) grads[in] = BasicTensor<T>(nodes_[in].value.shape(), T{0});
      grad_in[k] = &*grads[in];
    }
    node.backward(node.value, *grads[id], grad_in);
    grads[id].reset();
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (!nodes_[id].is_leaf) grads[id].reset();
  }
  return Gradients<T>(std::move(grads));
}

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

template <class T>
void require_image(const BasicTensor<T>& t, const char* op) {
  require(t.rank() == 3, std::string(op) + ": expected (C, H, W), got " + shape_string(t.shape()));
}

template <class T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class T>
using CMatMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct ConvGeometry {
  std::size_t cin, h, w, cout, k, stride;
  std::size_t pad() const { return k / 2; }
  std::size_t ho() const { return (h + 2 * pad() - k) / stride + 1; }
  std::size_t wo() const { return (w + 2 * pad() - k) / stride + 1; }
};

template <class T>
std::vector<T> im2col(const std::vector<T>& x, const ConvGeometry& g) {
  const std::size_t ho = g.ho(), wo = g.wo();
  std::vector<T> cols(g.cin * g.k * g.k * ho * wo, T{0});
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < g.cin; ++ci)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx, ++row) {
        T* dst = &cols[row * ho * wo];
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad());
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          const T* src = &x[(ci * g.h + static_cast<std::size_t>(iy)) * g.w];
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad());
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.w)) dst[oy * wo + ox] = src[ix];
          }
        }
      }
  return cols;
}

template <class T>
void col2im_add(const std::vector<T>& cols, const ConvGeometry& g, std::vector<T>& gx) {
  const std::size_t ho = g.ho(), wo = g.wo();
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < g.cin; ++ci)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx, ++row) {
        const T* src = &cols[row * ho * wo];
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad());
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          T* dst = &gx[(ci * g.h + static_cast<std::size_t>(iy)) * g.w];
          for (std::size_t ox = 0; ox < wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad());
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.w)) dst[ix] += src[oy * wo + ox];
          }
        }
      }
}

}  // namespace

template <class T>
Var conv2d(Tape<T>& tape, Var xv, Var wv, Var bv, int stride) {
  const auto& x = tape.value(xv);
  const auto& w = tape.value(wv);
  const auto& b = tape.value(bv);
  require_image(x, "conv2d");
  require(w.rank() == 4 && w.dim(2) == w.dim(3) && w.dim(2) % 2 == 1,
          "conv2d: weight must be (Cout, Cin, k, k) with odd k, got " + shape_string(w.shape()));
  require(w.dim(1) == x.dim(0), "conv2d: input has " + std::to_string(x.dim(0)) +
                                    " channels, kernel expects " + std::to_string(w.dim(1)));
  require(b.rank() == 1 && b.dim(0) == w.dim(0), "conv2d: bias must be (Cout)");
  require(stride == 1 || stride == 2, "conv2d: stride must be 1 or 2");

  ConvGeometry geo{x.dim(0), x.dim(1), x.dim(2), w.dim(0), w.dim(2), static_cast<std::size_t>(stride)};
  require(geo.h + 2 * geo.pad() >= geo.k && geo.w + 2 * geo.pad() >= geo.k,
          "conv2d: input smaller than kernel");

  // Unfolded input: one row per (ci, ky, kx), one column per output pixel.
  std::vector<T> cols = im2col(x.storage(), geo);
  BasicTensor<T> out({geo.cout, geo.ho(), geo.wo()});
  const auto n = static_cast<Eigen::Index>(geo.ho() * geo.wo());
  const auto kk = static_cast<Eigen::Index>(geo.cin * geo.k * geo.k);
  const auto co = static_cast<Eigen::Index>(geo.cout);
  MatMap<T> o(out.storage().data(), co, n);
  o.noalias() = CMatMap<T>(w.storage().data(), co, kk) * CMatMap<T>(cols.data(), kk, n);
  for (Eigen::Index r = 0; r < co; ++r) o.row(r).array() += b[static_cast<std::size_t>(r)];

  auto backward = [&tape, wv, cols = std::move(cols), geo, n, kk, co](
                      const BasicTensor<T>&, const BasicTensor<T>& go,
                      std::vector<BasicTensor<T>*>& gin) {
    const CMatMap<T> g(go.storage().data(), co, n);
    if (gin[0] != nullptr) {
      const auto& w = tape.value(wv);
      std::vector<T> gcols(static_cast<std::size_t>(kk * n));
      MatMap<T>(gcols.data(), kk, n).noalias() = CMatMap<T>(w.storage().data(), co, kk).transpose() * g;
      col2im_add(gcols, geo, gin[0]->storage());
    }
    if (gin[1] != nullptr) {
      MatMap<T>(gin[1]->storage().data(), co, kk).noalias() +=
          g * CMatMap<T>(cols.data(), kk, n).transpose();
    }
    if (gin[2] != nullptr) {
      auto& gb = *gin[2];
      for (Eigen::Index r = 0; r < co; ++r) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) acc += g(r, i);
        gb[static_cast<std::size_t>(r)] += static_cast<T>(acc);
      }
    }
  };
  return tape.record(std::move(out), {xv, wv, bv}, std::move(backward));
}

template <class T>
Var leaky_relu(Tape<T>& tape, Var xv, double slope) {
  const auto& x = tape.value(xv);
  BasicTensor<T> out(x.shape());
  const T sl = static_cast<T>(slope);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T{0} ? x[i] : sl * x[i];
  return tape.record(std::move(out), {xv},
                     [&tape, xv, sl](const BasicTensor<T>&, const BasicTensor<T>& go,
                                     std::vector<BasicTensor<T>*>& gin) {
                       const auto& x = tape.value(xv);
                       auto& gx = *gin[0];
                       for (std::size_t i = 0; i < x.size(); ++i)
                         gx[i] += x[i] > T{0} ? go[i] : sl * go[i];
                     });
}

template <class T>
Var upsample2x(Tape<T>& tape, Var xv) {
  const auto& x = tape.value(xv);
  require_image(x, "upsample2x");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  BasicTensor<T> out({c, 2 * h, 2 * w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < 2 * h; ++y)
      for (std::size_t xx = 0; xx < 2 * w; ++xx)
        out[(ch * 2 * h + y) * 2 * w + xx] = x[(ch * h + y / 2) * w + xx / 2];
  return tape.record(std::move(out), {xv},
                     [c, h, w](const BasicTensor<T>&, const BasicTensor<T>& go,
                               std::vector<BasicTensor<T>*>& gin) {
                       auto& gx = *gin[0];
                       for (std::size_t ch = 0; ch < c; ++ch)
                         for (std::size_t y = 0; y < 2 * h; ++y)
                           for (std::size_t xx = 0; xx < 2 * w; ++xx)
                             gx[(ch * h + y / 2) * w + xx / 2] += go[(ch * 2 * h + y) * 2 * w + xx];
                     });
}

template <class T>
Var concat_channels(Tape<T>& tape, Var av, Var bv) {
  const auto& a = tape.value(av);
  const auto& b = tape.value(bv);
  require_image(a, "concat");
  require_image(b, "concat");
  require(a.dim(1) == b.dim(1) && a.dim(2) == b.dim(2),
          "concat: spatial dims differ, " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  const std::size_t na = a.size();
  BasicTensor<T> out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + na);
  return tape.record(std::move(out), {av, bv},
                     [na](const BasicTensor<T>&, const BasicTensor<T>& go,
                          std::vector<BasicTensor<T>*>& gin) {
                       if (gin[0] != nullptr)
                         for (std::size_t i = 0; i < na; ++i) (*gin[0])[i] += go[i];
                       if (gin[1] != nullptr)
                         for (std::size_t i = 0; i < gin[1]->size(); ++i) (*gin[1])[i] += go[na + i];
                     });
}

template <class T>
Var sigmoid(Tape<T>& tape, Var xv) {
  const auto& x = tape.value(xv);
  BasicTensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = T{1} / (T{1} + std::exp(-x[i]));
  return tape.record(std::move(out), {xv},
                     [](const BasicTensor<T>& y, const BasicTensor<T>& go,
                        std::vector<BasicTensor<T>*>& gin) {
                       auto& gx = *gin[0];
                       for (std::size_t i = 0; i < y.size(); ++i) gx[i] += go[i] * y[i] * (T{1} - y[i]);
                     });
}

template <class T>
Var add(Tape<T>& tape, Var av, Var bv) {
  const auto& a = tape.value(av);
  const auto& b = tape.value(bv);
  require(a.shape() == b.shape(), "add: shapes differ, " + shape_string(a.shape()) + " vs " +
                                      shape_string(b.shape()));
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return tape.record(std::move(out), {av, bv},
                     [](const BasicTensor<T>&, const BasicTensor<T>& go,
                        std::vector<BasicTensor<T>*>& gin) {
                       for (auto* g : gin)
                         if (g != nullptr)
                           for (std::size_t i = 0; i < go.size(); ++i) (*g)[i] += go[i];
                     });
}

template <class T>
Var sub(Tape<T>& tape, Var av, Var bv) {
  const auto& a = tape.value(av);
  const auto& b = tape.value(bv);
  require(a.shape() == b.shape(), "sub: shapes differ, " + shape_string(a.shape()) + " vs " +
                                      shape_string(b.shape()));
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return tape.record(std::move(out), {av, bv},
                     [](const BasicTensor<T>&, const BasicTensor<T>& go,
                        std::vector<BasicTensor<T>*>& gin) {
                       if (gin[0] != nullptr)
                         for (std::size_t i = 0; i < go.size(); ++i) (*gin[0])[i] += go[i];
                       if (gin[1] != nullptr)
                         for (std::size_t i = 0; i < go.size(); ++i) (*gin[1])[i] -= go[i];
                     });
}

template <class T>
Var square(Tape<T>& tape, Var xv) {
  const auto& x = tape.value(xv);
  BasicTensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * x[i];
  return tape.record(std::move(out), {xv},
                     [&tape, xv](const BasicTensor<T>&, const BasicTensor<T>& go,
                                 std::vector<BasicTensor<T>*>& gin) {
                       const auto& x = tape.value(xv);
                       for (std::size_t i = 0; i < x.size(); ++i) (*gin[0])[i] += T{2} * x[i] * go[i];
                     });
}

template <class T>
Var abs(Tape<T>& tape, Var xv) {
  const auto& x = tape.value(xv);
  BasicTensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::abs(x[i]);
  // Subgradient 0 at x = 0.
  return tape.record(std::move(out), {xv},
                     [&tape, xv](const BasicTensor<T>&, const BasicTensor<T>& go,
                                 std::vector<BasicTensor<T>*>& gin) {
                       const auto& x = tape.value(xv);
                       for (std::size_t i = 0; i < x.size(); ++i) {
                         const T sgn = x[i] > T{0} ? T{1} : (x[i] < T{0} ? T{-1} : T{0});
                         (*gin[0])[i] += sgn * go[i];
                       }
                     });
}

template <class T>
Var sum(Tape<T>& tape, Var xv) {
  const auto& x = tape.value(xv);
  double acc = 0.0;
  for (T v : x.data()) acc += v;
  return tape.record(BasicTensor<T>({1}, static_cast<T>(acc)), {xv},
                     [](const BasicTensor<T>&, const BasicTensor<T>& go,
                        std::vector<BasicTensor<T>*>& gin) {
                       for (auto& g : gin[0]->data()) g += go[0];
                     });
}

template <class T>
Var mean(Tape<T>& tape, Var xv) {
  const auto& x = tape.value(xv);
  require(x.size() > 0, "mean: empty tensor");
  double acc = 0.0;
  for (T v : x.data()) acc += v;
  const double n = static_cast<double>(x.size());
  return tape.record(BasicTensor<T>({1}, static_cast<T>(acc / n)), {xv},
                     [n](const BasicTensor<T>&, const BasicTensor<T>& go,
                         std::vector<BasicTensor<T>*>& gin) {
                       const T g = static_cast<T>(go[0] / n);
                       for (auto& v : gin[0]->data()) v += g;
                     });
}

template <class T>
Var l1_loss(Tape<T>& tape, Var a, Var b) {
  return mean(tape, abs(tape, sub(tape, a, b)));
}

template <class T>
Var forward_layer(Tape<T>& tape, const LayerKind& kind, std::span<const Var> inputs,
                  std::span<const Var> params, std::size_t layer_index) {
  auto arity = [&](std::size_t n_in, std::size_t n_par, const char* name) {
    if (inputs.size() != n_in || params.size() != n_par) {
      throw ShapeError("layer " + std::to_string(layer_index) + " (" + name + "): expected " +
                       std::to_string(n_in) + " inputs and " + std::to_string(n_par) + " params");
    }
  };
  try {
    return std::visit(
        [&](const auto& k) -> Var {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Conv2d>) {
            arity(1, 2, "conv2d");
            return conv2d(tape, inputs[0], params[0], params[1], k.stride);
          } else if constexpr (std::is_same_v<K, LeakyRelu>) {
            arity(1, 0, "leaky_relu");
            return leaky_relu(tape, inputs[0], k.slope);
          } else if constexpr (std::is_same_v<K, Upsample2x>) {
            arity(1, 0, "upsample2x");
            return upsample2x(tape, inputs[0]);
          } else if constexpr (std::is_same_v<K, Concat>) {
            arity(2, 0, "concat");
            return concat_channels(tape, inputs[0], inputs[1]);
          } else if constexpr (std::is_same_v<K, Sigmoid>) {
            arity(1, 0, "sigmoid");
            return sigmoid(tape, inputs[0]);
          } else {
            arity(2, 0, "add");
            return add(tape, inputs[0], inputs[1]);
          }
        },
        kind);
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    if (msg.rfind("layer ", 0) == 0) throw;
    throw ShapeError("layer " + std::to_string(layer_index) + ": " + msg);
  }
}

#define STEGOSPLAT_INSTANTIATE(T)                                                       \
  template class BasicTensor<T>;                                                        \
  template class Tape<T>;                                                               \
  template Var conv2d<T>(Tape<T>&, Var, Var, Var, int);                                 \
  template Var leaky_relu<T>(Tape<T>&, Var, double);                                    \
  template Var upsample2x<T>(Tape<T>&, Var);                                            \
  template Var concat_channels<T>(Tape<T>&, Var, Var);                                  \
  template Var sigmoid<T>(Tape<T>&, Var);                                               \
  template Var add<T>(Tape<T>&, Var, Var);                                              \
  template Var sub<T>(Tape<T>&, Var, Var);                                              \
  template Var square<T>(Tape<T>&, Var);                                                \
  template Var abs<T>(Tape<T>&, Var);                                                   \
  template Var sum<T>(Tape<T>&, Var);                                                   \
  template Var mean<T>(Tape<T>&, Var);                                                  \
  template Var l1_loss<T>(Tape<T>&, Var, Var);                                          \
  template Var forward_layer<T>(Tape<T>&, const LayerKind&, std::span<const Var>,       \
                                std::span<const Var>, std::size_t);

STEGOSPLAT_INSTANTIATE(float)
STEGOSPLAT_INSTANTIATE(double)

#undef STEGOSPLAT_INSTANTIATE

}  // namespace stegosplat::autodiff
