#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "gtakit/reps.hpp"

namespace gtakit {

// Dense row-major tensor. Gradients live in the Graph, not here.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), T(0)) {}
  Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<std::int64_t>(data.size()) != numel_of(shape))
      throw std::invalid_argument("Tensor: data length does not match shape");
  }

  static std::int64_t numel_of(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(shape.size() - 1); }
  // Product of all dimensions but the last; 2-D view used by most ops.
  int lead() const { return static_cast<int>(numel() / cols()); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

template <typename T>
Tensor<T> xavier_uniform(int fan_in, int fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> t({fan_in, fan_out});
  for (auto& v : t.data) v = static_cast<T>(dist(rng));
  return t;
}

// Reverse-mode tape. Ops evaluate eagerly and record a backward closure;
// backward() walks the tape in reverse. Single-owner, not thread-safe.
template <typename T>
class Graph {
 public:
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapT = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using CMapT =
      Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  int leaf(Tensor<T> t) {
    nodes_.push_back(Node{std::move(t), nullptr, {}, {}});
    return id();
  }

  int param(Tensor<T>* p) {
    nodes_.push_back(Node{{}, p, {}, {}});
    return id();
  }

  const Tensor<T>& val(int a) const {
    const Node& n = nodes_.at(a);
    return n.external ? *n.external : n.value;
  }
  Tensor<T>& grad(int a) { return nodes_.at(a).grad; }
  bool is_param(int a) const { return nodes_.at(a).external != nullptr; }

  int matmul(int a, int b, bool trans_a = false, bool trans_b = false) {
    const Tensor<T>&A = val(a), &B = val(b);
    const int am = trans_a ? A.cols() : A.lead(), ak = trans_a ? A.lead() : A.cols();
    const int bk = trans_b ? B.cols() : B.lead(), bn = trans_b ? B.lead() : B.cols();
    if (ak != bk) throw std::invalid_argument("matmul: inner dimensions do not match");
    Tensor<T> out({am, bn});
    auto ma = map2(A), mb = map2(B);
    MapT mo(out.data.data(), am, bn);
    if (!trans_a && !trans_b) mo.noalias() = ma * mb;
    else if (trans_a && !trans_b) mo.noalias() = ma.transpose() * mb;
    else if (!trans_a && trans_b) mo.noalias() = ma * mb.transpose();
    else mo.noalias() = ma.transpose() * mb.transpose();
    return push(std::move(out), [=](Graph& g) {
      CMapT go(g.grad(g.top_).data.data(), am, bn);
      auto mav = g.map2(g.val(a)), mbv = g.map2(g.val(b));
      MapT ga(g.grad(a).data.data(), mav.rows(), mav.cols());
      MapT gb(g.grad(b).data.data(), mbv.rows(), mbv.cols());
      if (!trans_a && !trans_b) {
        ga.noalias() += go * mbv.transpose();
        gb.noalias() += mav.transpose() * go;
      } else if (trans_a && !trans_b) {
        ga.noalias() += mbv * go.transpose();
        gb.noalias() += mav * go;
      } else if (!trans_a && trans_b) {
        ga.noalias() += go * mbv;
        gb.noalias() += go.transpose() * mav;
      } else {
        ga.noalias() += mbv.transpose() * go.transpose();
        gb.noalias() += go.transpose() * mav.transpose();
      }
    }, {a, b});
  }

  int add(int a, int b) {
    const Tensor<T>&A = val(a), &B = val(b);
    if (A.shape != B.shape) throw std::invalid_argument("add: shape mismatch");
    Tensor<T> out = A;
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data[i] += B.data[i];
    return push(std::move(out), [=](Graph& g) {
      const auto& go = g.grad(g.top_).data;
      for (size_t i = 0; i < go.size(); ++i) {
        g.grad(a).data[i] += go[i];
        g.grad(b).data[i] += go[i];
      }
    }, {a, b});
  }

  // Adds a length-d row vector to every row of a.
  int add_rowvec(int a, int b) {
    const Tensor<T>&A = val(a), &B = val(b);
    if (B.numel() != A.cols()) throw std::invalid_argument("add_rowvec: width mismatch");
    Tensor<T> out = A;
    const int n = A.lead(), d = A.cols();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) out.data[static_cast<size_t>(i) * d + j] += B.data[j];
    return push(std::move(out), [=](Graph& g) {
      const auto& go = g.grad(g.top_).data;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
          g.grad(a).data[static_cast<size_t>(i) * d + j] += go[static_cast<size_t>(i) * d + j];
          g.grad(b).data[j] += go[static_cast<size_t>(i) * d + j];
        }
    }, {a, b});
  }

  int sub(int a, int b) {
    const Tensor<T>&A = val(a), &B = val(b);
    if (A.shape != B.shape) throw std::invalid_argument("sub: shape mismatch");
    Tensor<T> out = A;
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data[i] -= B.data[i];
    return push(std::move(out), [=](Graph& g) {
      const auto& go = g.grad(g.top_).data;
      for (size_t i = 0; i < go.size(); ++i) {
        g.grad(a).data[i] += go[i];
        g.grad(b).data[i] -= go[i];
      }
    }, {a, b});
  }

  int mul(int a, int b) {
    const Tensor<T>&A = val(a), &B = val(b);
    if (A.shape != B.shape) throw std::invalid_argument("mul: shape mismatch");
    Tensor<T> out = A;
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data[i] *= B.data[i];
    return push(std::move(out), [=](Graph& g) {
      const auto& go = g.grad(g.top_).data;
      const auto&av = g.val(a).data, &bv = g.val(b).data;
      for (size_t i = 0; i < go.size(); ++i) {
        g.grad(a).data[i] += go[i] * bv[i];
        g.grad(b).data[i] += go[i] * av[i];
      }
    }, {a, b});
  }

  int scale(int a, double s) {
    Tensor<T> out = val(a);
    for (auto& v : out.data) v = static_cast<T>(v * s);
    return push(std::move(out), [=](Graph& g) {
      const auto& go = g.grad(g.top_).data;
      for (size_t i = 0; i < go.size(); ++i) g.grad(a).data[i] += static_cast<T>(go[i] * s);
    }, {a});
  }

  int relu(int a) {
    Tensor<T> out = val(a);
    for (auto& v : out.data) v = v > T(0) ? v : T(0);
    return push(std::move(out), [=](Graph& g) {
      const auto& go = g.grad(g.top_).data;
      const auto& av = g.val(a).data;
      for (size_t i = 0; i < go.size(); ++i)
        if (av[i] > T(0)) g.grad(a).data[i] += go[i];
    }, {a});
  }

  int gelu(int a) {
    Tensor<T> out = val(a);
    for (auto& v : out.data) {
      const double x = static_cast<double>(v);
      v = static_cast<T>(0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)));
    }
    return push(std::move(out), [=](Graph& g) {
      const auto& go = g.grad(g.top_).data;
      const auto& av = g.val(a).data;
      for (size_t i = 0; i < go.size(); ++i) {
        const double x = static_cast<double>(av[i]);
        const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        g.grad(a).data[i] += static_cast<T>(go[i] * (cdf + x * pdf));
      }
    }, {a});
  }

  int softmax_lastdim(int a) {
    const Tensor<T>& A = val(a);
    const int n = A.lead(), d = A.cols();
    Tensor<T> out = A;
    for (int i = 0; i < n; ++i) {
      T* row = out.data.data() + static_cast<size_t>(i) * d;
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < d; ++j) mx = std::max(mx, static_cast<double>(row[j]));
      double sum = 0.0;
      for (int j = 0; j < d; ++j) {
        const double e = std::exp(static_cast<double>(row[j]) - mx);
        row[j] = static_cast<T>(e);
        sum += e;
      }
      for (int j = 0; j < d; ++j) row[j] = static_cast<T>(row[j] / sum);
    }
    return push(std::move(out), [=](Graph& g) {
      const auto& go = g.grad(g.top_).data;
      const auto& y = g.val(g.top_).data;
      for (int i = 0; i < n; ++i) {
        const size_t o = static_cast<size_t>(i) * d;
        double dot = 0.0;
        for (int j = 0; j < d; ++j) dot += static_cast<double>(go[o + j]) * y[o + j];
        for (int j = 0; j < d; ++j)
          g.grad(a).data[o + j] +=
              static_cast<T>(y[o + j] * (static_cast<double>(go[o + j]) - dot));
      }
    }, {a});
  }

  // Layer normalization over the last dimension with learned gain and bias.
  int layer_norm(int a, int gain, int bias, double eps = 1e-5) {
    const Tensor<T>& A = val(a);
    const int n = A.lead(), d = A.cols();
    if (val(gain).numel() != d || val(bias).numel() != d)
      throw std::invalid_argument("layer_norm: gain/bias width mismatch");
    Tensor<T> out = A;
    auto norm = std::make_shared<std::vector<double>>(static_cast<size_t>(n) * d);
    auto inv_std = std::make_shared<std::vector<double>>(n);
    for (int i = 0; i < n; ++i) {
      const size_t o = static_cast<size_t>(i) * d;
      double mean = 0.0;
      for (int j = 0; j < d; ++j) mean += static_cast<double>(A.data[o + j]);
      mean /= d;
      double var = 0.0;
      for (int j = 0; j < d; ++j) {
        const double c = static_cast<double>(A.data[o + j]) - mean;
        var += c * c;
      }
      var /= d;
      const double is = 1.0 / std::sqrt(var + eps);
      (*inv_std)[i] = is;
      for (int j = 0; j < d; ++j) {
        const double h = (static_cast<double>(A.data[o + j]) - mean) * is;
        (*norm)[o + j] = h;
        out.data[o + j] =
            static_cast<T>(h * static_cast<double>(val(gain).data[j]) +
                           static_cast<double>(val(bias).data[j]));
      }
    }
    return push(std::move(out), [=](Graph& g) {
      const auto& go = g.grad(g.top_).data;
      const auto& gv = g.val(gain).data;
      for (int i = 0; i < n; ++i) {
        const size_t o = static_cast<size_t>(i) * d;
        double sum_gh = 0.0, sum_ghh = 0.0;
        for (int j = 0; j < d; ++j) {
          const double gh = static_cast<double>(go[o + j]) * static_cast<double>(gv[j]);
          sum_gh += gh;
          sum_ghh += gh * (*norm)[o + j];
          g.grad(gain).data[j] += static_cast<T>(static_cast<double>(go[o + j]) * (*norm)[o + j]);
          g.grad(bias).data[j] += go[o + j];
        }
        for (int j = 0; j < d; ++j) {
          const double gh = static_cast<double>(go[o + j]) * static_cast<double>(gv[j]);
          g.grad(a).data[o + j] += static_cast<T>(
              (*inv_std)[i] * (gh - sum_gh / d - (*norm)[o + j] * sum_ghh / d));
        }
      }
    }, {a, gain, bias});
  }

  int concat_lastdim(int a, int b) {
    const Tensor<T>&A = val(a), &B = val(b);
    if (A.lead() != B.lead()) throw std::invalid_argument("concat_lastdim: row count mismatch");
    const int n = A.lead(), da = A.cols(), db = B.cols();
    Tensor<T> out({n, da + db});
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < da; ++j)
        out.data[static_cast<size_t>(i) * (da + db) + j] = A.data[static_cast<size_t>(i) * da + j];
      for (int j = 0; j < db; ++j)
        out.data[static_cast<size_t>(i) * (da + db) + da + j] =
            B.data[static_cast<size_t>(i) * db + j];
    }
    return push(std::move(out), [=](Graph& g) {
      const auto& go = g.grad(g.top_).data;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < da; ++j)
          g.grad(a).data[static_cast<size_t>(i) * da + j] +=
              go[static_cast<size_t>(i) * (da + db) + j];
        for (int j = 0; j < db; ++j)
          g.grad(b).data[static_cast<size_t>(i) * db + j] +=
              go[static_cast<size_t>(i) * (da + db) + da + j];
      }
    }, {a, b});
  }

  int slice_lastdim(int a, int start, int len) {
    const Tensor<T>& A = val(a);
    const int n = A.lead(), d = A.cols();
    if (start < 0 || len < 0 || start + len > d)
      throw std::invalid_argument("slice_lastdim: range out of bounds");
    Tensor<T> out({n, len});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < len; ++j)
        out.data[static_cast<size_t>(i) * len + j] = A.data[static_cast<size_t>(i) * d + start + j];
    return push(std::move(out), [=](Graph& g) {
      const auto& go = g.grad(g.top_).data;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < len; ++j)
          g.grad(a).data[static_cast<size_t>(i) * d + start + j] +=
              go[static_cast<size_t>(i) * len + j];
    }, {a});
  }

  int reshape(int a, std::vector<int> shape) {
    Tensor<T> out = val(a);
    if (Tensor<T>::numel_of(shape) != out.numel())
      throw std::invalid_argument("reshape: element count mismatch");
    out.shape = std::move(shape);
    return push(std::move(out), [=](Graph& g) {
      const auto& go = g.grad(g.top_).data;
      for (size_t i = 0; i < go.size(); ++i) g.grad(a).data[i] += go[i];
    }, {a});
  }

  // Token-wise structured multiply by per-token representations. The
  // representations are constants of the graph; backward multiplies the
  // incoming gradient by the transpose of the effective matrices.
  int rep_apply_node(std::shared_ptr<const std::vector<Representation>> reps, int x,
                     RepApplyMode mode, FlopCounter* counter = nullptr) {
    const Tensor<T>& X = val(x);
    const int n = X.lead(), d = X.cols();
    Tensor<T> out({n, d});
    rep_apply<T>({reps->data(), reps->size()}, X.data.data(), out.data.data(), n, d, mode, counter);
    return push(std::move(out), [=](Graph& g) {
      Tensor<T> gx({n, d});
      rep_apply<T>({reps->data(), reps->size()}, g.grad(g.top_).data.data(), gx.data.data(), n, d,
                   backward_mode(mode), nullptr);
      for (std::int64_t i = 0; i < gx.numel(); ++i) g.grad(x).data[i] += gx.data[i];
    }, {x});
  }

  int kron_apply_node(std::shared_ptr<const std::vector<KroneckerRep>> reps, int x,
                      RepApplyMode mode, FlopCounter* counter = nullptr) {
    const Tensor<T>& X = val(x);
    const int n = X.lead(), d = X.cols();
    Tensor<T> out({n, d});
    kron_apply<T>({reps->data(), reps->size()}, X.data.data(), out.data.data(), n, d, mode,
                  counter);
    return push(std::move(out), [=](Graph& g) {
      Tensor<T> gx({n, d});
      kron_apply<T>({reps->data(), reps->size()}, g.grad(g.top_).data.data(), gx.data.data(), n, d,
                    backward_mode(mode), nullptr);
      for (std::int64_t i = 0; i < gx.numel(); ++i) g.grad(x).data[i] += gx.data[i];
    }, {x});
  }

  // Negative squared Euclidean distances: out(i, j) = -|Q_i - K_j|^2.
  int euclid_logits(int q, int k) {
    const Tensor<T>&Q = val(q), &K = val(k);
    if (Q.cols() != K.cols()) throw std::invalid_argument("euclid_logits: width mismatch");
    const int n = Q.lead(), m = K.lead(), d = Q.cols();
    Tensor<T> out({n, m});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (int c = 0; c < d; ++c) {
          const double diff = static_cast<double>(Q.data[static_cast<size_t>(i) * d + c]) -
                              static_cast<double>(K.data[static_cast<size_t>(j) * d + c]);
          s += diff * diff;
        }
        out.data[static_cast<size_t>(i) * m + j] = static_cast<T>(-s);
      }
    return push(std::move(out), [=](Graph& g) {
      const auto& go = g.grad(g.top_).data;
      const auto&qv = g.val(q).data, &kv = g.val(k).data;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
          const double gij = static_cast<double>(go[static_cast<size_t>(i) * m + j]);
          for (int c = 0; c < d; ++c) {
            const double diff = static_cast<double>(qv[static_cast<size_t>(i) * d + c]) -
                                static_cast<double>(kv[static_cast<size_t>(j) * d + c]);
            g.grad(q).data[static_cast<size_t>(i) * d + c] += static_cast<T>(-2.0 * gij * diff);
            g.grad(k).data[static_cast<size_t>(j) * d + c] += static_cast<T>(2.0 * gij * diff);
          }
        }
    }, {q, k});
  }

  // Mean squared error over all elements; scalar output.
  int mse(int a, int b) {
    const Tensor<T>&A = val(a), &B = val(b);
    if (A.shape != B.shape) throw std::invalid_argument("mse: shape mismatch");
    const std::int64_t n = A.numel();
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double diff = static_cast<double>(A.data[i]) - static_cast<double>(B.data[i]);
      s += diff * diff;
    }
    Tensor<T> out({1}, {static_cast<T>(s / n)});
    return push(std::move(out), [=](Graph& g) {
      const double go = static_cast<double>(g.grad(g.top_).data[0]);
      const auto&av = g.val(a).data, &bv = g.val(b).data;
      for (std::int64_t i = 0; i < n; ++i) {
        const double diff = static_cast<double>(av[i]) - static_cast<double>(bv[i]);
        g.grad(a).data[i] += static_cast<T>(2.0 * go * diff / n);
        g.grad(b).data[i] -= static_cast<T>(2.0 * go * diff / n);
      }
    }, {a, b});
  }

  int sum(int a) {
    const Tensor<T>& A = val(a);
    double s = 0.0;
    for (const T& v : A.data) s += static_cast<double>(v);
    Tensor<T> out({1}, {static_cast<T>(s)});
    return push(std::move(out), [=](Graph& g) {
      const T go = g.grad(g.top_).data[0];
      for (auto& v : g.grad(a).data) v += go;
    }, {a});
  }

  // Seeds d(out)=1 and runs the tape in reverse. `out` must be scalar.
  void backward(int out) {
    if (val(out).numel() != 1) throw std::invalid_argument("backward: output must be scalar");
    for (size_t i = 0; i < nodes_.size(); ++i) {
      nodes_[i].grad = Tensor<T>(val(static_cast<int>(i)).shape);
    }
    nodes_.at(out).grad.data[0] = T(1);
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      if (nodes_[i].backward) {
        top_ = i;
        nodes_[i].backward(*this);
      }
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T>* external;
    Tensor<T> grad;
    std::function<void(Graph&)> backward;
  };

  static RepApplyMode backward_mode(RepApplyMode mode) {
    switch (mode) {
      case RepApplyMode::Plain:
        return RepApplyMode::Transpose;
      case RepApplyMode::Transpose:
        return RepApplyMode::Plain;
      case RepApplyMode::Inverse:
        return RepApplyMode::InverseTranspose;
      case RepApplyMode::InverseTranspose:
        return RepApplyMode::Inverse;
    }
    throw std::logic_error("backward_mode: unreachable");
  }

  CMapT map2(const Tensor<T>& t) const { return CMapT(t.data.data(), t.lead(), t.cols()); }

  int push(Tensor<T> out, std::function<void(Graph&)> bwd, std::vector<int> /*inputs*/) {
    nodes_.push_back(Node{std::move(out), nullptr, {}, std::move(bwd)});
    return id();
  }

  int id() const { return static_cast<int>(nodes_.size()) - 1; }

  std::vector<Node> nodes_;
  int top_ = -1;
};

}  // namespace gtakit
