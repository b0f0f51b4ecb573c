#include "saz/nn/tape.hpp"

#include <cmath>

#include "saz/errors.hpp"

namespace saz::nn {

template <typename T>
Var Tape<T>::push(Matrix<T> value, bool needs_grad) {
  Node node;
  node.owned = std::move(value);
  node.needs_grad = record_ && needs_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
bool Tape<T>::any_grad(std::initializer_list<Var> vars) const {
  if (!record_) return false;
  for (Var v : vars)
    if (nodes_[v.id].needs_grad) return true;
  return false;
}

template <typename T>
void Tape<T>::accumulate(Var v, const Matrix<T>& g) {
  Node& n = nodes_[v.id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

template <typename T>
template <typename Expr>
void Tape<T>::accumulate_expr(Var v, const Expr& g) {
  Node& n = nodes_[v.id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

template <typename T>
Var Tape<T>::constant(Matrix<T> value) {
  return push(std::move(value), false);
}

template <typename T>
Var Tape<T>::constant_ref(const Matrix<T>& value) {
  Node node;
  node.ref = &value;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Tape<T>::parameter(Parameter<T>& p) {
  Node node;
  node.ref = &p.value;
  node.needs_grad = record_ && p.trainable;
  node.param = &p;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
void Tape<T>::backward(Var output) {
  if (!record_) throw StateError("backward() on a tape built without recording");
  if (value(output).size() != 1) throw ShapeError("backward() needs a scalar output");
  if (!nodes_[output.id].needs_grad) return;
  nodes_[output.id].grad = Matrix<T>::Ones(1, 1);
  for (int i = output.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward();
    if (n.param) {
      if (n.param->grad.rows() != n.param->value.rows() || n.param->grad.cols() != n.param->value.cols())
        n.param->zero_grad();
      n.param->grad += nodes_[i].grad;
    }
  }
}

template <typename T>
Var Tape<T>::matmul(Var a, Var b) {
  const auto& A = value(a);
  const auto& B = value(b);
  if (A.cols() != B.rows())
    throw ShapeError("matmul: " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) + " by " +
                     std::to_string(B.rows()) + "x" + std::to_string(B.cols()));
  Matrix<T> out = A * B;
  Var y = push(std::move(out), any_grad({a, b}));
  if (nodes_[y.id].needs_grad) {
    nodes_[y.id].backward = [this, a, b, y] {
      const auto& dy = nodes_[y.id].grad;
      if (nodes_[a.id].needs_grad) accumulate_expr(a, dy * value(b).transpose());
      if (nodes_[b.id].needs_grad) accumulate_expr(b, value(a).transpose() * dy);
    };
  }
  return y;
}

template <typename T>
Var Tape<T>::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) throw ShapeError("add: shape mismatch");
  Var y = push(value(a) + value(b), any_grad({a, b}));
  if (nodes_[y.id].needs_grad) {
    nodes_[y.id].backward = [this, a, b, y] {
      accumulate(a, nodes_[y.id].grad);
      accumulate(b, nodes_[y.id].grad);
    };
  }
  return y;
}

template <typename T>
Var Tape<T>::add_row(Var x, Var row) {
  const auto& X = value(x);
  const auto& R = value(row);
  if (R.rows() != 1 || R.cols() != X.cols()) throw ShapeError("add_row: bias width mismatch");
  Matrix<T> out = X.rowwise() + R.row(0);
  Var y = push(std::move(out), any_grad({x, row}));
  if (nodes_[y.id].needs_grad) {
    nodes_[y.id].backward = [this, x, row, y] {
      const auto& dy = nodes_[y.id].grad;
      accumulate(x, dy);
      if (nodes_[row.id].needs_grad) accumulate_expr(row, dy.colwise().sum());
    };
  }
  return y;
}

template <typename T>
Var Tape<T>::relu(Var x) {
  Var y = push(value(x).cwiseMax(T(0)), any_grad({x}));
  if (nodes_[y.id].needs_grad) {
    nodes_[y.id].backward = [this, x, y] {
      const auto& Y = value(y);
      accumulate_expr(x, (Y.array() > T(0)).select(nodes_[y.id].grad.array(), T(0)).matrix());
    };
  }
  return y;
}

template <typename T>
Var Tape<T>::tanh(Var x) {
  Matrix<T> out = value(x).array().tanh().matrix();
  Var y = push(std::move(out), any_grad({x}));
  if (nodes_[y.id].needs_grad) {
    nodes_[y.id].backward = [this, x, y] {
      const auto& Y = value(y);
      accumulate_expr(x, (nodes_[y.id].grad.array() * (T(1) - Y.array().square())).matrix());
    };
  }
  return y;
}

template <typename T>
Var Tape<T>::neighbor_sum(Var h, const std::vector<Edge>& edges, Var eps) {
  const auto& H = value(h);
  if (value(eps).size() != 1) throw ShapeError("neighbor_sum: eps must be 1x1");
  const T scale = T(1) + value(eps)(0, 0);
  Matrix<T> out = scale * H;
  const auto rows = H.rows();
  for (const Edge& e : edges) {
    if (e.src < 0 || e.src >= rows || e.dst < 0 || e.dst >= rows) throw ShapeError("neighbor_sum: edge out of range");
    out.row(e.dst) += H.row(e.src);
  }
  Var y = push(std::move(out), any_grad({h, eps}));
  if (nodes_[y.id].needs_grad) {
    const std::vector<Edge>* edge_list = &edges;
    nodes_[y.id].backward = [this, h, eps, y, edge_list] {
      const auto& dy = nodes_[y.id].grad;
      if (nodes_[h.id].needs_grad) {
        Matrix<T> dh = (T(1) + value(eps)(0, 0)) * dy;
        for (const Edge& e : *edge_list) dh.row(e.src) += dy.row(e.dst);
        accumulate(h, dh);
      }
      if (nodes_[eps.id].needs_grad) {
        Matrix<T> de(1, 1);
        de(0, 0) = (dy.array() * value(h).array()).sum();
        accumulate(eps, de);
      }
    };
  }
  return y;
}

template <typename T>
Var Tape<T>::layer_norm(Var x, Var gamma, Var beta, T epsilon) {
  const auto& X = value(x);
  const auto C = X.cols();
  if (value(gamma).cols() != C || value(beta).cols() != C) throw ShapeError("layer_norm: width mismatch");
  Matrix<T> xhat(X.rows(), C);
  Matrix<T> inv_std(X.rows(), 1);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    T mu = X.row(r).mean();
    T var = (X.row(r).array() - mu).square().mean();
    inv_std(r, 0) = T(1) / std::sqrt(var + epsilon);
    xhat.row(r) = (X.row(r).array() - mu) * inv_std(r, 0);
  }
  Matrix<T> out = (xhat.array().rowwise() * value(gamma).row(0).array()).rowwise() + value(beta).row(0).array();
  Var y = push(std::move(out), any_grad({x, gamma, beta}));
  if (nodes_[y.id].needs_grad) {
    nodes_[y.id].backward = [this, x, gamma, beta, y, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
      const auto& dy = nodes_[y.id].grad;
      if (nodes_[gamma.id].needs_grad) accumulate_expr(gamma, (dy.array() * xhat.array()).matrix().colwise().sum());
      if (nodes_[beta.id].needs_grad) accumulate_expr(beta, dy.colwise().sum());
      if (nodes_[x.id].needs_grad) {
        Matrix<T> dxhat = (dy.array().rowwise() * value(gamma).row(0).array()).matrix();
        Matrix<T> dx(dy.rows(), dy.cols());
        for (Eigen::Index r = 0; r < dy.rows(); ++r) {
          T mean_d = dxhat.row(r).mean();
          T mean_dx = (dxhat.row(r).array() * xhat.row(r).array()).mean();
          dx.row(r) = inv_std(r, 0) * (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx);
        }
        accumulate(x, dx);
      }
    };
  }
  return y;
}

template <typename T>
Var Tape<T>::batch_norm(Var x, Var gamma, Var beta, const NormStats<T>& running, bool train,
                        NormStats<T>* update, T momentum, T epsilon) {
  const auto& X = value(x);
  const auto N = X.rows();
  const auto C = X.cols();
  if (value(gamma).cols() != C || value(beta).cols() != C) throw ShapeError("batch_norm: width mismatch");
  Matrix<T> mu, inv_std;
  if (train) {
    if (N < 1) throw ShapeError("batch_norm: empty batch");
    mu = X.colwise().mean();
    Matrix<T> centered = X.rowwise() - mu.row(0);
    Matrix<T> var = centered.array().square().colwise().mean().matrix();
    inv_std = (var.array() + epsilon).rsqrt().matrix();
    if (update) {
      T unbias = N > 1 ? T(N) / T(N - 1) : T(1);
      update->mean = momentum * running.mean + (T(1) - momentum) * mu;
      update->var = momentum * running.var + (T(1) - momentum) * unbias * var;
    }
  } else {
    mu = running.mean;
    inv_std = (running.var.array() + epsilon).rsqrt().matrix();
  }
  Matrix<T> xhat = ((X.rowwise() - mu.row(0)).array().rowwise() * inv_std.row(0).array()).matrix();
  Matrix<T> out = (xhat.array().rowwise() * value(gamma).row(0).array()).rowwise() + value(beta).row(0).array();
  Var y = push(std::move(out), any_grad({x, gamma, beta}));
  if (nodes_[y.id].needs_grad) {
    nodes_[y.id].backward = [this, x, gamma, beta, y, train, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
      const auto& dy = nodes_[y.id].grad;
      if (nodes_[gamma.id].needs_grad) accumulate_expr(gamma, (dy.array() * xhat.array()).matrix().colwise().sum());
      if (nodes_[beta.id].needs_grad) accumulate_expr(beta, dy.colwise().sum());
      if (nodes_[x.id].needs_grad) {
        Matrix<T> dxhat = (dy.array().rowwise() * value(gamma).row(0).array()).matrix();
        if (train) {
          Matrix<T> mean_d = dxhat.colwise().mean();
          Matrix<T> mean_dx = (dxhat.array() * xhat.array()).colwise().mean().matrix();
          Matrix<T> dx = (((dxhat.rowwise() - mean_d.row(0)).array() - xhat.array().rowwise() * mean_dx.row(0).array())
                              .rowwise() *
                          inv_std.row(0).array())
                             .matrix();
          accumulate(x, dx);
        } else {
          accumulate_expr(x, (dxhat.array().rowwise() * inv_std.row(0).array()).matrix());
        }
      }
    };
  }
  return y;
}

template <typename T>
Var Tape<T>::dropout(Var x, T rate, Rng* rng) {
  if (rate <= T(0) || rng == nullptr) return x;
  if (rate >= T(1)) throw ParameterError("dropout rate must be < 1");
  const auto& X = value(x);
  Matrix<T> mask(X.rows(), X.cols());
  std::bernoulli_distribution keep(1.0 - static_cast<double>(rate));
  const T scale = T(1) / (T(1) - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? scale : T(0);
  Matrix<T> out = (X.array() * mask.array()).matrix();
  Var y = push(std::move(out), any_grad({x}));
  if (nodes_[y.id].needs_grad) {
    nodes_[y.id].backward = [this, x, y, mask = std::move(mask)] {
      accumulate_expr(x, (nodes_[y.id].grad.array() * mask.array()).matrix());
    };
  }
  return y;
}

template <typename T>
Var Tape<T>::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  const auto rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  bool grad = false;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw ShapeError("concat_cols: row mismatch");
    cols += value(p).cols();
    grad = grad || (record_ && nodes_[p.id].needs_grad);
  }
  Matrix<T> out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleCols(at, value(p).cols()) = value(p);
    at += value(p).cols();
  }
  Var y = push(std::move(out), grad);
  if (nodes_[y.id].needs_grad) {
    std::vector<Var> inputs(parts.begin(), parts.end());
    nodes_[y.id].backward = [this, inputs, y] {
      const auto& dy = nodes_[y.id].grad;
      Eigen::Index at = 0;
      for (Var p : inputs) {
        auto w = value(p).cols();
        if (nodes_[p.id].needs_grad) accumulate_expr(p, dy.middleCols(at, w));
        at += w;
      }
    };
  }
  return y;
}

template <typename T>
Var Tape<T>::segment_log_softmax(Var x, const std::vector<int>& offsets) {
  const auto& X = value(x);
  if (X.cols() != 1) throw ShapeError("segment_log_softmax: expects a column vector");
  if (offsets.empty() || offsets.back() != X.rows()) throw ShapeError("segment_log_softmax: offsets do not cover input");
  Matrix<T> out(X.rows(), 1);
  for (size_t g = 0; g + 1 < offsets.size(); ++g) {
    auto seg = X.col(0).segment(offsets[g], offsets[g + 1] - offsets[g]);
    T mx = seg.maxCoeff();
    T lse = mx + std::log((seg.array() - mx).exp().sum());
    out.col(0).segment(offsets[g], seg.size()) = seg.array() - lse;
  }
  Var y = push(std::move(out), any_grad({x}));
  if (nodes_[y.id].needs_grad) {
    std::vector<int> offs = offsets;
    nodes_[y.id].backward = [this, x, y, offs] {
      const auto& dy = nodes_[y.id].grad;
      const auto& Y = value(y);
      Matrix<T> dx(dy.rows(), 1);
      for (size_t g = 0; g + 1 < offs.size(); ++g) {
        auto len = offs[g + 1] - offs[g];
        T total = dy.col(0).segment(offs[g], len).sum();
        dx.col(0).segment(offs[g], len) =
            dy.col(0).segment(offs[g], len).array() - Y.col(0).segment(offs[g], len).array().exp() * total;
      }
      accumulate(x, dx);
    };
  }
  return y;
}

template <typename T>
Var Tape<T>::segment_mean(Var x, const std::vector<int>& offsets) {
  const auto& X = value(x);
  if (X.cols() != 1) throw ShapeError("segment_mean: expects a column vector");
  if (offsets.empty() || offsets.back() != X.rows()) throw ShapeError("segment_mean: offsets do not cover input");
  const auto groups = static_cast<Eigen::Index>(offsets.size()) - 1;
  Matrix<T> out(groups, 1);
  for (Eigen::Index g = 0; g < groups; ++g) {
    auto len = offsets[g + 1] - offsets[g];
    if (len <= 0) throw ShapeError("segment_mean: empty segment");
    out(g, 0) = X.col(0).segment(offsets[g], len).mean();
  }
  Var y = push(std::move(out), any_grad({x}));
  if (nodes_[y.id].needs_grad) {
    std::vector<int> offs = offsets;
    nodes_[y.id].backward = [this, x, y, offs] {
      const auto& dy = nodes_[y.id].grad;
      Matrix<T> dx(offs.back(), 1);
      for (size_t g = 0; g + 1 < offs.size(); ++g) {
        auto len = offs[g + 1] - offs[g];
        dx.col(0).segment(offs[g], len).setConstant(dy(static_cast<Eigen::Index>(g), 0) / T(len));
      }
      accumulate(x, dx);
    };
  }
  return y;
}

template <typename T>
Var Tape<T>::mean_squared_error(Var v, const Matrix<T>& target) {
  const auto& V = value(v);
  if (V.rows() != target.rows() || V.cols() != target.cols()) throw ShapeError("mean_squared_error: target shape mismatch");
  Matrix<T> out(1, 1);
  out(0, 0) = (target - V).array().square().sum() / T(V.rows());
  Var y = push(std::move(out), any_grad({v}));
  if (nodes_[y.id].needs_grad) {
    Matrix<T> tgt = target;
    nodes_[y.id].backward = [this, v, y, tgt] {
      T scale = nodes_[y.id].grad(0, 0) * T(-2) / T(tgt.rows());
      accumulate_expr(v, scale * (tgt - value(v)));
    };
  }
  return y;
}

template <typename T>
Var Tape<T>::weighted_neg_sum(Var x, const Matrix<T>& weights, int groups) {
  const auto& X = value(x);
  if (X.rows() != weights.rows() || X.cols() != weights.cols()) throw ShapeError("weighted_neg_sum: weight shape mismatch");
  if (groups <= 0) throw ShapeError("weighted_neg_sum: groups must be positive");
  Matrix<T> out(1, 1);
  out(0, 0) = -(X.array() * weights.array()).sum() / T(groups);
  Var y = push(std::move(out), any_grad({x}));
  if (nodes_[y.id].needs_grad) {
    Matrix<T> w = weights;
    nodes_[y.id].backward = [this, x, y, w, groups] {
      accumulate_expr(x, (-nodes_[y.id].grad(0, 0) / T(groups)) * w);
    };
  }
  return y;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace saz::nn
