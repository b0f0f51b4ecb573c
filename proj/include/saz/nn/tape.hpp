#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "saz/game/board.hpp"
#include "saz/graph/board_graph.hpp"

namespace saz::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
  bool trainable = true;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Running statistics of a batch-norm layer.
template <typename T>
struct NormStats {
  Matrix<T> mean;  // 1 x C
  Matrix<T> var;   // 1 x C
};

struct Var {
  int id = -1;
};

// Reverse-mode differentiation tape over row-major matrices. Every op records
// a backward closure when any of its inputs needs a gradient; a tape built
// with record=false is a plain forward evaluator.
template <typename T>
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) { nodes_.reserve(64); }

  Var constant(Matrix<T> value);
  // References `value` without copying; it must outlive the tape.
  Var constant_ref(const Matrix<T>& value);
  // Gradients reaching this leaf are added to p.grad by backward().
  Var parameter(Parameter<T>& p);

  const Matrix<T>& value(Var v) const { return node_value(nodes_[v.id]); }
  // Empty matrix when no gradient reached `v`.
  const Matrix<T>& grad(Var v) const { return nodes_[v.id].grad; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // `output` must be 1x1.
  void backward(Var output);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var add_row(Var x, Var row);
  Var relu(Var x);
  Var tanh(Var x);
  // (1 + eps) * h + sum over directed edges src->dst of h[src] into row dst.
  Var neighbor_sum(Var h, const std::vector<Edge>& edges, Var eps);
  Var layer_norm(Var x, Var gamma, Var beta, T epsilon = T(1e-5));
  // Train mode normalises with batch statistics over rows and, when `stats`
  // is non-null, blends them into the running statistics with `momentum`.
  // Eval mode normalises with the running statistics.
  Var batch_norm(Var x, Var gamma, Var beta, const NormStats<T>& running, bool train,
                 NormStats<T>* update, T momentum, T epsilon = T(1e-5));
  // Inverted dropout; identity when rate == 0 or rng is null.
  Var dropout(Var x, T rate, Rng* rng);
  Var concat_cols(std::span<const Var> parts);
  // Column vector x; log-softmax within each [offsets[g], offsets[g+1]).
  Var segment_log_softmax(Var x, const std::vector<int>& offsets);
  // Column vector x -> one mean per segment.
  Var segment_mean(Var x, const std::vector<int>& offsets);
  // mean over rows of (target - v)^2, as 1x1.
  Var mean_squared_error(Var v, const Matrix<T>& target);
  // -(1/groups) * sum(weights .* x), as 1x1.
  Var weighted_neg_sum(Var x, const Matrix<T>& weights, int groups);

 private:
  struct Node {
    Matrix<T> owned;
    const Matrix<T>* ref = nullptr;
    Matrix<T> grad;
    bool needs_grad = false;
    Parameter<T>* param = nullptr;
    std::function<void()> backward;
  };

  static const Matrix<T>& node_value(const Node& n) { return n.ref ? *n.ref : n.owned; }
  Var push(Matrix<T> value, bool needs_grad);
  bool any_grad(std::initializer_list<Var> vars) const;
  void accumulate(Var v, const Matrix<T>& g);
  template <typename Expr>
  void accumulate_expr(Var v, const Expr& g);

  bool record_;
  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace saz::nn
