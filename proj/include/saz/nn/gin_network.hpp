#pragma once

#include <memory>
#include <vector>

#include "saz/graph/board_graph.hpp"
#include "saz/nn/tape.hpp"

namespace saz::nn {

struct ArchConfig {
  int embed_dim = 512;
  int num_layers = 3;
  double dropout = 0.3;
  bool learnable_eps = false;
  double bn_momentum = 0.9;

  bool operator==(const ArchConfig&) const = default;
};

// Several graphs packed node-wise; node ids in `edges` are global and never
// cross graph boundaries.
struct GraphBatch {
  std::vector<float> features;
  std::vector<Edge> edges;
  std::vector<int> offsets;     // size num_graphs + 1
  std::vector<int> dummies;     // global node id of each graph's dummy
  std::vector<int> membership;  // graph id of every node

  int num_graphs() const { return static_cast<int>(offsets.size()) - 1; }
  int num_nodes() const { return offsets.empty() ? 0 : offsets.back(); }

  static GraphBatch pack(std::span<const BoardGraph* const> graphs);
  static GraphBatch pack(const std::vector<BoardGraph>& graphs);
  static GraphBatch single(const BoardGraph& g) { return pack(std::vector<BoardGraph>{g}); }
};

template <typename T>
struct NetOutput {
  std::vector<T> log_policy;  // per node, normalised within each graph
  std::vector<T> value;       // per graph
  std::vector<int> offsets;
};

// Training targets aligned with a GraphBatch.
template <typename T>
struct Targets {
  std::vector<T> pi;  // per node; sums to 1 within each graph
  std::vector<T> z;   // per graph
};

template <typename T>
struct LossParts {
  T total = 0;
  T value = 0;
  T policy = 0;
};

template <typename T>
struct Linear {
  Parameter<T> weight;  // in x out
  Parameter<T> bias;    // 1 x out
};

template <typename T>
struct BatchNorm {
  Parameter<T> gamma;
  Parameter<T> beta;
  NormStats<T> running;
};

// One GIN update: LayerNorm(ReLU(MLP((1 + eps) h_k + sum_{j in N(k)} h_j)))
// with MLP = affine -> ReLU -> affine.
template <typename T>
struct GinLayer {
  Parameter<T> eps;  // 1x1
  Linear<T> mlp_in;
  Linear<T> mlp_out;
  Parameter<T> norm_gamma;
  Parameter<T> norm_beta;
  bool normalize = true;
};

template <typename T>
Var gin_layer_forward(Tape<T>& tape, Var h, const std::vector<Edge>& edges, GinLayer<T>& layer);
template <typename T>
Matrix<T> gin_layer_forward(const Matrix<T>& h, const std::vector<Edge>& edges, const GinLayer<T>& layer);

// Two-headed GIN: GIN layers, skip concatenation [h0, h1, .., hL], a trunk of
// two affine+batch-norm+ReLU+dropout stages, a per-node policy logit with
// per-graph log-softmax, and a per-node value scalar mean-pooled then tanh.
template <typename T>
class GinNetwork {
 public:
  GinNetwork() = default;
  GinNetwork(const ArchConfig& arch, Rng& rng);

  const ArchConfig& arch() const { return arch_; }
  int input_dim() const { return 1; }
  int trunk_input_dim() const { return 1 + arch_.num_layers * arch_.embed_dim; }

  // Eval-mode inference; read-only and safe to share across threads.
  NetOutput<T> evaluate(const GraphBatch& batch) const;
  // In train mode batch statistics are used and running statistics are
  // updated; dropout draws from `rng` when given.
  NetOutput<T> forward(const GraphBatch& batch, bool train_mode, Rng* rng = nullptr);

  // Loss only (no gradients, running statistics untouched).
  LossParts<T> loss(const GraphBatch& batch, const Targets<T>& targets, bool train_mode, Rng* rng = nullptr) const;
  // Zeroes gradients, runs a train-mode forward and backward, leaves the
  // gradient in every Parameter::grad. `update_stats` controls whether the
  // batch-norm running statistics move.
  LossParts<T> loss_and_grad(const GraphBatch& batch, const Targets<T>& targets, Rng* rng = nullptr,
                             bool update_stats = true);

  // Trunk input [h0, h1, .., hL] per node of `g`, eval mode.
  Matrix<T> embeddings(const BoardGraph& g) const;

  std::vector<Parameter<T>*> parameters();
  std::vector<const Parameter<T>*> parameters() const;
  // Named non-trainable buffers (batch-norm running statistics).
  std::vector<std::pair<std::string, Matrix<T>*>> buffers();
  std::vector<std::pair<std::string, const Matrix<T>*>> buffers() const;

  void zero_grad();

  template <typename U>
  GinNetwork<U> cast() const;

  std::vector<GinLayer<T>>& layers() { return layers_; }
  Linear<T>& policy_head() { return policy_; }
  Linear<T>& value_head() { return value_; }

 private:
  template <typename U>
  friend class GinNetwork;

  struct Graph {
    Var log_policy;
    Var value;
    Var embeddings;
  };
  template <typename Net>
  static Graph build(Net& net, Tape<T>& tape, const GraphBatch& batch, const Matrix<T>& input, bool train,
                     Rng* rng, bool update_stats);
  static void check_batch(const GraphBatch& batch);
  static Targets<T> check_targets(const GraphBatch& batch, const Targets<T>& targets);

  ArchConfig arch_;
  std::vector<GinLayer<T>> layers_;
  Linear<T> fc1_, fc2_;
  BatchNorm<T> bn1_, bn2_;
  Linear<T> policy_, value_;
};

extern template class GinNetwork<float>;
extern template class GinNetwork<double>;

using Network = GinNetwork<float>;

}  // namespace saz::nn
