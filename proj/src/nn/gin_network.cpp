#include "saz/nn/gin_network.hpp"

#include <cmath>
#include <type_traits>

#include "saz/errors.hpp"

namespace saz::nn {
namespace {

template <typename T>
Parameter<T> make_param(std::string name, int rows, int cols, double bound, Rng& rng) {
  Parameter<T> p;
  p.name = std::move(name);
  p.value.resize(rows, cols);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<T>(dist(rng));
  p.zero_grad();
  return p;
}

template <typename T>
Parameter<T> make_const_param(std::string name, int rows, int cols, T fill) {
  Parameter<T> p;
  p.name = std::move(name);
  p.value = Matrix<T>::Constant(rows, cols, fill);
  p.zero_grad();
  return p;
}

template <typename T>
Linear<T> make_linear(const std::string& name, int in, int out, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(in));
  return {make_param<T>(name + ".weight", in, out, bound, rng), make_param<T>(name + ".bias", 1, out, bound, rng)};
}

template <typename T>
BatchNorm<T> make_batch_norm(const std::string& name, int width) {
  BatchNorm<T> bn{make_const_param<T>(name + ".weight", 1, width, T(1)),
                  make_const_param<T>(name + ".bias", 1, width, T(0)),
                  {}};
  bn.running.mean = Matrix<T>::Zero(1, width);
  bn.running.var = Matrix<T>::Ones(1, width);
  return bn;
}

template <typename T, typename L, typename Bind>
Var affine(Tape<T>& tape, Var x, L& layer, Bind&& bind) {
  return tape.add_row(tape.matmul(x, bind(layer.weight)), bind(layer.bias));
}

template <typename T, typename Layer, typename Bind>
Var layer_forward(Tape<T>& tape, Var h, const std::vector<Edge>& edges, Layer& layer, Bind&& bind) {
  if (tape.value(h).cols() != layer.mlp_in.weight.value.rows())
    throw ShapeError("gin layer expects width " + std::to_string(layer.mlp_in.weight.value.rows()) + ", got " +
                     std::to_string(tape.value(h).cols()));
  Var agg = tape.neighbor_sum(h, edges, bind(layer.eps));
  Var hidden = tape.relu(affine(tape, agg, layer.mlp_in, bind));
  Var out = tape.relu(affine(tape, hidden, layer.mlp_out, bind));
  if (layer.normalize) out = tape.layer_norm(out, bind(layer.norm_gamma), bind(layer.norm_beta));
  return out;
}

template <typename T>
Matrix<T> to_matrix(const std::vector<float>& features) {
  Matrix<T> m(static_cast<Eigen::Index>(features.size()), 1);
  for (size_t i = 0; i < features.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = static_cast<T>(features[i]);
  return m;
}

template <typename T>
std::vector<T> column(const Matrix<T>& m) {
  return std::vector<T>(m.data(), m.data() + m.size());
}

template <typename U, typename T>
Parameter<U> cast_param(const Parameter<T>& p) {
  Parameter<U> q;
  q.name = p.name;
  q.value = p.value.template cast<U>();
  q.trainable = p.trainable;
  q.zero_grad();
  return q;
}

template <typename U, typename T>
Linear<U> cast_linear(const Linear<T>& l) {
  return {cast_param<U>(l.weight), cast_param<U>(l.bias)};
}

template <typename U, typename T>
BatchNorm<U> cast_bn(const BatchNorm<T>& b) {
  return {cast_param<U>(b.gamma), cast_param<U>(b.beta),
          {b.running.mean.template cast<U>(), b.running.var.template cast<U>()}};
}

}  // namespace

GraphBatch GraphBatch::pack(std::span<const BoardGraph* const> graphs) {
  GraphBatch b;
  b.offsets.push_back(0);
  size_t nodes = 0, edges = 0;
  for (const BoardGraph* g : graphs) {
    nodes += g->num_nodes;
    edges += g->edges.size();
  }
  b.features.reserve(nodes);
  b.edges.reserve(edges);
  b.membership.reserve(nodes);
  int graph_id = 0;
  for (const BoardGraph* g : graphs) {
    if (static_cast<int>(g->features.size()) != g->num_nodes) throw ShapeError("graph feature count mismatch");
    const int base = b.offsets.back();
    b.features.insert(b.features.end(), g->features.begin(), g->features.end());
    for (const Edge& e : g->edges) b.edges.push_back({e.src + base, e.dst + base});
    b.dummies.push_back(base + g->dummy_index);
    b.membership.insert(b.membership.end(), g->num_nodes, graph_id++);
    b.offsets.push_back(base + g->num_nodes);
  }
  return b;
}

GraphBatch GraphBatch::pack(const std::vector<BoardGraph>& graphs) {
  std::vector<const BoardGraph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const auto& g : graphs) ptrs.push_back(&g);
  return pack(std::span<const BoardGraph* const>(ptrs));
}

template <typename T>
Var gin_layer_forward(Tape<T>& tape, Var h, const std::vector<Edge>& edges, GinLayer<T>& layer) {
  return layer_forward(tape, h, edges, layer, [&](Parameter<T>& p) { return tape.parameter(p); });
}

template <typename T>
Matrix<T> gin_layer_forward(const Matrix<T>& h, const std::vector<Edge>& edges, const GinLayer<T>& layer) {
  Tape<T> tape(false);
  Var in = tape.constant_ref(h);
  Var out = layer_forward(tape, in, edges, layer, [&](const Parameter<T>& p) { return tape.constant_ref(p.value); });
  return tape.value(out);
}

template <typename T>
GinNetwork<T>::GinNetwork(const ArchConfig& arch, Rng& rng) : arch_(arch) {
  if (arch.embed_dim < 1) throw ParameterError("embed_dim must be positive");
  if (arch.num_layers < 1) throw ParameterError("num_layers must be positive");
  if (arch.dropout < 0 || arch.dropout >= 1) throw ParameterError("dropout must be in [0, 1)");
  const int E = arch.embed_dim;
  for (int i = 0; i < arch.num_layers; ++i) {
    const std::string prefix = "gin." + std::to_string(i);
    GinLayer<T> layer;
    layer.eps = make_const_param<T>(prefix + ".eps", 1, 1, T(0));
    layer.eps.trainable = arch.learnable_eps;
    layer.mlp_in = make_linear<T>(prefix + ".mlp.0", i == 0 ? input_dim() : E, E, rng);
    layer.mlp_out = make_linear<T>(prefix + ".mlp.1", E, E, rng);
    layer.norm_gamma = make_const_param<T>(prefix + ".norm.weight", 1, E, T(1));
    layer.norm_beta = make_const_param<T>(prefix + ".norm.bias", 1, E, T(0));
    layers_.push_back(std::move(layer));
  }
  fc1_ = make_linear<T>("trunk.fc1", trunk_input_dim(), E, rng);
  bn1_ = make_batch_norm<T>("trunk.bn1", E);
  fc2_ = make_linear<T>("trunk.fc2", E, E, rng);
  bn2_ = make_batch_norm<T>("trunk.bn2", E);
  policy_ = make_linear<T>("policy", E, 1, rng);
  value_ = make_linear<T>("value", E, 1, rng);
}

template <typename T>
void GinNetwork<T>::check_batch(const GraphBatch& batch) {
  if (batch.num_graphs() < 1) throw ShapeError("empty graph batch");
  if (static_cast<int>(batch.features.size()) != batch.num_nodes()) throw ShapeError("feature count != node count");
  if (static_cast<int>(batch.membership.size()) != batch.num_nodes()) throw ShapeError("membership size != node count");
  for (const Edge& e : batch.edges) {
    if (e.src < 0 || e.src >= batch.num_nodes() || e.dst < 0 || e.dst >= batch.num_nodes())
      throw ShapeError("edge endpoint out of range");
    if (batch.membership[e.src] != batch.membership[e.dst]) throw ShapeError("edge crosses graphs");
  }
}

template <typename T>
template <typename Net>
typename GinNetwork<T>::Graph GinNetwork<T>::build(Net& net, Tape<T>& tape, const GraphBatch& batch,
                                                   const Matrix<T>& input, bool train, Rng* rng, bool update_stats) {
  auto bind = [&](auto& p) -> Var {
    if constexpr (std::is_const_v<Net>)
      return tape.constant_ref(p.value);
    else
      return tape.parameter(p);
  };
  const T momentum = static_cast<T>(net.arch_.bn_momentum);
  const T rate = static_cast<T>(net.arch_.dropout);

  Var h = tape.constant_ref(input);
  std::vector<Var> reps{h};
  for (auto& layer : net.layers_) {
    h = layer_forward(tape, h, batch.edges, layer, bind);
    reps.push_back(h);
  }
  Graph out;
  out.embeddings = tape.concat_cols(reps);

  auto stage = [&](Var x, auto& fc, auto& bn) {
    NormStats<T> fresh;
    const bool update = train && update_stats && !std::is_const_v<Net>;
    Var y = tape.batch_norm(affine(tape, x, fc, bind), bind(bn.gamma), bind(bn.beta), bn.running, train,
                            update ? &fresh : nullptr, momentum);
    if constexpr (!std::is_const_v<Net>) {
      if (update) bn.running = std::move(fresh);
    }
    y = tape.relu(y);
    return train ? tape.dropout(y, rate, rng) : y;
  };
  Var t = stage(out.embeddings, net.fc1_, net.bn1_);
  t = stage(t, net.fc2_, net.bn2_);

  out.log_policy = tape.segment_log_softmax(affine(tape, t, net.policy_, bind), batch.offsets);
  out.value = tape.tanh(tape.segment_mean(affine(tape, t, net.value_, bind), batch.offsets));
  return out;
}

template <typename T>
NetOutput<T> GinNetwork<T>::evaluate(const GraphBatch& batch) const {
  check_batch(batch);
  Tape<T> tape(false);
  Matrix<T> input = to_matrix<T>(batch.features);
  auto g = build(*this, tape, batch, input, false, nullptr, false);
  return {column(tape.value(g.log_policy)), column(tape.value(g.value)), batch.offsets};
}

template <typename T>
NetOutput<T> GinNetwork<T>::forward(const GraphBatch& batch, bool train_mode, Rng* rng) {
  if (!train_mode) return evaluate(batch);
  check_batch(batch);
  Tape<T> tape(false);
  Matrix<T> input = to_matrix<T>(batch.features);
  auto g = build(*this, tape, batch, input, true, rng, true);
  return {column(tape.value(g.log_policy)), column(tape.value(g.value)), batch.offsets};
}

template <typename T>
Targets<T> GinNetwork<T>::check_targets(const GraphBatch& batch, const Targets<T>& targets) {
  if (static_cast<int>(targets.pi.size()) != batch.num_nodes())
    throw ShapeError("policy target has " + std::to_string(targets.pi.size()) + " entries for " +
                     std::to_string(batch.num_nodes()) + " nodes");
  if (static_cast<int>(targets.z.size()) != batch.num_graphs())
    throw ShapeError("value target has " + std::to_string(targets.z.size()) + " entries for " +
                     std::to_string(batch.num_graphs()) + " graphs");
  return targets;
}

template <typename T>
LossParts<T> GinNetwork<T>::loss(const GraphBatch& batch, const Targets<T>& targets, bool train_mode, Rng* rng) const {
  check_batch(batch);
  check_targets(batch, targets);
  Tape<T> tape(false);
  Matrix<T> input = to_matrix<T>(batch.features);
  auto g = build(*this, tape, batch, input, train_mode, rng, false);
  Matrix<T> z = Eigen::Map<const Matrix<T>>(targets.z.data(), batch.num_graphs(), 1);
  Matrix<T> pi = Eigen::Map<const Matrix<T>>(targets.pi.data(), batch.num_nodes(), 1);
  Var v = tape.mean_squared_error(g.value, z);
  Var p = tape.weighted_neg_sum(g.log_policy, pi, batch.num_graphs());
  LossParts<T> parts;
  parts.value = tape.value(v)(0, 0);
  parts.policy = tape.value(p)(0, 0);
  parts.total = parts.value + parts.policy;
  return parts;
}

template <typename T>
LossParts<T> GinNetwork<T>::loss_and_grad(const GraphBatch& batch, const Targets<T>& targets, Rng* rng,
                                          bool update_stats) {
  check_batch(batch);
  check_targets(batch, targets);
  zero_grad();
  Tape<T> tape(true);
  Matrix<T> input = to_matrix<T>(batch.features);
  auto g = build(*this, tape, batch, input, true, rng, update_stats);
  Matrix<T> z = Eigen::Map<const Matrix<T>>(targets.z.data(), batch.num_graphs(), 1);
  Matrix<T> pi = Eigen::Map<const Matrix<T>>(targets.pi.data(), batch.num_nodes(), 1);
  Var v = tape.mean_squared_error(g.value, z);
  Var p = tape.weighted_neg_sum(g.log_policy, pi, batch.num_graphs());
  Var total = tape.add(v, p);
  tape.backward(total);
  return {tape.value(total)(0, 0), tape.value(v)(0, 0), tape.value(p)(0, 0)};
}

template <typename T>
Matrix<T> GinNetwork<T>::embeddings(const BoardGraph& g) const {
  GraphBatch batch = GraphBatch::single(g);
  check_batch(batch);
  Tape<T> tape(false);
  Matrix<T> input = to_matrix<T>(batch.features);
  auto out = build(*this, tape, batch, input, false, nullptr, false);
  return tape.value(out.embeddings);
}

template <typename T>
std::vector<Parameter<T>*> GinNetwork<T>::parameters() {
  std::vector<Parameter<T>*> ps;
  for (auto& l : layers_) {
    for (auto* p : {&l.eps, &l.mlp_in.weight, &l.mlp_in.bias, &l.mlp_out.weight, &l.mlp_out.bias, &l.norm_gamma,
                    &l.norm_beta})
      ps.push_back(p);
  }
  for (auto* p : {&fc1_.weight, &fc1_.bias, &bn1_.gamma, &bn1_.beta, &fc2_.weight, &fc2_.bias, &bn2_.gamma,
                  &bn2_.beta, &policy_.weight, &policy_.bias, &value_.weight, &value_.bias})
    ps.push_back(p);
  return ps;
}

template <typename T>
std::vector<const Parameter<T>*> GinNetwork<T>::parameters() const {
  auto ps = const_cast<GinNetwork*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

template <typename T>
std::vector<std::pair<std::string, Matrix<T>*>> GinNetwork<T>::buffers() {
  return {{"trunk.bn1.running_mean", &bn1_.running.mean},
          {"trunk.bn1.running_var", &bn1_.running.var},
          {"trunk.bn2.running_mean", &bn2_.running.mean},
          {"trunk.bn2.running_var", &bn2_.running.var}};
}

template <typename T>
std::vector<std::pair<std::string, const Matrix<T>*>> GinNetwork<T>::buffers() const {
  auto bs = const_cast<GinNetwork*>(this)->buffers();
  std::vector<std::pair<std::string, const Matrix<T>*>> out;
  for (auto& [name, m] : bs) out.emplace_back(name, m);
  return out;
}

template <typename T>
void GinNetwork<T>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename T>
template <typename U>
GinNetwork<U> GinNetwork<T>::cast() const {
  GinNetwork<U> out;
  out.arch_ = arch_;
  for (const auto& l : layers_) {
    GinLayer<U> m;
    m.eps = cast_param<U>(l.eps);
    m.mlp_in = cast_linear<U>(l.mlp_in);
    m.mlp_out = cast_linear<U>(l.mlp_out);
    m.norm_gamma = cast_param<U>(l.norm_gamma);
    m.norm_beta = cast_param<U>(l.norm_beta);
    m.normalize = l.normalize;
    out.layers_.push_back(std::move(m));
  }
  out.fc1_ = cast_linear<U>(fc1_);
  out.fc2_ = cast_linear<U>(fc2_);
  out.bn1_ = cast_bn<U>(bn1_);
  out.bn2_ = cast_bn<U>(bn2_);
  out.policy_ = cast_linear<U>(policy_);
  out.value_ = cast_linear<U>(value_);
  return out;
}

template class GinNetwork<float>;
template class GinNetwork<double>;
template GinNetwork<double> GinNetwork<float>::cast<double>() const;
template GinNetwork<float> GinNetwork<double>::cast<float>() const;

template Var gin_layer_forward<float>(Tape<float>&, Var, const std::vector<Edge>&, GinLayer<float>&);
template Var gin_layer_forward<double>(Tape<double>&, Var, const std::vector<Edge>&, GinLayer<double>&);
template Matrix<float> gin_layer_forward<float>(const Matrix<float>&, const std::vector<Edge>&,
                                                const GinLayer<float>&);
template Matrix<double> gin_layer_forward<double>(const Matrix<double>&, const std::vector<Edge>&,
                                                  const GinLayer<double>&);

}  // namespace saz::nn
