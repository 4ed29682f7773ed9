#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "hopwise/graph_store.hpp"
#include "hopwise/rng.hpp"

namespace hopwise {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Layer embeddings e^(0)..e^(n_max) for every node, rows in the graph's
/// global numbering. layers[0] is a snapshot of the learnable layer-0 matrix.
struct EmbeddingTable {
  std::uint32_t dim = 0;
  std::uint32_t n_max = 0;
  std::uint32_t n_users = 0;
  std::uint32_t n_items = 0;
  std::vector<Matrix> layers;

  std::uint32_t row(NodeId node) const {
    switch (node.kind) {
      case NodeKind::User: return node.index;
      case NodeKind::Item: return n_users + node.index;
      case NodeKind::Entity: return n_users + n_items + node.index;
    }
    return 0;
  }
  const Matrix& layer(std::uint32_t n) const { return layers.at(n); }
};

enum class PoolingMode : std::uint8_t { Sum = 0, Concat = 1 };

/// Layer weights lambda_0..lambda_{n_max}. Sum pooling renormalizes the
/// weights over the used range 0..action; Concat ignores them.
struct PoolingSpec {
  PoolingMode mode = PoolingMode::Sum;
  std::vector<double> weights;

  static PoolingSpec uniform(std::uint32_t n_max, PoolingMode mode = PoolingMode::Sum);

  std::uint32_t n_max() const { return static_cast<std::uint32_t>(weights.size()) - 1; }
  /// Effective Sum-mode weights for layers 0..action.
  std::vector<double> weights_for(std::uint32_t action) const;
  std::uint32_t output_dim(std::uint32_t dim) const {
    return mode == PoolingMode::Sum ? dim : (n_max() + 1) * dim;
  }
};

struct AdamState {
  Matrix m;
  Matrix v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void reset(Eigen::Index rows, Eigen::Index cols) {
    m = Matrix::Zero(rows, cols);
    v = Matrix::Zero(rows, cols);
    step = 0;
  }
  /// One bias-corrected Adam update of `param` along `grad`.
  void apply(Matrix& param, const Matrix& grad, double lr);
};

/// theta_gnn: the learnable layer-0 embeddings and their optimizer.
struct GnnParams {
  Matrix layer0;
  AdamState adam;
  double lr = 1e-3;
  double l2 = 1e-5;

  /// i.i.d. N(0, init_std^2) rows, Adam state zeroed.
  static GnnParams init(std::uint32_t n_nodes, std::uint32_t dim, Rng& rng, double init_std = 0.1);
};

/// Symmetric-normalized aggregation to depth n_max. Isolated nodes are zero
/// for every layer past 0.
EmbeddingTable propagate(const Graph& graph, const Matrix& layer0, std::uint32_t n_max);
inline EmbeddingTable propagate(const Graph& graph, const GnnParams& params, std::uint32_t n_max) {
  return propagate(graph, params.layer0, n_max);
}

/// One application of the normalized adjacency: out_x = sum_j in N_x in_j / sqrt(d_x d_j).
void aggregate(const Graph& graph, const Matrix& in, Matrix& out);

/// Final embedding of a node pooled up to `action` layers.
Vector pool(const EmbeddingTable& table, NodeId node, std::uint32_t action, const PoolingSpec& spec);

/// Dot product; throws ContractViolation on dimension mismatch.
double score(const Vector& a, const Vector& b);

struct NodeAction {
  NodeId node;
  std::uint32_t action = 1;
};

struct BprSample {
  NodeAction anchor;
  NodeAction positive;
  NodeAction negative;
};

/// sum_k -ln sigmoid(s(a,p) - s(a,n)) + l2/2 * sum_k (|e0_a|^2 + |e0_p|^2 + |e0_n|^2).
double bpr_loss(const EmbeddingTable& table, std::span<const BprSample> samples,
                const PoolingSpec& spec, double l2);

/// Analytic gradient of bpr_loss w.r.t. layer 0, back through pooling and
/// propagation.
Matrix bpr_gradient(const Graph& graph, const EmbeddingTable& table,
                    std::span<const BprSample> samples, const PoolingSpec& spec, double l2);

/// Evaluates the loss, applies one Adam step to params.layer0 and returns the
/// pre-update loss. `table` must be the propagation of the current layer 0;
/// callers re-propagate afterwards. Empty input is a no-op returning 0.
double bpr_step(const Graph& graph, GnnParams& params, const EmbeddingTable& table,
                std::span<const BprSample> samples, const PoolingSpec& spec);

bool all_finite(const Matrix& m);

}  // namespace hopwise
