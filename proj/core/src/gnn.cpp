#include "hopwise/gnn.hpp"

#include <cmath>

#include "hopwise/error.hpp"

namespace hopwise {

PoolingSpec PoolingSpec::uniform(std::uint32_t n_max, PoolingMode mode) {
  return {mode, std::vector<double>(n_max + 1, 1.0)};
}

std::vector<double> PoolingSpec::weights_for(std::uint32_t action) const {
  if (action < 1 || action > n_max()) {
    throw ContractViolation("pool: action " + std::to_string(action) + " outside 1.." +
                            std::to_string(n_max()));
  }
  std::vector<double> w(weights.begin(), weights.begin() + action + 1);
  double total = 0.0;
  for (double x : w) total += x;
  if (total > 0.0)
    for (double& x : w) x /= total;
  return w;
}

void AdamState::apply(Matrix& param, const Matrix& grad, double lr) {
  if (m.rows() != param.rows() || m.cols() != param.cols()) reset(param.rows(), param.cols());
  ++step;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

GnnParams GnnParams::init(std::uint32_t n_nodes, std::uint32_t dim, Rng& rng, double init_std) {
  GnnParams p;
  p.layer0.resize(n_nodes, dim);
  for (Eigen::Index r = 0; r < p.layer0.rows(); ++r)
    for (Eigen::Index c = 0; c < p.layer0.cols(); ++c) p.layer0(r, c) = init_std * rng.normal();
  p.adam.reset(n_nodes, dim);
  return p;
}

void aggregate(const Graph& graph, const Matrix& in, Matrix& out) {
  const std::uint32_t n = graph.n_nodes();
  out.setZero(n, in.cols());
  for (std::uint32_t x = 0; x < n; ++x) {
    const auto dx = graph.degree(x);
    if (dx == 0) continue;
    const double sx = 1.0 / std::sqrt(static_cast<double>(dx));
    auto row = out.row(x);
    for (auto j : graph.neighbors(x)) {
      row += (sx / std::sqrt(static_cast<double>(graph.degree(j)))) * in.row(j);
    }
  }
}

EmbeddingTable propagate(const Graph& graph, const Matrix& layer0, std::uint32_t n_max) {
  if (layer0.rows() != graph.n_nodes()) {
    throw ContractViolation("propagate: layer0 has " + std::to_string(layer0.rows()) +
                            " rows, graph has " + std::to_string(graph.n_nodes()) + " nodes");
  }
  EmbeddingTable table;
  table.dim = static_cast<std::uint32_t>(layer0.cols());
  table.n_max = n_max;
  table.n_users = graph.n_users();
  table.n_items = graph.n_items();
  table.layers.resize(n_max + 1);
  table.layers[0] = layer0;
  for (std::uint32_t n = 0; n < n_max; ++n) aggregate(graph, table.layers[n], table.layers[n + 1]);
  return table;
}

Vector pool(const EmbeddingTable& table, NodeId node, std::uint32_t action,
            const PoolingSpec& spec) {
  if (spec.n_max() != table.n_max) throw ContractViolation("pool: spec/table depth mismatch");
  const auto row = table.row(node);
  if (spec.mode == PoolingMode::Sum) {
    const auto w = spec.weights_for(action);
    Vector out = Vector::Zero(table.dim);
    for (std::uint32_t n = 0; n <= action; ++n) out += w[n] * table.layers[n].row(row).transpose();
    return out;
  }
  spec.weights_for(action);  // range check
  Vector out = Vector::Zero(static_cast<Eigen::Index>(table.n_max + 1) * table.dim);
  for (std::uint32_t n = 0; n <= action; ++n)
    out.segment(static_cast<Eigen::Index>(n) * table.dim, table.dim) =
        table.layers[n].row(row).transpose();
  return out;
}

double score(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw ContractViolation("score: dimension mismatch " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
  return a.dot(b);
}

namespace {

// -ln sigmoid(x), stable for large |x|.
double neg_log_sigmoid(double x) {
  return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Scatter a pooled-embedding gradient into per-layer gradients.
void scatter(std::vector<Matrix>& layer_grads, const EmbeddingTable& table, NodeAction na,
             const Vector& grad, const PoolingSpec& spec) {
  const auto row = table.row(na.node);
  if (spec.mode == PoolingMode::Sum) {
    const auto w = spec.weights_for(na.action);
    for (std::uint32_t n = 0; n <= na.action; ++n)
      layer_grads[n].row(row) += w[n] * grad.transpose();
  } else {
    for (std::uint32_t n = 0; n <= na.action; ++n)
      layer_grads[n].row(row) +=
          grad.segment(static_cast<Eigen::Index>(n) * table.dim, table.dim).transpose();
  }
}

}  // namespace

double bpr_loss(const EmbeddingTable& table, std::span<const BprSample> samples,
                const PoolingSpec& spec, double l2) {
  double loss = 0.0;
  const Matrix& e0 = table.layers[0];
  for (const auto& s : samples) {
    const Vector a = pool(table, s.anchor.node, s.anchor.action, spec);
    const Vector p = pool(table, s.positive.node, s.positive.action, spec);
    const Vector n = pool(table, s.negative.node, s.negative.action, spec);
    loss += neg_log_sigmoid(score(a, p) - score(a, n));
    if (l2 > 0.0) {
      loss += 0.5 * l2 *
              (e0.row(table.row(s.anchor.node)).squaredNorm() +
               e0.row(table.row(s.positive.node)).squaredNorm() +
               e0.row(table.row(s.negative.node)).squaredNorm());
    }
  }
  return loss;
}

Matrix bpr_gradient(const Graph& graph, const EmbeddingTable& table,
                    std::span<const BprSample> samples, const PoolingSpec& spec, double l2) {
  const Eigen::Index rows = table.layers[0].rows();
  std::vector<Matrix> grads(table.n_max + 1, Matrix::Zero(rows, table.dim));
  for (const auto& s : samples) {
    const Vector a = pool(table, s.anchor.node, s.anchor.action, spec);
    const Vector p = pool(table, s.positive.node, s.positive.action, spec);
    const Vector n = pool(table, s.negative.node, s.negative.action, spec);
    // d/dx of -ln sigmoid(x)
    const double g = -sigmoid(-(score(a, p) - score(a, n)));
    scatter(grads, table, s.anchor, g * (p - n), spec);
    scatter(grads, table, s.positive, g * a, spec);
    scatter(grads, table, s.negative, -g * a, spec);
  }
  // e^(n) = A^n e^(0) with symmetric A, so dL/de0 = sum_n A^n G_n (Horner form).
  Matrix acc = std::move(grads[table.n_max]);
  Matrix tmp;
  for (std::uint32_t n = table.n_max; n-- > 0;) {
    aggregate(graph, acc, tmp);
    acc = tmp + grads[n];
  }
  if (l2 > 0.0) {
    const Matrix& e0 = table.layers[0];
    for (const auto& s : samples) {
      for (const auto& na : {s.anchor, s.positive, s.negative}) {
        const auto r = table.row(na.node);
        acc.row(r) += l2 * e0.row(r);
      }
    }
  }
  return acc;
}

double bpr_step(const Graph& graph, GnnParams& params, const EmbeddingTable& table,
                std::span<const BprSample> samples, const PoolingSpec& spec) {
  if (samples.empty()) return 0.0;
  if (table.layers.empty() || table.layers[0].rows() != params.layer0.rows() ||
      table.layers[0].cols() != params.layer0.cols() || table.layers[0] != params.layer0) {
    throw ContractViolation("bpr_step: embedding table is stale; re-propagate first");
  }
  const double loss = bpr_loss(table, samples, spec, params.l2);
  const Matrix grad = bpr_gradient(graph, table, samples, spec, params.l2);
  params.adam.apply(params.layer0, grad, params.lr);
  return loss;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace hopwise
