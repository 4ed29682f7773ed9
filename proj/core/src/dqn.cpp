#include "hopwise/dqn.hpp"

#include <cmath>

#include "hopwise/error.hpp"

namespace hopwise {

QNetwork QNetwork::init(std::uint32_t input_dim, std::uint32_t hidden, std::uint32_t n_actions,
                        Rng& rng, double lr) {
  if (input_dim == 0 || hidden == 0 || n_actions == 0)
    throw ContractViolation("QNetwork::init: zero-sized layer");
  auto fill = [&rng](auto& m, double bound) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = bound * (2.0 * rng.uniform() - 1.0);
  };
  QNetwork net = zeros(input_dim, hidden, n_actions);
  net.lr = lr;
  const double b_in = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double b_hidden = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill(net.w1, b_in);
  fill(net.b1, b_in);
  fill(net.w2, b_hidden);
  fill(net.b2, b_hidden);
  return net;
}

QNetwork QNetwork::zeros(std::uint32_t input_dim, std::uint32_t hidden, std::uint32_t n_actions) {
  QNetwork net;
  net.w1 = Eigen::MatrixXd::Zero(hidden, input_dim);
  net.b1 = Eigen::VectorXd::Zero(hidden);
  net.w2 = Eigen::MatrixXd::Zero(n_actions, hidden);
  net.b2 = Eigen::VectorXd::Zero(n_actions);
  return net;
}

Eigen::VectorXd QNetwork::forward(const Eigen::VectorXd& x) const {
  if (x.size() != w1.cols()) {
    throw ContractViolation("QNetwork: input has " + std::to_string(x.size()) + " features, expected " +
                            std::to_string(w1.cols()));
  }
  const Eigen::VectorXd h = (w1 * x + b1).cwiseMax(0.0);
  return w2 * h + b2;
}

bool QNetwork::finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

StateEncoder::StateEncoder(const EmbeddingTable& table, StateEncoding mode, PoolingSpec spec,
                           std::uint32_t probe_action)
    : table_(&table), mode_(mode), spec_(std::move(spec)), probe_action_(probe_action) {
  if (mode_ == StateEncoding::PooledEmbedding) {
    if (spec_.weights.empty()) spec_ = PoolingSpec::uniform(table.n_max);
    spec_.weights_for(probe_action_);  // range check
  }
}

Eigen::VectorXd StateEncoder::encode(NodeId state) const {
  if (mode_ == StateEncoding::InitialEmbedding)
    return table_->layers[0].row(table_->row(state)).transpose();
  return pool(*table_, state, probe_action_, spec_);
}

std::uint32_t StateEncoder::dim() const {
  return mode_ == StateEncoding::InitialEmbedding ? table_->dim : spec_.output_dim(table_->dim);
}

ReplayMemory::ReplayMemory(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
  if (capacity_ == 0) throw ContractViolation("ReplayMemory: capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayMemory::push(const Transition& t) {
  if (t.state.kind != t.next_state.kind)
    throw ContractViolation("Transition: state and next_state differ in kind");
  if (items_.size() < capacity_) {
    items_.push_back(t);
    return;
  }
  items_[head_] = t;
  head_ = (head_ + 1) % capacity_;
}

std::vector<Transition> ReplayMemory::sample(std::size_t n) {
  std::vector<Transition> out;
  if (items_.empty() || n == 0) return out;
  out.reserve(n);
  if (items_.size() >= n) {
    // Partial Fisher-Yates over indices.
    std::vector<std::size_t> idx(items_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = i + rng_.uniform_index(idx.size() - i);
      std::swap(idx[i], idx[j]);
      out.push_back(items_[(head_ + idx[i]) % items_.size()]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      out.push_back(items_[(head_ + rng_.uniform_index(items_.size())) % items_.size()]);
  }
  return out;
}

std::vector<Transition> ReplayMemory::contents() const {
  std::vector<Transition> out;
  out.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) out.push_back(items_[(head_ + i) % items_.size()]);
  return out;
}

void ReplayMemory::restore(std::span<const Transition> oldest_first) {
  items_.clear();
  head_ = 0;
  for (const auto& t : oldest_first) push(t);
}

Eigen::VectorXd q_values(const QNetwork& net, const StateEncoder& encoder, NodeId state) {
  return net.forward(encoder.encode(state));
}

std::uint32_t greedy_action(const Eigen::VectorXd& q) {
  Eigen::Index best = 0;
  for (Eigen::Index a = 1; a < q.size(); ++a)
    if (q[a] > q[best]) best = a;
  return static_cast<std::uint32_t>(best) + 1;
}

std::uint32_t select_action(const QNetwork& net, const StateEncoder& encoder, NodeId state,
                            double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) throw ContractViolation("select_action: epsilon outside [0,1]");
  if (rng.uniform() < epsilon)
    return 1 + static_cast<std::uint32_t>(rng.uniform_index(net.n_actions()));
  return greedy_action(q_values(net, encoder, state));
}

double td_target(const QNetwork& target, const StateEncoder& encoder, const Transition& t,
                 double gamma) {
  if (gamma == 0.0) return t.reward;
  return t.reward + gamma * q_values(target, encoder, t.next_state).maxCoeff();
}

double td_loss_sum(const QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                   double gamma, const StateEncoder& encoder) {
  double loss = 0.0;
  for (const auto& t : batch) {
    const double q = q_values(net, encoder, t.state)[t.action - 1];
    const double d = q - td_target(target, encoder, t, gamma);
    loss += d * d;
  }
  return loss;
}

QGradient td_gradient(const QNetwork& net, const QNetwork& target,
                      std::span<const Transition> batch, double gamma,
                      const StateEncoder& encoder) {
  QGradient g{Eigen::MatrixXd::Zero(net.w1.rows(), net.w1.cols()),
              Eigen::VectorXd::Zero(net.b1.size()),
              Eigen::MatrixXd::Zero(net.w2.rows(), net.w2.cols()),
              Eigen::VectorXd::Zero(net.b2.size())};
  for (const auto& t : batch) {
    if (t.action < 1 || t.action > net.n_actions())
      throw ContractViolation("td_gradient: action out of range");
    const Eigen::VectorXd x = encoder.encode(t.state);
    const Eigen::VectorXd pre = net.w1 * x + net.b1;
    const Eigen::VectorXd h = pre.cwiseMax(0.0);
    const std::uint32_t a = t.action - 1;
    const double q = net.w2.row(a).dot(h) + net.b2[a];
    const double dq = 2.0 * (q - td_target(target, encoder, t, gamma));
    g.w2.row(a) += dq * h.transpose();
    g.b2[a] += dq;
    Eigen::VectorXd dh = dq * net.w2.row(a).transpose();
    for (Eigen::Index k = 0; k < dh.size(); ++k)
      if (pre[k] <= 0.0) dh[k] = 0.0;
    g.w1 += dh * x.transpose();
    g.b1 += dh;
  }
  return g;
}

double dqn_update(QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                  double gamma, const StateEncoder& encoder, double max_grad_norm) {
  if (batch.empty()) return 0.0;
  if (gamma < 0.0 || gamma >= 1.0) throw ContractViolation("dqn_update: gamma outside [0,1)");
  const double loss = td_loss_sum(net, target, batch, gamma, encoder);
  const QGradient g = td_gradient(net, target, batch, gamma, encoder);
  double step = net.lr;
  if (max_grad_norm > 0.0) {
    const double norm = std::sqrt(g.w1.squaredNorm() + g.b1.squaredNorm() + g.w2.squaredNorm() +
                                  g.b2.squaredNorm());
    if (norm > max_grad_norm) step *= max_grad_norm / norm;
  }
  net.w1 -= step * g.w1;
  net.b1 -= step * g.b1;
  net.w2 -= step * g.w2;
  net.b2 -= step * g.b2;
  return loss / static_cast<double>(batch.size());
}

void sync_target(const QNetwork& net, QNetwork& target) { target = net; }

}  // namespace hopwise
