#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "hopwise/gnn.hpp"
#include "hopwise/graph_store.hpp"
#include "hopwise/rng.hpp"

namespace hopwise {

/// Q(s, .) approximator: input -> hidden (ReLU) -> one output per action.
/// Action a (1-based) is output index a-1.
struct QNetwork {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // actions x hidden
  Eigen::VectorXd b2;
  double lr = 1e-3;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
  static QNetwork init(std::uint32_t input_dim, std::uint32_t hidden, std::uint32_t n_actions,
                       Rng& rng, double lr = 1e-3);
  static QNetwork zeros(std::uint32_t input_dim, std::uint32_t hidden, std::uint32_t n_actions);

  std::uint32_t input_dim() const { return static_cast<std::uint32_t>(w1.cols()); }
  std::uint32_t hidden() const { return static_cast<std::uint32_t>(w1.rows()); }
  std::uint32_t n_actions() const { return static_cast<std::uint32_t>(w2.rows()); }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  bool finite() const;

  friend bool operator==(const QNetwork& a, const QNetwork& b) {
    return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2 && a.lr == b.lr;
  }
};

struct QGradient {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

enum class StateEncoding : std::uint8_t { InitialEmbedding = 0, PooledEmbedding = 1 };

/// Turns a state node into the DQN input vector. Reads the embedding table
/// without holding gradients: the DQN never trains the embeddings.
class StateEncoder {
 public:
  StateEncoder(const EmbeddingTable& table, StateEncoding mode = StateEncoding::InitialEmbedding,
               PoolingSpec spec = {}, std::uint32_t probe_action = 1);

  Eigen::VectorXd encode(NodeId state) const;
  std::uint32_t dim() const;
  StateEncoding mode() const { return mode_; }

 private:
  const EmbeddingTable* table_;
  StateEncoding mode_;
  PoolingSpec spec_;
  std::uint32_t probe_action_;
};

struct Transition {
  NodeId state;
  std::uint32_t action = 1;
  double reward = 0.0;
  NodeId next_state;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Fixed-capacity FIFO ring buffer with its own sampling generator.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity = 10'000, std::uint64_t seed = 0);

  void push(const Transition& t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }

  /// Uniform sample of `n`: without replacement when size() >= n, with
  /// replacement otherwise. Empty memory yields an empty batch.
  std::vector<Transition> sample(std::size_t n);

  /// Contents from oldest to newest.
  std::vector<Transition> contents() const;
  /// Replaces contents (oldest first); keeps the newest `capacity` entries.
  void restore(std::span<const Transition> oldest_first);

  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;  // index of the oldest entry once full
  Rng rng_;
};

/// Q-values for every action; deterministic.
Eigen::VectorXd q_values(const QNetwork& net, const StateEncoder& encoder, NodeId state);

/// 1-based argmax with lowest-index tie-break.
std::uint32_t greedy_action(const Eigen::VectorXd& q);

/// Epsilon-greedy choice in 1..n_actions.
std::uint32_t select_action(const QNetwork& net, const StateEncoder& encoder, NodeId state,
                            double epsilon, Rng& rng);

/// r + gamma * max_a Q_target(s', a). Transitions never terminate.
double td_target(const QNetwork& target, const StateEncoder& encoder, const Transition& t,
                 double gamma);

/// sum_k (Q(s_k, a_k) - y_k)^2 with y_k from the target network.
double td_loss_sum(const QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                   double gamma, const StateEncoder& encoder);

/// Gradient of td_loss_sum w.r.t. the live network; targets are constants.
QGradient td_gradient(const QNetwork& net, const QNetwork& target,
                      std::span<const Transition> batch, double gamma,
                      const StateEncoder& encoder);

/// One SGD step on td_loss_sum at net.lr. Returns the mean squared TD error
/// before the update; an empty batch is a no-op returning 0. A positive
/// `max_grad_norm` rescales the whole gradient down to that L2 norm.
double dqn_update(QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                  double gamma, const StateEncoder& encoder, double max_grad_norm = 0.0);

void sync_target(const QNetwork& net, QNetwork& target);

/// Live network, frozen target and replay memory for one side.
struct DqnStack {
  QNetwork live;
  QNetwork target;
  ReplayMemory memory;
};

}  // namespace hopwise
