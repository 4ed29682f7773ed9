#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hopwise/assignment.hpp"
#include "hopwise/checkpoint.hpp"
#include "hopwise/config.hpp"
#include "hopwise/dqn.hpp"
#include "hopwise/gnn.hpp"
#include "hopwise/graph_store.hpp"
#include "hopwise/mdp.hpp"
#include "hopwise/rng.hpp"

namespace hopwise {

/// 1 - z/Z.
double epsilon(std::uint32_t z, std::uint32_t total);

struct EpochStats {
  std::uint32_t epoch = 0;
  double eps = 0.0;
  std::optional<double> user_reward;  // mean over rewards computed this epoch
  std::optional<double> item_reward;
  double td_loss_user = 0.0;
  double td_loss_item = 0.0;
  double bpr_loss = 0.0;
  std::size_t user_transitions = 0;
  std::size_t item_transitions = 0;
  std::size_t skipped_rewards = 0;   // no positive or no negative evidence
  std::size_t guarded_rewards = 0;   // denominator under the guard
  std::size_t skipped_dqn_updates = 0;
  std::size_t tuple_bpr_samples = 0;
  std::size_t batch_bpr_samples = 0;
  bool synced_targets = false;
};

/// One rollout, kept for inspection.
struct TrajectoryTrace {
  struct Step {
    NodeAction user;
    NodeAction item;
    Eigen::VectorXd user_q;
    Eigen::VectorXd item_q;
  };
  std::vector<Step> steps;
  TupleList user_list{NodeKind::User};
  TupleList item_list{NodeKind::Item};
  std::size_t user_transitions = 0;
  std::size_t item_transitions = 0;
};

struct RankingMetrics {
  double ndcg = 0.0;
  double recall = 0.0;
};

struct HistoryRow {
  std::uint32_t epoch = 0;
  double eps = 0.0;
  std::optional<double> user_reward;
  std::optional<double> item_reward;
  double td_loss_user = 0.0;
  double td_loss_item = 0.0;
  double bpr_loss = 0.0;
  std::optional<double> val_ndcg;
  std::optional<double> val_recall;
};

inline constexpr const char* kHistoryHeader =
    "epoch,eps,user_reward,item_reward,td_loss_u,td_loss_v,bpr_loss,val_ndcg,val_recall";

std::string format_history_row(const HistoryRow& row);

struct TrainReport {
  std::vector<HistoryRow> history;
  std::uint32_t best_epoch = 0;
  RankingMetrics best_validation;
  std::uint32_t epochs_run = 0;
  bool early_stopped = false;
};

/// Greedy per-node readout of both policies.
ActionAssignment assign_actions(const QNetwork& user_net, const QNetwork& item_net,
                                const StateEncoder& encoder, const Graph& graph);

/// Dual-policy training loop over a fixed training graph. With
/// config.fixed_depth > 0 it trains the plain fixed-depth recommender instead
/// (no rollouts, no policies), sharing every other code path.
class Trainer {
 public:
  /// `graph` is built from the training interactions; `validation` holds the
  /// held-out pairs used for early stopping. Both must outlive the trainer.
  Trainer(const Graph& graph, const InteractionSet& validation, TrainConfig config);

  /// Resume from a checkpoint taken on the same graph.
  Trainer(const Graph& graph, const InteractionSet& validation, const Checkpoint& ckpt);

  /// One outer iteration: rollouts, DQN updates, target sync, GNN update,
  /// re-propagation.
  EpochStats run_epoch();

  /// Full loop with early stopping on validation nDCG@K. On return the
  /// trainer holds the best-validation state.
  TrainReport train(const std::function<void(const HistoryRow&)>& on_row = {});

  ActionAssignment assign_actions() const;
  RankingMetrics validate() const;

  Checkpoint checkpoint() const;

  const TrainConfig& config() const { return config_; }
  const Graph& graph() const { return *graph_; }
  const GnnParams& params() const { return params_; }
  const EmbeddingTable& table() const { return table_; }
  PoolingSpec pooling() const { return PoolingSpec::uniform(config_.n_max, config_.pooling); }
  bool adaptive() const { return config_.fixed_depth == 0; }
  const DqnStack& stack(NodeKind side) const;
  StateEncoder encoder() const;
  std::uint32_t epoch() const { return epoch_; }
  const std::vector<TrajectoryTrace>& last_traces() const { return traces_; }

 private:
  DqnStack& stack_mut(NodeKind side);
  void rollout(double eps, EpochStats& stats, std::vector<BprSample>& tuple_samples,
               std::vector<double>& user_rewards, std::vector<double>& item_rewards);
  RewardContext context_for(NodeId state, const TupleList& opposite);
  void collect_tuple_samples(const TupleList& anchors, const TupleList& opposite,
                             std::vector<BprSample>& out);
  void sample_batch(const ActionAssignment& assignment, std::vector<BprSample>& out);
  void check_finite() const;

  const Graph* graph_;
  const InteractionSet* validation_;
  TrainConfig config_;
  Rng rng_;
  GnnParams params_;
  EmbeddingTable table_;
  std::vector<DqnStack> stacks_;
  std::vector<std::uint32_t> active_users_;  // users with at least one training item
  std::vector<std::pair<std::uint32_t, std::uint32_t>> train_pairs_;
  std::uint32_t epoch_ = 0;
  std::vector<TrajectoryTrace> traces_;
};

}  // namespace hopwise
