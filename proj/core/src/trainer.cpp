#include "hopwise/trainer.hpp"

#include <sstream>

#include "hopwise/error.hpp"
#include "hopwise/eval.hpp"

namespace hopwise {

double epsilon(std::uint32_t z, std::uint32_t total) {
  if (total == 0) throw ContractViolation("epsilon: total epochs must be positive");
  if (z > total) throw ContractViolation("epsilon: epoch past the total");
  return 1.0 - static_cast<double>(z) / static_cast<double>(total);
}

std::string format_history_row(const HistoryRow& row) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::ostringstream os;
  os << row.epoch << ',' << format_double(row.eps) << ',' << opt(row.user_reward) << ','
     << opt(row.item_reward) << ',' << format_double(row.td_loss_user) << ','
     << format_double(row.td_loss_item) << ',' << format_double(row.bpr_loss) << ','
     << opt(row.val_ndcg) << ',' << opt(row.val_recall);
  return os.str();
}

ActionAssignment assign_actions(const QNetwork& user_net, const QNetwork& item_net,
                                const StateEncoder& encoder, const Graph& graph) {
  ActionAssignment out;
  out.user_actions.resize(graph.n_users());
  out.item_actions.resize(graph.n_items());
  for (std::uint32_t u = 0; u < graph.n_users(); ++u)
    out.user_actions[u] = greedy_action(q_values(user_net, encoder, user_node(u)));
  for (std::uint32_t i = 0; i < graph.n_items(); ++i)
    out.item_actions[i] = greedy_action(q_values(item_net, encoder, item_node(i)));
  return out;
}

Trainer::Trainer(const Graph& graph, const InteractionSet& validation, TrainConfig config)
    : graph_(&graph), validation_(&validation), config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  if (graph.interactions().empty()) throw ContractViolation("Trainer: empty training graph");
  params_ = GnnParams::init(graph.n_nodes(), config_.dim, rng_, config_.init_std);
  params_.lr = config_.gnn_lr;
  params_.l2 = config_.l2;
  table_ = propagate(graph, params_, config_.n_max);
  if (adaptive()) {
    const std::uint32_t in_dim = encoder().dim();
    const std::size_t n_stacks = config_.dual ? 2 : 1;
    for (std::size_t s = 0; s < n_stacks; ++s) {
      const double lr = s == 0 ? config_.dqn_lr_user : config_.dqn_lr_item;
      QNetwork live = QNetwork::init(in_dim, config_.dqn_hidden, config_.n_max, rng_, lr);
      QNetwork target = live;
      stacks_.push_back({std::move(live), std::move(target),
                         ReplayMemory(config_.replay_capacity, rng_.split())});
    }
  }
  for (std::uint32_t u = 0; u < graph.n_users(); ++u)
    if (!graph.interactions().items_of(u).empty()) active_users_.push_back(u);
  train_pairs_ = graph.interactions().pairs();
}

Trainer::Trainer(const Graph& graph, const InteractionSet& validation, const Checkpoint& ckpt)
    : graph_(&graph), validation_(&validation), config_(ckpt.config) {
  config_.validate();
  rng_.set_state(ckpt.rng_state);
  params_ = ckpt.gnn;
  if (params_.layer0.rows() != graph.n_nodes())
    throw ContractViolation("checkpoint does not match the graph's node count");
  table_ = propagate(graph, params_, config_.n_max);
  stacks_ = ckpt.stacks;
  epoch_ = ckpt.epoch;
  for (std::uint32_t u = 0; u < graph.n_users(); ++u)
    if (!graph.interactions().items_of(u).empty()) active_users_.push_back(u);
  train_pairs_ = graph.interactions().pairs();
}

const DqnStack& Trainer::stack(NodeKind side) const {
  if (stacks_.empty()) throw ContractViolation("fixed-depth trainer has no policy");
  return stacks_.size() == 1 || side == NodeKind::User ? stacks_[0] : stacks_[1];
}

DqnStack& Trainer::stack_mut(NodeKind side) {
  return stacks_.size() == 1 || side == NodeKind::User ? stacks_[0] : stacks_[1];
}

StateEncoder Trainer::encoder() const {
  return StateEncoder(table_, config_.state_encoding, pooling(), config_.probe_action);
}

ActionAssignment Trainer::assign_actions() const {
  if (!adaptive())
    return ActionAssignment::constant(graph_->n_users(), graph_->n_items(), config_.fixed_depth);
  return hopwise::assign_actions(stack(NodeKind::User).live, stack(NodeKind::Item).live, encoder(),
                                 *graph_);
}

RankingMetrics Trainer::validate() const {
  const auto result = evaluate_against(assign_actions(), table_, pooling(), graph_->interactions(),
                                       *validation_, config_.eval_k);
  return {result.ndcg, result.recall};
}

RewardContext Trainer::context_for(NodeId state, const TupleList& opposite) {
  if (config_.negatives == NegativeSource::TupleList)
    return build_reward_context(state, opposite, graph_->interactions(), rng_);
  const StateEncoder enc = encoder();
  const QNetwork& net = stack(opposite.side()).live;
  return build_random_negative_context(
      state, opposite, graph_->interactions(),
      [&](NodeId n) { return greedy_action(q_values(net, enc, n)); }, rng_);
}

void Trainer::rollout(double eps, EpochStats& stats, std::vector<BprSample>& tuple_samples,
                      std::vector<double>& user_rewards, std::vector<double>& item_rewards) {
  const StateEncoder enc = encoder();
  const PoolingSpec spec = pooling();
  const auto& interactions = graph_->interactions();
  DqnStack& user_stack = stack_mut(NodeKind::User);
  DqnStack& item_stack = stack_mut(NodeKind::Item);

  NodeId user = user_node(active_users_[rng_.uniform_index(active_users_.size())]);
  const auto first_items = interactions.items_of(user.index);
  NodeId item = item_node(first_items[rng_.uniform_index(first_items.size())]);

  TrajectoryTrace trace;
  auto& users = trace.user_list;
  auto& items = trace.item_list;
  for (std::uint32_t t = 0; t <= config_.trajectory_length; ++t) {
    const std::uint32_t a_user = select_action(user_stack.live, enc, user, eps, rng_);
    const std::uint32_t a_item = select_action(item_stack.live, enc, item, eps, rng_);
    trace.steps.push_back({{user, a_user}, {item, a_item}, q_values(user_stack.live, enc, user),
                           q_values(item_stack.live, enc, item)});

    users.record(user, a_user);
    const NodeId next_user = next_state(user, a_user, *graph_, rng_);
    if (t >= config_.warmup) {
      const auto ctx = context_for(user, items);
      if (ctx.ok()) {
        const auto r = reward(user, a_user, ctx, table_, spec);
        stats.guarded_rewards += r.guarded;
        user_stack.memory.push({user, a_user, r.value, next_user});
        user_rewards.push_back(r.value);
        ++trace.user_transitions;
      } else {
        ++stats.skipped_rewards;
      }
    }

    items.record(item, a_item);
    const NodeId next_item = next_state(item, a_item, *graph_, rng_);
    if (t >= config_.warmup) {
      const auto ctx = context_for(item, users);
      if (ctx.ok()) {
        const auto r = reward(item, a_item, ctx, table_, spec);
        stats.guarded_rewards += r.guarded;
        item_stack.memory.push({item, a_item, r.value, next_item});
        item_rewards.push_back(r.value);
        ++trace.item_transitions;
      } else {
        ++stats.skipped_rewards;
      }
    }
    user = next_user;
    item = next_item;
  }
  stats.user_transitions += trace.user_transitions;
  stats.item_transitions += trace.item_transitions;

  // DQN updates for this rollout.
  auto update = [&](DqnStack& s, double& loss_out) {
    if (s.memory.empty()) {
      ++stats.skipped_dqn_updates;
      return;
    }
    const auto batch = s.memory.sample(config_.replay_batch);
    loss_out += dqn_update(s.live, s.target, batch, config_.gamma, enc, config_.dqn_grad_clip);
  };
  update(user_stack, stats.td_loss_user);
  update(item_stack, stats.td_loss_item);

  collect_tuple_samples(users, items, tuple_samples);
  collect_tuple_samples(items, users, tuple_samples);
  traces_.push_back(std::move(trace));
}

void Trainer::collect_tuple_samples(const TupleList& anchors, const TupleList& opposite,
                                    std::vector<BprSample>& out) {
  for (const auto& anchor : anchors.entries()) {
    const auto ctx = context_for(anchor.node, opposite);
    if (!ctx.ok()) continue;
    for (std::size_t i = 0; i < ctx.positives.size(); ++i)
      out.push_back({anchor, ctx.positives[i], ctx.sampled_negatives[i]});
  }
}

void Trainer::sample_batch(const ActionAssignment& assignment, std::vector<BprSample>& out) {
  const auto& interactions = graph_->interactions();
  const std::uint32_t n_items = graph_->n_items();
  for (std::uint32_t k = 0; k < config_.gnn_batch_size; ++k) {
    const auto [u, i] = train_pairs_[rng_.uniform_index(train_pairs_.size())];
    if (interactions.items_of(u).size() >= n_items) continue;
    std::uint32_t j;
    do {
      j = static_cast<std::uint32_t>(rng_.uniform_index(n_items));
    } while (interactions.contains(u, j));
    const NodeId un = user_node(u), in = item_node(i), jn = item_node(j);
    out.push_back({{un, assignment.action_of(un)},
                   {in, assignment.action_of(in)},
                   {jn, assignment.action_of(jn)}});
  }
}

void Trainer::check_finite() const {
  if (!all_finite(params_.layer0))
    throw NumericalError("non-finite GNN embedding after epoch " + std::to_string(epoch_));
  for (const auto& s : stacks_)
    if (!s.live.finite() || !s.target.finite())
      throw NumericalError("non-finite DQN parameter after epoch " + std::to_string(epoch_));
}

EpochStats Trainer::run_epoch() {
  EpochStats stats;
  stats.epoch = epoch_;
  traces_.clear();
  std::vector<BprSample> tuple_samples;
  if (adaptive()) {
    stats.eps = epsilon(std::min(epoch_, config_.epochs), config_.epochs);
    std::vector<double> user_rewards, item_rewards;
    for (std::uint32_t tr = 0; tr < config_.trajectories_per_epoch; ++tr)
      rollout(stats.eps, stats, tuple_samples, user_rewards, item_rewards);
    const double n_tr = static_cast<double>(config_.trajectories_per_epoch);
    stats.td_loss_user /= n_tr;
    stats.td_loss_item /= n_tr;
    auto mean = [](const std::vector<double>& v) -> std::optional<double> {
      if (v.empty()) return std::nullopt;
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    stats.user_reward = mean(user_rewards);
    stats.item_reward = mean(item_rewards);
    if (epoch_ % config_.target_sync == 0) {
      for (auto& s : stacks_) sync_target(s.live, s.target);
      stats.synced_targets = true;
    }
  }

  const PoolingSpec spec = pooling();
  const ActionAssignment assignment = assign_actions();
  double bpr_total = 0.0;
  std::size_t bpr_count = 0;
  for (std::uint32_t step = 0; step < std::max(1u, config_.gnn_steps_per_epoch); ++step) {
    std::vector<BprSample> samples;
    if (step == 0) {
      samples = std::move(tuple_samples);
      stats.tuple_bpr_samples = samples.size();
    }
    if (config_.gnn_steps_per_epoch > 0) {
      const auto before = samples.size();
      sample_batch(assignment, samples);
      stats.batch_bpr_samples += samples.size() - before;
    }
    if (samples.empty()) continue;
    if (step > 0) table_ = propagate(*graph_, params_, config_.n_max);
    bpr_total += bpr_step(*graph_, params_, table_, samples, spec);
    bpr_count += samples.size();
  }
  stats.bpr_loss = bpr_count ? bpr_total / static_cast<double>(bpr_count) : 0.0;
  table_ = propagate(*graph_, params_, config_.n_max);
  check_finite();
  ++epoch_;
  return stats;
}

Checkpoint Trainer::checkpoint() const {
  return {config_, epoch_, rng_.state(), params_, stacks_};
}

TrainReport Trainer::train(const std::function<void(const HistoryRow&)>& on_row) {
  TrainReport report;
  std::optional<Checkpoint> best;
  double best_ndcg = -1.0;
  std::uint32_t since_best = 0;
  const bool can_validate = validation_ != nullptr && !validation_->empty();
  while (epoch_ < config_.epochs) {
    const auto stats = run_epoch();
    HistoryRow row{stats.epoch,        stats.eps,          stats.user_reward, stats.item_reward,
                   stats.td_loss_user, stats.td_loss_item, stats.bpr_loss,    std::nullopt,
                   std::nullopt};
    const bool last = epoch_ == config_.epochs;
    bool stop = false;
    if (can_validate && (stats.epoch % config_.eval_stride == 0 || last)) {
      const auto m = validate();
      row.val_ndcg = m.ndcg;
      row.val_recall = m.recall;
      if (m.ndcg > best_ndcg) {
        best_ndcg = m.ndcg;
        best = checkpoint();
        report.best_epoch = stats.epoch;
        report.best_validation = m;
        since_best = 0;
      } else if (++since_best >= config_.patience) {
        stop = true;
      }
    }
    report.history.push_back(row);
    if (on_row) on_row(row);
    ++report.epochs_run;
    if (stop) {
      report.early_stopped = true;
      break;
    }
  }
  if (best) {
    rng_.set_state(best->rng_state);
    params_ = best->gnn;
    stacks_ = best->stacks;
    epoch_ = best->epoch;
    table_ = propagate(*graph_, params_, config_.n_max);
  } else {
    report.best_epoch = epoch_ == 0 ? 0 : epoch_ - 1;
  }
  return report;
}

}  // namespace hopwise
