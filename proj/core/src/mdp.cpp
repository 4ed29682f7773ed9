#include "hopwise/mdp.hpp"

#include <cmath>

#include "hopwise/error.hpp"

namespace hopwise {

void TupleList::record(NodeId state, std::uint32_t action) {
  if (state.kind != side_) {
    throw ContractViolation(std::string("TupleList: cannot record ") + to_string(state.kind) +
                            " state in " + to_string(side_) + " list");
  }
  entries_.push_back({state, action});
}

NodeId next_state(NodeId state, std::uint32_t action, const Graph& graph, Rng& rng) {
  std::vector<std::uint32_t> storage;
  const auto candidates = graph.same_kind_within(state, action, storage);
  // The center is always a candidate, so the set is never empty.
  return graph.node(candidates[rng.uniform_index(candidates.size())]);
}

namespace {

void partition(NodeId state, const TupleList& opposite, const InteractionSet& interactions,
               RewardContext& ctx) {
  if (state.kind == opposite.side() || state.kind == NodeKind::Entity)
    throw ContractViolation("build_reward_context: tuple list must hold the opposite side");
  for (const auto& e : opposite.entries()) {
    (interactions.interacted(state, e.node) ? ctx.positives : ctx.negative_pool).push_back(e);
  }
}

}  // namespace

RewardContext build_reward_context(NodeId state, const TupleList& opposite,
                                   const InteractionSet& interactions, Rng& rng) {
  RewardContext ctx;
  partition(state, opposite, interactions, ctx);
  if (ctx.positives.empty()) {
    ctx.status = ContextStatus::NoPositive;
    return ctx;
  }
  if (ctx.negative_pool.empty()) {
    ctx.status = ContextStatus::NoNegative;
    return ctx;
  }
  const std::size_t want = ctx.positives.size();
  const std::size_t have = ctx.negative_pool.size();
  ctx.sampled_negatives.reserve(want);
  if (have < want) {
    for (std::size_t i = 0; i < want; ++i)
      ctx.sampled_negatives.push_back(ctx.negative_pool[rng.uniform_index(have)]);
  } else {
    std::vector<std::size_t> idx(have);
    for (std::size_t i = 0; i < have; ++i) idx[i] = i;
    for (std::size_t i = 0; i < want; ++i) {
      std::swap(idx[i], idx[i + rng.uniform_index(have - i)]);
      ctx.sampled_negatives.push_back(ctx.negative_pool[idx[i]]);
    }
  }
  ctx.status = ContextStatus::Ok;
  return ctx;
}

RewardContext build_random_negative_context(NodeId state, const TupleList& opposite,
                                            const InteractionSet& interactions,
                                            const std::function<std::uint32_t(NodeId)>& action_of,
                                            Rng& rng) {
  RewardContext ctx;
  partition(state, opposite, interactions, ctx);
  if (ctx.positives.empty()) {
    ctx.status = ContextStatus::NoPositive;
    return ctx;
  }
  const NodeKind kind = opposite.side();
  const std::uint32_t n = kind == NodeKind::User ? interactions.n_users() : interactions.n_items();
  const std::size_t n_interacted = interactions.neighbors_of(state).size();
  if (n_interacted >= n) {
    ctx.status = ContextStatus::NoNegative;
    return ctx;
  }
  while (ctx.sampled_negatives.size() < ctx.positives.size()) {
    const NodeId cand{kind, static_cast<std::uint32_t>(rng.uniform_index(n))};
    if (interactions.interacted(state, cand)) continue;
    ctx.sampled_negatives.push_back({cand, action_of(cand)});
  }
  ctx.status = ContextStatus::Ok;
  return ctx;
}

RewardOutcome reward(NodeId state, std::uint32_t action, const RewardContext& ctx,
                     const EmbeddingTable& table, const PoolingSpec& spec, double guard) {
  if (!ctx.ok() || ctx.positives.empty() || ctx.sampled_negatives.empty())
    throw ContractViolation("reward: context lacks positive or negative evidence");
  auto mean_pool = [&](const std::vector<NodeAction>& tuples) {
    Vector acc = Vector::Zero(spec.output_dim(table.dim));
    for (const auto& t : tuples) acc += pool(table, t.node, t.action, spec);
    return Vector(acc / static_cast<double>(tuples.size()));
  };
  const Vector e_pos = mean_pool(ctx.positives);
  const Vector e_neg = mean_pool(ctx.sampled_negatives);

  RewardOutcome out;
  double sum_pos = 0.0, sum_neg = 0.0;
  for (std::uint32_t c = 1; c <= spec.n_max(); ++c) {
    const Vector e = pool(table, state, c, spec);
    const double sp = score(e, e_pos), sn = score(e, e_neg);
    sum_pos += sp;
    sum_neg += sn;
    if (c == action) out.numerator = sp - sn;
  }
  if (action < 1 || action > spec.n_max()) throw ContractViolation("reward: action out of range");
  out.denominator = sum_pos - sum_neg;
  if (std::abs(out.denominator) < guard) {
    out.guarded = true;
    out.value = 0.0;
    return out;
  }
  out.value = out.numerator / out.denominator;
  return out;
}

}  // namespace hopwise
