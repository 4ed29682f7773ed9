#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hopwise/gnn.hpp"
#include "hopwise/graph_store.hpp"
#include "hopwise/rng.hpp"

namespace hopwise {

/// Ordered (state, action) record of one trajectory side (L_u or L_v).
/// Duplicates are kept: this is a list, not a set.
class TupleList {
 public:
  explicit TupleList(NodeKind side) : side_(side) {}

  void record(NodeId state, std::uint32_t action);
  void clear() { entries_.clear(); }

  NodeKind side() const { return side_; }
  const std::vector<NodeAction>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  NodeKind side_;
  std::vector<NodeAction> entries_;
};

enum class ContextStatus : std::uint8_t { Ok, NoPositive, NoNegative };

struct RewardContext {
  ContextStatus status = ContextStatus::NoPositive;
  std::vector<NodeAction> positives;          // entries whose state is in I(s)
  std::vector<NodeAction> negative_pool;      // the remaining entries
  std::vector<NodeAction> sampled_negatives;  // |positives| draws from the pool

  bool ok() const { return status == ContextStatus::Ok; }
};

/// Uniform draw from the same-kind nodes within `action` hops (center included).
NodeId next_state(NodeId state, std::uint32_t action, const Graph& graph, Rng& rng);

/// Splits the opposite-side tuple list by membership in I(state) and samples
/// |positives| negatives (with replacement only if the pool is smaller).
RewardContext build_reward_context(NodeId state, const TupleList& opposite,
                                   const InteractionSet& interactions, Rng& rng);

/// Same positives, but negatives drawn uniformly from all opposite-kind nodes
/// outside I(state); `action_of` supplies their depth.
RewardContext build_random_negative_context(NodeId state, const TupleList& opposite,
                                            const InteractionSet& interactions,
                                            const std::function<std::uint32_t(NodeId)>& action_of,
                                            Rng& rng);

struct RewardOutcome {
  double value = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  bool guarded = false;  // |denominator| under the guard, value forced to 0
};

inline constexpr double kRewardGuard = 1e-8;

/// Normalized margin of the chosen depth:
///   (s(e*_a, e_p) - s(e*_a, e_n)) / (sum_c s(e*_c, e_p) - sum_c s(e*_c, e_n))
/// with e_p, e_n the mean pooled embeddings of positives and sampled negatives
/// and c ranging over every action.
RewardOutcome reward(NodeId state, std::uint32_t action, const RewardContext& ctx,
                     const EmbeddingTable& table, const PoolingSpec& spec,
                     double guard = kRewardGuard);

}  // namespace hopwise
