#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hopwise/assignment.hpp"
#include "hopwise/config.hpp"
#include "hopwise/gnn.hpp"
#include "hopwise/graph_store.hpp"
#include "hopwise/trainer.hpp"

namespace hopwise {

struct UserRanking {
  std::uint32_t user = 0;
  std::vector<std::uint32_t> top_k;  // best first, train items excluded
  double recall = 0.0;
  double ndcg = 0.0;
};

struct RankingResult {
  std::uint32_t k = 20;
  std::vector<UserRanking> users;  // users with a nonempty target set
  double recall = 0.0;
  double ndcg = 0.0;
  std::size_t skipped_users = 0;   // users without targets
};

/// Recall@K = |top_k ∩ relevant| / |relevant|. `relevant` sorted.
double recall_at_k(std::span<const std::uint32_t> top_k, std::span<const std::uint32_t> relevant);
/// Binary-gain nDCG@K with 1/log2(rank+1) discount. `relevant` sorted.
double ndcg_at_k(std::span<const std::uint32_t> top_k, std::span<const std::uint32_t> relevant,
                 std::uint32_t k);

/// Top-K items by score, ties broken by ascending item id; excluded items skipped.
std::vector<std::uint32_t> top_k_items(const Vector& scores,
                                       std::span<const std::uint32_t> excluded_sorted,
                                       std::uint32_t k);

/// Ranks every non-excluded item for each user with targets.
RankingResult evaluate_against(const ActionAssignment& assignment, const EmbeddingTable& table,
                               const PoolingSpec& spec, const InteractionSet& exclude,
                               const InteractionSet& targets, std::uint32_t k);

/// Test-set evaluation: train and validation items are excluded from ranking.
RankingResult evaluate(const ActionAssignment& assignment, const EmbeddingTable& table,
                       const PoolingSpec& spec, const DataSplit& split, std::uint32_t k = 20);

struct FixedDepthResult {
  std::uint32_t depth = 0;
  TrainReport report;
  RankingResult test;
};

/// Trains the recommender with every node pinned to `depth` and evaluates on
/// the test split through the same path as the adaptive model.
FixedDepthResult baseline_fixed_depth(const Graph& graph, const DataSplit& split,
                                      std::uint32_t depth, TrainConfig config);

struct SparsityGroup {
  std::uint32_t lower = 0;            // inclusive interaction count
  std::uint32_t upper_exclusive = 0;  // reported as "< upper_exclusive"
  std::size_t users = 0;
  std::size_t interactions = 0;
  double ndcg = 0.0;
};

struct SparsityGroups {
  std::vector<SparsityGroup> groups;
  std::string note;  // set when fewer than the requested groups could be formed
};

/// Splits evaluated users into `n_groups` groups by interaction count so that
/// each group carries about the same number of interactions. `counts[u]` is
/// user u's training interaction count.
SparsityGroups sparsity_groups(const RankingResult& result, std::span<const std::uint32_t> counts,
                               std::uint32_t n_groups = 4);
SparsityGroups sparsity_report(const RankingResult& result, const DataSplit& split);

struct ActionDistribution {
  std::vector<std::size_t> user_counts;  // index a-1
  std::vector<std::size_t> item_counts;
  std::vector<double> user_percent;
  std::vector<double> item_percent;
};

ActionDistribution action_distribution_report(const ActionAssignment& assignment,
                                              std::uint32_t n_actions);

struct RewardPoint {
  std::uint32_t epoch = 0;
  std::optional<double> user_reward;
  std::optional<double> item_reward;
  std::optional<double> user_trend;
  std::optional<double> item_trend;
};

/// Trailing mean over the last `window` present values; window 0 means the
/// running mean over all epochs so far.
std::vector<std::optional<double>> moving_average(std::span<const std::optional<double>> series,
                                                  std::uint32_t window);

std::vector<RewardPoint> reward_curve(std::span<const HistoryRow> history, std::uint32_t window);
/// Reads a history CSV and builds the curve.
std::vector<RewardPoint> reward_curve_export(const std::filesystem::path& history_csv,
                                             std::uint32_t window);
std::vector<HistoryRow> read_history(const std::filesystem::path& history_csv);

// CSV writers.
void write_ranking_csv(const std::filesystem::path& path, const RankingResult& result);
void write_actions_csv(const std::filesystem::path& path, const ActionAssignment& assignment);
ActionAssignment read_actions_csv(const std::filesystem::path& path);
void write_sparsity_csv(const std::filesystem::path& path, const SparsityGroups& groups);
void write_distribution_csv(const std::filesystem::path& path, const ActionDistribution& dist);
void write_reward_curve_csv(const std::filesystem::path& path, std::span<const RewardPoint> curve);

std::string format_double(double v);

}  // namespace hopwise
