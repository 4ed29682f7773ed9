#include "doctest.h"

#include <map>

#include "hopwise/error.hpp"
#include "hopwise/mdp.hpp"
#include "support/oracles.hpp"

using namespace hopwise;

namespace {

// Hand-built 1-D table: layer k of every node is given directly.
EmbeddingTable one_dim_table(std::uint32_t n_users, std::uint32_t n_items,
                             const std::vector<std::vector<double>>& layers_by_node) {
  EmbeddingTable t;
  t.dim = 1;
  t.n_max = static_cast<std::uint32_t>(layers_by_node[0].size()) - 1;
  t.n_users = n_users;
  t.n_items = n_items;
  t.layers.assign(t.n_max + 1, Matrix::Zero(static_cast<Eigen::Index>(layers_by_node.size()), 1));
  for (std::size_t x = 0; x < layers_by_node.size(); ++x)
    for (std::uint32_t k = 0; k <= t.n_max; ++k) t.layers[k](static_cast<Eigen::Index>(x), 0) = layers_by_node[x][k];
  return t;
}

}  // namespace

TEST_CASE("isolated node stays put") {
  Graph g(InteractionSet::from_pairs(2, 1, {{0, 0}}), {}, 0);
  Rng rng(1);
  for (std::uint32_t a = 1; a <= 4; ++a) CHECK(next_state(user_node(1), a, g, rng) == user_node(1));
}

TEST_CASE("two-hop transition from the traversal example is uniform over three users") {
  auto inter = InteractionSet::from_pairs(4, 3, {{0, 0}, {1, 0}, {0, 1}, {2, 1}, {2, 2}, {3, 2}});
  Graph g(inter, {}, 0);
  Rng rng(2);
  std::vector<std::size_t> counts(4, 0);
  for (int k = 0; k < 30000; ++k) ++counts[next_state(user_node(0), 2, g, rng).index];
  CHECK(counts[3] == 0);
  CHECK(oracle::chi_square_uniform_p({counts[0], counts[1], counts[2]}) > 0.01);
}

TEST_CASE("next state is uniform over the BFS candidate set") {
  Rng rng(3);
  auto inter = oracle::random_bipartite(50, 50, 0.03, rng);
  Graph g(inter, {}, 0);
  auto adj = oracle::adjacency_lists(oracle::dense_adjacency(inter, {}, 0));
  for (NodeId start : {user_node(0), item_node(7)}) {
    const std::uint32_t action = 3;
    std::map<std::uint32_t, std::size_t> counts;
    for (auto v : oracle::bfs(adj, g.global(start), action))
      if (g.node(v).kind == start.kind) counts[v] = 0;
    std::size_t stray = 0;
    for (int k = 0; k < 30000; ++k) {
      auto s = next_state(start, action, g, rng);
      auto it = counts.find(g.global(s));
      if (it == counts.end() || s.kind != start.kind) ++stray;
      else ++it->second;
    }
    CHECK(stray == 0);
    std::vector<std::size_t> c;
    for (auto& [_, n] : counts) c.push_back(n);
    CHECK(oracle::chi_square_uniform_p(c) > 0.01);
  }
}

TEST_CASE("tuple list") {
  TupleList l(NodeKind::Item);
  CHECK(l.empty());
  for (int k = 0; k < 21; ++k) l.record(item_node(1), 2);
  CHECK(l.size() == 21);
  CHECK_THROWS_AS(l.record(user_node(0), 1), ContractViolation);
  l.clear();
  CHECK(l.empty());
}

TEST_CASE("reward context set arithmetic") {
  // user 0 interacted with item 1 only
  auto inter = InteractionSet::from_pairs(2, 4, {{0, 1}, {1, 2}, {1, 3}});
  Rng rng(4);
  TupleList items(NodeKind::Item);
  items.record(item_node(1), 1);
  items.record(item_node(2), 2);
  items.record(item_node(3), 3);
  auto ctx = build_reward_context(user_node(0), items, inter, rng);
  REQUIRE(ctx.ok());
  CHECK(ctx.positives.size() == 1);
  CHECK(ctx.positives[0].node == item_node(1));
  CHECK(ctx.positives[0].action == 1);
  CHECK(ctx.negative_pool.size() == 2);
  REQUIRE(ctx.sampled_negatives.size() == 1);
  CHECK(ctx.sampled_negatives[0].node != item_node(1));

  TupleList inside(NodeKind::Item);
  inside.record(item_node(1), 1);
  inside.record(item_node(1), 4);
  CHECK(build_reward_context(user_node(0), inside, inter, rng).status == ContextStatus::NoNegative);
  TupleList outside(NodeKind::Item);
  outside.record(item_node(2), 1);
  CHECK(build_reward_context(user_node(0), outside, inter, rng).status == ContextStatus::NoPositive);
  CHECK_THROWS_AS(build_reward_context(item_node(0), items, inter, rng), ContractViolation);
}

TEST_CASE("negatives are drawn with replacement only from a short pool") {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t i = 0; i < 5; ++i) pairs.emplace_back(0, i);
  auto inter = InteractionSet::from_pairs(1, 10, pairs);
  Rng rng(5);
  TupleList items(NodeKind::Item);
  for (std::uint32_t i = 0; i < 10; ++i) items.record(item_node(i), 1);
  auto ctx = build_reward_context(user_node(0), items, inter, rng);
  std::set<std::uint32_t> distinct;
  for (auto& n : ctx.sampled_negatives) distinct.insert(n.node.index);
  CHECK(distinct.size() == 5);

  TupleList few(NodeKind::Item);
  for (std::uint32_t i = 0; i < 5; ++i) few.record(item_node(i), 1);
  few.record(item_node(9), 3);
  auto short_pool = build_reward_context(user_node(0), few, inter, rng);
  CHECK(short_pool.sampled_negatives.size() == 5);
  for (auto& n : short_pool.sampled_negatives) CHECK(n.node == item_node(9));
}

TEST_CASE("random negatives avoid interacted nodes") {
  auto inter = InteractionSet::from_pairs(1, 6, {{0, 0}, {0, 1}});
  Rng rng(6);
  TupleList items(NodeKind::Item);
  items.record(item_node(0), 2);
  items.record(item_node(1), 2);
  auto ctx = build_random_negative_context(user_node(0), items, inter,
                                           [](NodeId n) { return 1 + n.index % 4; }, rng);
  REQUIRE(ctx.ok());
  CHECK(ctx.sampled_negatives.size() == 2);
  for (auto& n : ctx.sampled_negatives) {
    CHECK_FALSE(inter.contains(0, n.node.index));
    CHECK(n.action == 1 + n.node.index % 4);
  }
}

TEST_CASE("reward on hand-set one-dimensional embeddings") {
  // nodes: user 0, items 0..2 (rows 1..3); layers 0..2
  const std::vector<std::vector<double>> e = {
      {0.5, 1.5, -0.25}, {2.0, -1.0, 0.75}, {-0.5, 0.25, 1.25}, {1.0, 3.0, -2.0}};
  auto table = one_dim_table(1, 3, e);
  auto spec = PoolingSpec::uniform(2);
  RewardContext ctx;
  ctx.status = ContextStatus::Ok;
  ctx.positives = {{item_node(0), 1}, {item_node(1), 2}};
  ctx.sampled_negatives = {{item_node(2), 2}, {item_node(2), 1}};

  // Literal evaluation: mean pooling over layers 0..a, means over tuples,
  // then margin of the chosen depth over the summed margins of all depths.
  auto pooled = [&](std::size_t row, int a) {
    double s = 0;
    for (int k = 0; k <= a; ++k) s += e[row][k];
    return s / (a + 1);
  };
  const double ep = (pooled(1, 1) + pooled(2, 2)) / 2;
  const double en = (pooled(3, 2) + pooled(3, 1)) / 2;
  const double denom = (pooled(0, 1) * ep - pooled(0, 1) * en) + (pooled(0, 2) * ep - pooled(0, 2) * en);
  for (int a = 1; a <= 2; ++a) {
    const double expect = (pooled(0, a) * ep - pooled(0, a) * en) / denom;
    auto r = reward(user_node(0), static_cast<std::uint32_t>(a), ctx, table, spec);
    CHECK(std::abs(r.value - expect) <= 1e-12);
  }
  CHECK_THROWS_AS(reward(user_node(0), 3, ctx, table, spec), ContractViolation);
}

TEST_CASE("reward is zero when positive and negative means coincide") {
  Rng rng(7);
  auto inter = oracle::random_bipartite(5, 5, 0.5, rng);
  Graph g(inter, {}, 0);
  auto params = GnnParams::init(g.n_nodes(), 4, rng, 1.0);
  auto table = propagate(g, params, 4);
  auto spec = PoolingSpec::uniform(4);
  RewardContext ctx;
  ctx.status = ContextStatus::Ok;
  ctx.positives = {{item_node(1), 2}, {item_node(3), 1}};
  ctx.sampled_negatives = {{item_node(3), 1}, {item_node(1), 2}};
  for (std::uint32_t a = 1; a <= 4; ++a) CHECK(reward(user_node(0), a, ctx, table, spec).value == 0.0);
}

TEST_CASE("reward is invariant to positive rescaling of embeddings") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto inter = oracle::random_bipartite(6, 6, 0.4, rng);
    Graph g(inter, {}, 0);
    auto params = GnnParams::init(g.n_nodes(), 3, rng, 1.0);
    auto spec = PoolingSpec::uniform(4, trial % 2 ? PoolingMode::Concat : PoolingMode::Sum);
    RewardContext ctx;
    ctx.status = ContextStatus::Ok;
    for (int k = 0; k < 3; ++k) {
      ctx.positives.push_back({item_node(static_cast<std::uint32_t>(rng.uniform_index(6))), 1 + static_cast<std::uint32_t>(rng.uniform_index(4))});
      ctx.sampled_negatives.push_back({item_node(static_cast<std::uint32_t>(rng.uniform_index(6))), 1 + static_cast<std::uint32_t>(rng.uniform_index(4))});
    }
    const double alpha = 0.1 + 5 * rng.uniform();
    auto base = propagate(g, params, 4);
    auto scaled = propagate(g, Matrix(alpha * params.layer0), 4);
    for (std::uint32_t a = 1; a <= 4; ++a) {
      auto r1 = reward(user_node(2), a, ctx, base, spec);
      auto r2 = reward(user_node(2), a, ctx, scaled, spec);
      if (r1.guarded) continue;
      CHECK(std::abs(r1.value - r2.value) <= 1e-9 * std::max(1.0, std::abs(r1.value)));
    }
  }
}

TEST_CASE("rewards over all actions sum to one") {
  Rng rng(9);
  auto inter = oracle::random_bipartite(6, 6, 0.4, rng);
  Graph g(inter, {}, 0);
  auto table = propagate(g, GnnParams::init(g.n_nodes(), 3, rng, 1.0), 4);
  auto spec = PoolingSpec::uniform(4);
  RewardContext ctx;
  ctx.status = ContextStatus::Ok;
  ctx.positives = {{item_node(0), 2}};
  ctx.sampled_negatives = {{item_node(4), 3}};
  double total = 0;
  for (std::uint32_t a = 1; a <= 4; ++a) total += reward(user_node(1), a, ctx, table, spec).value;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}
