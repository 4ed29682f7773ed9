// Acceptance suite: one PASS/FAIL line per criterion.
//
//   hopwise_acceptance            run everything
//   hopwise_acceptance 1 4 11     run a subset
//
// HOPWISE_ML100K may name a dataset directory written by `hopwise ingest`
// (MovieLens-100k or similar); criterion 7 then also runs there.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hopwise/checkpoint.hpp"
#include "hopwise/dataset.hpp"
#include "hopwise/dqn.hpp"
#include "hopwise/eval.hpp"
#include "hopwise/gnn.hpp"
#include "hopwise/mdp.hpp"
#include "hopwise/synthetic.hpp"
#include "hopwise/trainer.hpp"
#include "support/fd.hpp"
#include "support/oracles.hpp"
#include "support/small_run.hpp"

using namespace hopwise;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

std::uint32_t draw(Rng& rng, std::uint32_t n) { return static_cast<std::uint32_t>(rng.uniform_index(n)); }

// ---------------------------------------------------------------- 1

Outcome propagation_oracle() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0;
  std::uint32_t largest = 0;
  for (int g = 0; g < 50; ++g) {
    const std::uint32_t U = 5 + draw(rng, 60), I = 5 + draw(rng, 60);
    const std::uint32_t E = g % 2 ? draw(rng, 40) : 0;
    auto inter = oracle::random_bipartite(U, I, 0.02 + 0.1 * rng.uniform(), rng);
    auto triples = oracle::random_triples(I, E, E * 2, rng);
    Graph graph(inter, triples, E);
    largest = std::max(largest, graph.n_nodes());
    Matrix e0 = random_matrix(graph.n_nodes(), 1 + draw(rng, 8), rng);
    auto table = propagate(graph, e0, 4);
    auto expect = oracle::matrix_power_layers(
        oracle::normalized(oracle::dense_adjacency(inter, triples, E)), e0, 4);
    for (std::uint32_t k = 0; k <= 4; ++k)
      worst = std::max(worst, (Eigen::MatrixXd(table.layer(k)) - expect[k]).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 10 && largest <= 200,
          fmt("50 graphs up to %u nodes, max abs error %.2e, %.2fs", largest, worst, secs)};
}

// ---------------------------------------------------------------- 2

Outcome gradient_check() {
  const auto t0 = Clock::now();
  Rng rng(202);
  const double h = 1e-5;
  double worst_gnn = 0, worst_dqn = 0;

  for (int trial = 0; trial < 20; ++trial) {
    const std::uint32_t U = 3 + draw(rng, 5), I = 3 + draw(rng, 5), E = trial % 2 ? 3 : 0;
    auto inter = oracle::random_bipartite(U, I, 0.4, rng);
    auto triples = oracle::random_triples(I, E, 4, rng);
    Graph g(inter, triples, E);
    const std::uint32_t n_max = 1 + draw(rng, 4);
    auto spec = PoolingSpec::uniform(n_max, trial % 4 == 3 ? PoolingMode::Concat : PoolingMode::Sum);
    Matrix e0 = random_matrix(g.n_nodes(), 2 + draw(rng, 3), rng, 0.5);
    std::vector<BprSample> samples;
    for (int k = 0; k < 6; ++k) {
      auto act = [&] { return 1 + draw(rng, n_max); };
      samples.push_back({{user_node(draw(rng, U)), act()}, {item_node(draw(rng, I)), act()},
                         {item_node(draw(rng, I)), act()}});
    }
    const double l2 = 0.01;
    auto grad = bpr_gradient(g, propagate(g, e0, n_max), samples, spec, l2);
    for (Eigen::Index r = 0; r < e0.rows(); ++r)
      for (Eigen::Index c = 0; c < e0.cols(); ++c) {
        Matrix plus = e0, minus = e0;
        plus(r, c) += h;
        minus(r, c) -= h;
        const double fd = (bpr_loss(propagate(g, plus, n_max), samples, spec, l2) -
                           bpr_loss(propagate(g, minus, n_max), samples, spec, l2)) / (2 * h);
        worst_gnn = std::max(worst_gnn, oracle::rel_error(grad(r, c), fd));
      }
  }

  for (int trial = 0; trial < 20; ++trial) {
    auto inter = oracle::random_bipartite(8, 8, 0.3, rng);
    Graph g(inter, {}, 0);
    const std::uint32_t dim = 2 + draw(rng, 4);
    auto table = propagate(g, GnnParams::init(g.n_nodes(), dim, rng, 1.0), 4);
    StateEncoder enc(table);
    const std::uint32_t hidden = 3 + draw(rng, 6);
    auto net = QNetwork::init(dim, hidden, 4, rng);
    auto target = QNetwork::init(dim, hidden, 4, rng);
    std::vector<Transition> batch;
    for (int k = 0; k < 5; ++k) {
      const bool item = rng.uniform() < 0.5;
      auto node = [&] { return item ? item_node(draw(rng, 8)) : user_node(draw(rng, 8)); };
      batch.push_back({node(), 1 + draw(rng, 4), rng.normal(), node()});
    }
    const double gamma = 0.5 + 0.49 * rng.uniform();
    auto grad = td_gradient(net, target, batch, gamma, enc);
    auto probe = [&](auto member, const auto& analytic) {
      auto& m = net.*member;
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double keep = m.data()[i];
        m.data()[i] = keep + h;
        const double up = td_loss_sum(net, target, batch, gamma, enc);
        m.data()[i] = keep - h;
        const double down = td_loss_sum(net, target, batch, gamma, enc);
        m.data()[i] = keep;
        worst_dqn = std::max(worst_dqn, oracle::rel_error(analytic.data()[i], (up - down) / (2 * h)));
      }
    };
    probe(&QNetwork::w1, grad.w1);
    probe(&QNetwork::b1, grad.b1);
    probe(&QNetwork::w2, grad.w2);
    probe(&QNetwork::b2, grad.b2);
  }
  const double secs = seconds_since(t0);
  return {worst_gnn < 1e-4 && worst_dqn < 1e-4 && secs < 30,
          fmt("max rel error BPR %.2e, TD %.2e, %.2fs", worst_gnn, worst_dqn, secs)};
}

// ---------------------------------------------------------------- 3

Outcome next_state_law() {
  Rng rng(303);
  double min_p = 1.0;
  std::size_t stray = 0, tested = 0, draws_total = 0;
  std::string retests;
  bool retests_ok = true;
  for (int gi = 0; gi < 20; ++gi) {
    const std::uint32_t U = 20 + draw(rng, 40), I = 20 + draw(rng, 40);
    const std::uint32_t E = gi % 2 ? 5 + draw(rng, 10) : 0;
    auto inter = oracle::random_bipartite(U, I, 0.04, rng);
    auto triples = oracle::random_triples(I, E, E * 3, rng);
    Graph g(inter, triples, E);
    auto adj = oracle::adjacency_lists(oracle::dense_adjacency(inter, triples, E));

    // A start with at least two candidates, so the test has content.
    for (int attempt = 0; attempt < 100; ++attempt) {
      const NodeId start = rng.uniform() < 0.5 ? user_node(draw(rng, U)) : item_node(draw(rng, I));
      const std::uint32_t action = 1 + draw(rng, 4);
      std::map<std::uint32_t, std::size_t> candidates;
      for (auto v : oracle::bfs(adj, g.global(start), action))
        if (g.node(v).kind == start.kind) candidates[v] = 0;
      if (candidates.size() < 2) continue;

      auto sample_p = [&](int n_draws) {
        auto counts = candidates;
        for (int k = 0; k < n_draws; ++k) {
          const NodeId s = next_state(start, action, g, rng);
          auto it = counts.find(g.global(s));
          if (s.kind != start.kind || it == counts.end()) ++stray;
          else ++it->second;
        }
        draws_total += static_cast<std::size_t>(n_draws);
        std::vector<std::size_t> c;
        for (auto& [_, n] : counts) c.push_back(n);
        return oracle::chi_square_uniform_p(c);
      };
      const double p = sample_p(12'000);
      min_p = std::min(min_p, p);
      // 20 exact tests at 0.01 fail somewhere about one run in five; a
      // borderline graph gets one independent sample 100x larger.
      if (p <= 0.01) {
        const double again = sample_p(1'200'000);
        retests += fmt("; graph %d p %.4f, retest p %.4f", gi, p, again);
        retests_ok = retests_ok && again > 0.01;
      }
      ++tested;
      break;
    }
  }
  return {tested == 20 && stray == 0 && retests_ok,
          fmt("%zu graphs, %zu draws, min chi-square p %.3f, stray samples %zu", tested, draws_total,
              min_p, stray) + retests};
}

// ---------------------------------------------------------------- 4

Outcome reward_identities() {
  Rng rng(404);
  bool zero_ok = true;
  double worst_scale = 0, worst_hand = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto inter = oracle::random_bipartite(6, 6, 0.4, rng);
    Graph g(inter, {}, 0);
    auto params = GnnParams::init(g.n_nodes(), 3, rng, 1.0);
    auto spec = PoolingSpec::uniform(4, trial % 2 ? PoolingMode::Concat : PoolingMode::Sum);
    auto base = propagate(g, params, 4);
    const NodeId state = user_node(draw(rng, 6));

    RewardContext same;
    same.status = ContextStatus::Ok;
    for (int k = 0; k < 3; ++k) same.positives.push_back({item_node(draw(rng, 6)), 1 + draw(rng, 4)});
    same.sampled_negatives = same.positives;
    std::reverse(same.sampled_negatives.begin(), same.sampled_negatives.end());
    for (std::uint32_t a = 1; a <= 4; ++a) zero_ok = zero_ok && reward(state, a, same, base, spec).value == 0.0;

    RewardContext ctx;
    ctx.status = ContextStatus::Ok;
    for (int k = 0; k < 3; ++k) {
      ctx.positives.push_back({item_node(draw(rng, 6)), 1 + draw(rng, 4)});
      ctx.sampled_negatives.push_back({item_node(draw(rng, 6)), 1 + draw(rng, 4)});
    }
    const double alpha = 0.05 + 10 * rng.uniform();
    auto scaled = propagate(g, Matrix(alpha * params.layer0), 4);
    for (std::uint32_t a = 1; a <= 4; ++a) {
      auto r1 = reward(state, a, ctx, base, spec);
      auto r2 = reward(state, a, ctx, scaled, spec);
      if (r1.guarded || r2.guarded) continue;
      worst_scale = std::max(worst_scale, std::abs(r1.value - r2.value) / std::max(1.0, std::abs(r1.value)));
    }
  }

  // One-dimensional embeddings, every quantity written out by hand:
  // user u0 and items i0..i2 over layers 0..2.
  const double e[4][3] = {{0.5, 1.5, -0.25}, {2.0, -1.0, 0.75}, {-0.5, 0.25, 1.25}, {1.0, 3.0, -2.0}};
  EmbeddingTable t;
  t.dim = 1;
  t.n_max = 2;
  t.n_users = 1;
  t.n_items = 3;
  t.layers.assign(3, Matrix::Zero(4, 1));
  for (int x = 0; x < 4; ++x)
    for (int k = 0; k < 3; ++k) t.layers[k](x, 0) = e[x][k];
  RewardContext ctx;
  ctx.status = ContextStatus::Ok;
  ctx.positives = {{item_node(0), 1}, {item_node(1), 2}};
  ctx.sampled_negatives = {{item_node(2), 2}, {item_node(2), 1}};
  // u at depth 1: (0.5 + 1.5)/2 = 1; depth 2: (0.5 + 1.5 - 0.25)/3 = 7/12
  // positives: i0@1 = 0.5, i1@2 = (-0.5 + 0.25 + 1.25)/3 = 1/3  -> mean 5/12
  // negatives: i2@2 = (1 + 3 - 2)/3 = 2/3, i2@1 = 2              -> mean 4/3
  // margins: 1 * (5/12 - 4/3) = -11/12, 7/12 * (-11/12) = -77/144
  const double m1 = -11.0 / 12.0, m2 = -77.0 / 144.0;
  const double expect[2] = {m1 / (m1 + m2), m2 / (m1 + m2)};
  auto spec = PoolingSpec::uniform(2);
  for (std::uint32_t a = 1; a <= 2; ++a)
    worst_hand = std::max(worst_hand, std::abs(reward(user_node(0), a, ctx, t, spec).value - expect[a - 1]));

  return {zero_ok && worst_scale <= 1e-9 && worst_hand <= 1e-12,
          fmt("coinciding means give exact zero: %s; scale drift %.1e; hand case error %.1e",
              zero_ok ? "yes" : "no", worst_scale, worst_hand)};
}

// ---------------------------------------------------------------- 5

Outcome dqn_mechanics() {
  Rng rng(505);
  auto inter = oracle::random_bipartite(10, 10, 0.3, rng);
  Graph g(inter, {}, 0);
  auto table = propagate(g, GnnParams::init(g.n_nodes(), 4, rng, 1.0), 4);
  StateEncoder enc(table);

  bool gamma_zero = true;
  auto target = QNetwork::init(4, 8, 4, rng);
  for (int k = 0; k < 50; ++k) {
    Transition t{user_node(draw(rng, 10)), 1 + draw(rng, 4), rng.normal(), user_node(draw(rng, 10))};
    gamma_zero = gamma_zero && td_target(target, enc, t, 0.0) == t.reward;
  }

  bool monotone = true;
  auto net = QNetwork::init(4, 8, 4, rng, 1e-4);
  std::vector<Transition> one{{item_node(2), 3, 1.5, item_node(5)}};
  double prev = td_loss_sum(net, target, one, 0.98, enc);
  for (int k = 0; k < 10; ++k) {
    dqn_update(net, target, one, 0.98, enc);
    const double now = td_loss_sum(net, target, one, 0.98, enc);
    monotone = monotone && now <= prev;
    prev = now;
  }

  // Target freezing inside the training loop.
  auto data = oracle::tiny_planted(13);
  Graph tg = build_train_graph(data.data);
  auto cfg = oracle::tiny_config();
  cfg.target_sync = 4;
  cfg.replay_capacity = 40;
  cfg.dqn_lr_user = cfg.dqn_lr_item = 0.01;
  Trainer trainer(tg, data.data.split.validation, cfg);
  bool frozen = true, capacity_ok = true;
  for (std::uint32_t z = 0; z < 12; ++z) {
    const QNetwork before_u = trainer.stack(NodeKind::User).target;
    const QNetwork before_i = trainer.stack(NodeKind::Item).target;
    const auto stats = trainer.run_epoch();
    if (z % cfg.target_sync != 0)
      frozen = frozen && trainer.stack(NodeKind::User).target == before_u &&
               trainer.stack(NodeKind::Item).target == before_i;
    frozen = frozen && stats.synced_targets == (z % cfg.target_sync == 0);
    for (auto side : {NodeKind::User, NodeKind::Item})
      capacity_ok = capacity_ok && trainer.stack(side).memory.size() <= cfg.replay_capacity;
  }

  ReplayMemory mem(5, 1);
  for (std::uint32_t k = 0; k < 13; ++k) mem.push({user_node(k), 1, double(k), user_node(k)});
  auto c = mem.contents();
  bool fifo = mem.size() == 5;
  for (std::size_t k = 0; k < c.size(); ++k) fifo = fifo && c[k].reward == 8.0 + static_cast<double>(k);

  return {gamma_zero && monotone && frozen && capacity_ok && fifo,
          fmt("gamma=0 target: %s; monotone TD loss: %s; frozen targets: %s; capacity and FIFO: %s",
              gamma_zero ? "ok" : "bad", monotone ? "ok" : "bad", frozen ? "ok" : "bad",
              capacity_ok && fifo ? "ok" : "bad")};
}

// ---------------------------------------------------------------- 6

Outcome metric_oracle() {
  Rng rng(606);
  double worst = 0;
  int instances = 0;
  while (instances < 100) {
    const std::uint32_t U = 3 + draw(rng, 6), I = 25 + draw(rng, 30);
    auto train = oracle::random_bipartite(U, I, 0.2, rng);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> test_pairs;
    for (std::uint32_t u = 0; u < U; ++u)
      for (std::uint32_t i = 0; i < I; ++i)
        if (!train.contains(u, i) && rng.uniform() < 0.15) test_pairs.emplace_back(u, i);
    auto test = InteractionSet::from_pairs(U, I, test_pairs);
    if (test.empty()) continue;
    Graph g(train, {}, 0);
    auto params = GnnParams::init(g.n_nodes(), 4, rng, 1.0);
    if (instances % 3 == 0) params.layer0 = params.layer0.array().round();
    auto table = propagate(g, params, 4);
    ActionAssignment a;
    for (std::uint32_t u = 0; u < U; ++u) a.user_actions.push_back(1 + draw(rng, 4));
    for (std::uint32_t i = 0; i < I; ++i) a.item_actions.push_back(1 + draw(rng, 4));
    auto result = evaluate_against(a, table, PoolingSpec::uniform(4), train, test, 20);

    double nd = 0, rc = 0;
    std::size_t users = 0;
    auto mean_layers = [&](std::uint32_t row, std::uint32_t act) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(4);
      for (std::uint32_t k = 0; k <= act; ++k) v += table.layers[k].row(row).transpose();
      return Eigen::VectorXd(v / (act + 1.0));
    };
    for (std::uint32_t u = 0; u < U; ++u) {
      auto rel_span = test.items_of(u);
      if (rel_span.empty()) continue;
      ++users;
      const auto eu = mean_layers(u, a.user_actions[u]);
      Eigen::VectorXd scores(I);
      for (std::uint32_t i = 0; i < I; ++i) scores(i) = eu.dot(mean_layers(U + i, a.item_actions[i]));
      auto tr = train.items_of(u);
      auto top = oracle::brute_top_k(scores, {tr.begin(), tr.end()}, 20);
      std::vector<std::uint32_t> rel(rel_span.begin(), rel_span.end());
      nd += oracle::ndcg(top, rel, 20);
      rc += oracle::recall(top, rel);
    }
    if (result.users.size() != users) worst = 1.0;
    worst = std::max({worst, std::abs(result.ndcg - nd / users), std::abs(result.recall - rc / users)});
    ++instances;
  }
  const std::vector<std::uint32_t> top{4, 0, 9}, rel{4, 9};
  const double worked = ndcg_at_k(top, rel, 3);
  // DCG 1 + 1/log2(4) over IDCG 1 + 1/log2(3), about 0.91972
  const bool worked_ok = std::abs(worked - 1.5 / (1.0 + 1.0 / std::log2(3.0))) <= 1e-12 &&
                         std::abs(worked - 0.9198) < 1e-4 && recall_at_k(top, rel) == 1.0;
  return {worst <= 1e-12 && worked_ok,
          fmt("100 instances, max deviation %.1e; worked example nDCG@3 = %.5f", worst, worked)};
}

// ---------------------------------------------------------------- 7, 8, 9

// Settings shared by every arm of the end-to-end comparison. Only the depth
// policy (and, for ablations, the DQN sharing or negative source) differs.
TrainConfig experiment_config() {
  TrainConfig c;
  c.epochs = 400;
  c.patience = 400;  // validation keeps creeping up late; see README
  c.gnn_lr = 0.005;
  // Picked by mean validation nDCG over the training seeds, not by test.
  c.trajectories_per_epoch = 100;
  c.dqn_lr_user = 0.01;
  c.dqn_lr_item = 0.01;
  return c;
}

constexpr std::uint64_t kDataSeed = 7;
constexpr std::uint64_t kTrainSeeds[] = {2024, 2025, 2026, 2027, 2028};

struct ArmRun {
  double ndcg = 0.0;
  double seconds = 0.0;
  std::vector<HistoryRow> history;
};

struct ArmSummary {
  std::string name;
  std::vector<ArmRun> runs;
  double mean() const {
    double s = 0;
    for (const auto& r : runs) s += r.ndcg;
    return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
  }
  double seconds() const {
    double s = 0;
    for (const auto& r : runs) s += r.seconds;
    return s;
  }
};

ArmRun run_arm(const Graph& graph, const Dataset& data, TrainConfig cfg) {
  const auto t0 = Clock::now();
  ArmRun out;
  if (cfg.fixed_depth > 0) {
    auto res = baseline_fixed_depth(graph, data.split, cfg.fixed_depth, cfg);
    out.ndcg = res.test.ndcg;
    out.history = std::move(res.report.history);
  } else {
    Trainer t(graph, data.split.validation, cfg);
    auto report = t.train();
    out.ndcg = evaluate(t.assign_actions(), t.table(), t.pooling(), data.split, cfg.eval_k).ndcg;
    out.history = std::move(report.history);
  }
  out.seconds = seconds_since(t0);
  return out;
}

struct Experiment {
  std::vector<ArmSummary> fixed;  // depths 1..4
  ArmSummary full{"adaptive", {}};
  ArmSummary shared{"shared-dqn", {}};
  ArmSummary random_neg{"random-negatives", {}};
  bool with_ablations = false;

  const ArmSummary& best_fixed() const {
    return *std::max_element(fixed.begin(), fixed.end(),
                             [](const auto& a, const auto& b) { return a.mean() < b.mean(); });
  }
};

Experiment run_experiment(const Dataset& data, std::span<const std::uint64_t> seeds, bool ablations) {
  Graph graph = build_train_graph(data);
  Experiment ex;
  ex.with_ablations = ablations;
  for (std::uint32_t d = 1; d <= 4; ++d) ex.fixed.push_back({"depth-" + std::to_string(d), {}});
  for (auto seed : seeds) {
    TrainConfig base = experiment_config();
    base.seed = seed;
    for (std::uint32_t d = 1; d <= 4; ++d) {
      TrainConfig c = base;
      c.fixed_depth = d;
      ex.fixed[d - 1].runs.push_back(run_arm(graph, data, c));
    }
    ex.full.runs.push_back(run_arm(graph, data, base));
    if (ablations) {
      TrainConfig c = base;
      c.dual = false;
      ex.shared.runs.push_back(run_arm(graph, data, c));
      c = base;
      c.negatives = NegativeSource::Random;
      ex.random_neg.runs.push_back(run_arm(graph, data, c));
    }
    std::fprintf(stderr, "  seed %llu done\n", static_cast<unsigned long long>(seed));
  }
  return ex;
}

std::string arm_table(const Experiment& ex) {
  std::ostringstream s;
  for (const auto& a : ex.fixed) s << a.name << ' ' << fmt("%.4f", a.mean()) << ", ";
  s << "adaptive " << fmt("%.4f", ex.full.mean());
  return s.str();
}

double slowest_arm(const Experiment& ex) {
  double worst = ex.full.seconds();
  for (const auto& a : ex.fixed) worst = std::max(worst, a.seconds());
  return worst;
}

const Experiment& synthetic_experiment() {
  static const Experiment ex = [] {
    PlantedOptions o;
    o.seed = kDataSeed;
    auto planted = planted_depth_dataset(o);
    return run_experiment(planted.data, kTrainSeeds, true);
  }();
  return ex;
}

Outcome end_to_end() {
  const auto& ex = synthetic_experiment();
  const auto& best = ex.best_fixed();
  bool pass = ex.full.mean() >= best.mean() && slowest_arm(ex) < 15 * 60;
  std::string detail =
      fmt("planted data, mean test nDCG@20 over %zu seeds: ", ex.full.runs.size()) + arm_table(ex) +
      fmt("; best fixed %s; slowest arm %.0fs", best.name.c_str(), slowest_arm(ex));

  if (const char* dir = std::getenv("HOPWISE_ML100K"); dir && *dir) {
    Dataset ml = load_dataset(dir);
    const std::uint64_t seed[] = {kTrainSeeds[0]};
    auto mx = run_experiment(ml, seed, false);
    const bool ml_pass = mx.full.mean() >= mx.best_fixed().mean() && slowest_arm(mx) < 15 * 60;
    pass = pass && ml_pass;
    detail += "; " + std::string(dir) + ": " + arm_table(mx) + fmt("; slowest arm %.0fs", slowest_arm(mx));
  } else {
    detail += "; no real dataset given (HOPWISE_ML100K unset)";
  }
  return {pass, detail};
}

Outcome ablations() {
  const auto& ex = synthetic_experiment();
  const double full = ex.full.mean(), shared = ex.shared.mean(), rnd = ex.random_neg.mean();
  return {shared <= full + 0.002 && rnd <= full + 0.002,
          fmt("mean test nDCG@20: full %.4f, shared DQN %.4f, random negatives %.4f", full, shared, rnd)};
}

Outcome reward_trend() {
  const auto& ex = synthetic_experiment();
  const auto& history = ex.full.runs.front().history;
  auto window_mean = [&](std::size_t from, std::size_t to, bool user) {
    double s = 0;
    std::size_t n = 0;
    for (std::size_t k = from; k < to; ++k) {
      const auto& v = user ? history[k].user_reward : history[k].item_reward;
      if (v) {
        s += *v;
        ++n;
      }
    }
    return n ? s / static_cast<double>(n) : std::nan("");
  };
  const std::size_t n = history.size(), tenth = std::max<std::size_t>(1, n / 10);
  const double u0 = window_mean(0, tenth, true), u1 = window_mean(n - tenth, n, true);
  const double i0 = window_mean(0, tenth, false), i1 = window_mean(n - tenth, n, false);
  return {u1 > u0 || i1 > i0,
          fmt("seed %llu, %zu epochs: user reward %.4f -> %.4f, item reward %.4f -> %.4f",
              static_cast<unsigned long long>(kTrainSeeds[0]), n, u0, u1, i0, i1)};
}

// ---------------------------------------------------------------- 10

Outcome complexity_scaling() {
  const std::size_t sizes[] = {10'000, 40'000, 160'000};
  std::vector<double> xs, ys;
  std::string detail;
  for (auto n : sizes) {
    Dataset d = scaling_dataset(n, 10, 17);
    Graph g = build_train_graph(d);
    TrainConfig cfg;
    cfg.epochs = 1'000'000;  // keeps exploration near 1 for every measured epoch
    Trainer t(g, d.split.validation, cfg);
    t.run_epoch();  // warm-up
    std::vector<double> times;
    for (int r = 0; r < 5; ++r) {
      const auto t0 = Clock::now();
      t.run_epoch();
      times.push_back(seconds_since(t0));
    }
    std::nth_element(times.begin(), times.begin() + 2, times.end());
    xs.push_back(static_cast<double>(g.n_edges()));
    ys.push_back(times[2]);
    detail += fmt("|E|=%zu %.1fms; ", g.n_edges(), times[2] * 1e3);
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / 3;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / 3;
  double sxy = 0, sxx = 0, syy = 0;
  for (int k = 0; k < 3; ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  const double r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 0.0;
  return {r2 > 0.9, detail + fmt("linear fit R^2 = %.4f", r2)};
}

// ---------------------------------------------------------------- 11

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  oracle::TempDir tmp("acceptance_det");
  PlantedOptions o;
  o.n_users = 150;
  o.n_items = 150;
  o.seed = 21;
  auto planted = planted_depth_dataset(o);
  Graph g = build_train_graph(planted.data);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.dim = 16;
  cfg.seed = 99;

  const char* files[] = {"history.csv", "ranking.csv", "actions.csv", "checkpoint.bin"};
  for (const char* run : {"a", "b"}) {
    auto dir = tmp.path / run;
    std::filesystem::create_directories(dir);
    Trainer t(g, planted.data.split.validation, cfg);
    auto report = t.train();
    {
      std::ofstream h(dir / "history.csv");
      h << kHistoryHeader << '\n';
      for (const auto& row : report.history) h << format_history_row(row) << '\n';
    }
    auto actions = t.assign_actions();
    write_ranking_csv(dir / "ranking.csv", evaluate(actions, t.table(), t.pooling(), planted.data.split));
    write_actions_csv(dir / "actions.csv", actions);
    save_checkpoint(dir / "checkpoint.bin", t.checkpoint());
  }
  bool same = true;
  std::size_t bytes = 0;
  for (const char* f : files) {
    const auto a = slurp(tmp.path / "a" / f), b = slurp(tmp.path / "b" / f);
    same = same && !a.empty() && a == b;
    bytes += a.size();
  }
  return {same, fmt("4 artifacts, %zu bytes, %s", bytes, same ? "byte-identical" : "differ")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "propagation matches dense matrix powers", propagation_oracle},
      {2, "analytic gradients match central differences", gradient_check},
      {3, "next-state law is uniform over the BFS candidates", next_state_law},
      {4, "reward identities", reward_identities},
      {5, "DQN mechanics", dqn_mechanics},
      {6, "ranking metrics match a brute-force oracle", metric_oracle},
      {7, "adaptive depth matches or beats the best fixed depth", end_to_end},
      {8, "ablations do not beat the full model", ablations},
      {9, "reward rises over training", reward_trend},
      {10, "epoch time is linear in edge count", complexity_scaling},
      {11, "identical runs give identical artifacts", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2d  %s  [%s] (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed ? 1 : 0;
}
