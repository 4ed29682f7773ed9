#include "hopwise/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hopwise/error.hpp"

namespace hopwise {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double recall_at_k(std::span<const std::uint32_t> top_k, std::span<const std::uint32_t> relevant) {
  if (relevant.empty()) return 0.0;
  std::size_t hits = 0;
  for (auto i : top_k) hits += std::binary_search(relevant.begin(), relevant.end(), i);
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const std::uint32_t> top_k, std::span<const std::uint32_t> relevant,
                 std::uint32_t k) {
  if (relevant.empty()) return 0.0;
  double dcg = 0.0;
  const std::size_t n = std::min<std::size_t>(k, top_k.size());
  for (std::size_t r = 0; r < n; ++r)
    if (std::binary_search(relevant.begin(), relevant.end(), top_k[r]))
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  double idcg = 0.0;
  const std::size_t ideal = std::min<std::size_t>(k, relevant.size());
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

std::vector<std::uint32_t> top_k_items(const Vector& scores,
                                       std::span<const std::uint32_t> excluded_sorted,
                                       std::uint32_t k) {
  std::vector<std::uint32_t> candidates;
  candidates.reserve(static_cast<std::size_t>(scores.size()));
  std::size_t e = 0;
  for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(scores.size()); ++i) {
    while (e < excluded_sorted.size() && excluded_sorted[e] < i) ++e;
    if (e < excluded_sorted.size() && excluded_sorted[e] == i) continue;
    candidates.push_back(i);
  }
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  const std::size_t n = std::min<std::size_t>(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                    candidates.end(), better);
  candidates.resize(n);
  return candidates;
}

RankingResult evaluate_against(const ActionAssignment& assignment, const EmbeddingTable& table,
                               const PoolingSpec& spec, const InteractionSet& exclude,
                               const InteractionSet& targets, std::uint32_t k) {
  if (k == 0) throw ContractViolation("evaluate: K must be at least 1");
  if (assignment.user_actions.size() != table.n_users ||
      assignment.item_actions.size() != table.n_items)
    throw ContractViolation("evaluate: assignment does not cover every user and item");
  const std::uint32_t out_dim = spec.output_dim(table.dim);
  Matrix items(table.n_items, out_dim);
  for (std::uint32_t i = 0; i < table.n_items; ++i)
    items.row(i) = pool(table, item_node(i), assignment.item_actions[i], spec).transpose();

  RankingResult result;
  result.k = k;
  for (std::uint32_t u = 0; u < targets.n_users(); ++u) {
    const auto relevant = targets.items_of(u);
    if (relevant.empty()) {
      ++result.skipped_users;
      continue;
    }
    const Vector eu = pool(table, user_node(u), assignment.user_actions[u], spec);
    const Vector scores = items * eu;
    const auto excluded = u < exclude.n_users() ? exclude.items_of(u) : std::span<const std::uint32_t>{};
    UserRanking ranking;
    ranking.user = u;
    ranking.top_k = top_k_items(scores, excluded, k);
    ranking.recall = recall_at_k(ranking.top_k, relevant);
    ranking.ndcg = ndcg_at_k(ranking.top_k, relevant, k);
    result.recall += ranking.recall;
    result.ndcg += ranking.ndcg;
    result.users.push_back(std::move(ranking));
  }
  if (!result.users.empty()) {
    result.recall /= static_cast<double>(result.users.size());
    result.ndcg /= static_cast<double>(result.users.size());
  }
  return result;
}

RankingResult evaluate(const ActionAssignment& assignment, const EmbeddingTable& table,
                       const PoolingSpec& spec, const DataSplit& split, std::uint32_t k) {
  return evaluate_against(assignment, table, spec, split.train_and_validation(), split.test, k);
}

FixedDepthResult baseline_fixed_depth(const Graph& graph, const DataSplit& split,
                                      std::uint32_t depth, TrainConfig config) {
  if (depth < 1 || depth > config.n_max)
    throw ContractViolation("baseline_fixed_depth: depth outside 1..n_max");
  config.fixed_depth = depth;
  Trainer trainer(graph, split.validation, config);
  FixedDepthResult out;
  out.depth = depth;
  out.report = trainer.train();
  out.test = evaluate(trainer.assign_actions(), trainer.table(), trainer.pooling(), split,
                      config.eval_k);
  return out;
}

SparsityGroups sparsity_groups(const RankingResult& result, std::span<const std::uint32_t> counts,
                               std::uint32_t n_groups) {
  SparsityGroups out;
  if (result.users.empty() || n_groups == 0) {
    out.note = "no evaluated users";
    return out;
  }
  // interaction count -> (users, mass, ndcg sum)
  struct Bucket {
    std::uint32_t count;
    std::size_t users = 0;
    double ndcg = 0.0;
  };
  std::vector<Bucket> buckets;
  {
    std::vector<std::pair<std::uint32_t, double>> rows;
    for (const auto& r : result.users) rows.emplace_back(counts[r.user], r.ndcg);
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [c, nd] : rows) {
      if (buckets.empty() || buckets.back().count != c) buckets.push_back({c});
      ++buckets.back().users;
      buckets.back().ndcg += nd;
    }
  }
  double total = 0.0;
  for (const auto& b : buckets) total += static_cast<double>(b.count) * static_cast<double>(b.users);
  if (buckets.size() < n_groups) {
    out.note = "only " + std::to_string(buckets.size()) +
               " distinct interaction counts; groups merged";
  }

  double cumulative = 0.0;
  std::size_t b = 0;
  for (std::uint32_t g = 0; g < n_groups && b < buckets.size(); ++g) {
    SparsityGroup group;
    group.lower = buckets[b].count;
    double ndcg_sum = 0.0;
    auto take = [&] {
      group.users += buckets[b].users;
      group.interactions += static_cast<std::size_t>(buckets[b].count) * buckets[b].users;
      ndcg_sum += buckets[b].ndcg;
      cumulative += static_cast<double>(buckets[b].count) * static_cast<double>(buckets[b].users);
      ++b;
    };
    take();
    if (g + 1 == n_groups) {
      while (b < buckets.size()) take();
    } else {
      const double goal = total * static_cast<double>(g + 1) / static_cast<double>(n_groups);
      const std::size_t later_groups = n_groups - g - 1;
      // Extend while the next bucket moves the cumulative mass closer to the
      // quantile goal and enough buckets stay for the later groups.
      while (b < buckets.size() && buckets.size() - b > later_groups) {
        const double next = static_cast<double>(buckets[b].count) * static_cast<double>(buckets[b].users);
        if (std::abs(cumulative + next - goal) >= std::abs(cumulative - goal)) break;
        take();
      }
    }
    group.upper_exclusive = b < buckets.size() ? buckets[b].count : buckets.back().count + 1;
    group.ndcg = ndcg_sum / static_cast<double>(group.users);
    out.groups.push_back(group);
  }
  if (out.groups.size() < n_groups && out.note.empty())
    out.note = "formed " + std::to_string(out.groups.size()) + " groups";
  return out;
}

SparsityGroups sparsity_report(const RankingResult& result, const DataSplit& split) {
  const auto seen = split.train_and_validation();
  std::vector<std::uint32_t> counts(seen.n_users());
  for (std::uint32_t u = 0; u < seen.n_users(); ++u)
    counts[u] = static_cast<std::uint32_t>(seen.items_of(u).size());
  return sparsity_groups(result, counts, 4);
}

ActionDistribution action_distribution_report(const ActionAssignment& assignment,
                                              std::uint32_t n_actions) {
  ActionDistribution d;
  auto tally = [n_actions](const std::vector<std::uint32_t>& actions,
                           std::vector<std::size_t>& counts, std::vector<double>& percent) {
    counts.assign(n_actions, 0);
    for (auto a : actions) {
      if (a < 1 || a > n_actions) throw ContractViolation("action outside 1..n_actions");
      ++counts[a - 1];
    }
    percent.assign(n_actions, 0.0);
    if (actions.empty()) return;
    for (std::uint32_t a = 0; a < n_actions; ++a)
      percent[a] = 100.0 * static_cast<double>(counts[a]) / static_cast<double>(actions.size());
  };
  tally(assignment.user_actions, d.user_counts, d.user_percent);
  tally(assignment.item_actions, d.item_counts, d.item_percent);
  return d;
}

std::vector<std::optional<double>> moving_average(std::span<const std::optional<double>> series,
                                                  std::uint32_t window) {
  std::vector<std::optional<double>> out(series.size());
  std::vector<double> seen;
  double running = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i]) {
      seen.push_back(*series[i]);
      running += *series[i];
    }
    if (seen.empty()) continue;
    if (window == 0 || seen.size() <= window) {
      out[i] = running / static_cast<double>(seen.size());
    } else {
      double s = 0.0;
      for (std::size_t j = seen.size() - window; j < seen.size(); ++j) s += seen[j];
      out[i] = s / static_cast<double>(window);
    }
  }
  return out;
}

std::vector<RewardPoint> reward_curve(std::span<const HistoryRow> history, std::uint32_t window) {
  std::vector<std::optional<double>> user, item;
  for (const auto& r : history) {
    user.push_back(r.user_reward);
    item.push_back(r.item_reward);
  }
  const auto user_trend = moving_average(user, window);
  const auto item_trend = moving_average(item, window);
  std::vector<RewardPoint> out;
  for (std::size_t i = 0; i < history.size(); ++i)
    out.push_back({history[i].epoch, user[i], item[i], user_trend[i], item_trend[i]});
  return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> opt_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string opt_str(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::vector<HistoryRow> read_history(const std::filesystem::path& history_csv) {
  std::ifstream in(history_csv);
  if (!in) throw Error("cannot open " + history_csv.string());
  std::string line;
  if (!std::getline(in, line) || line != kHistoryHeader)
    throw ParseError(history_csv.string(), 1, "unexpected history header");
  std::vector<HistoryRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 9) throw ParseError(history_csv.string(), line_no, "expected 9 columns");
    try {
      rows.push_back({static_cast<std::uint32_t>(std::stoul(cells[0])), std::stod(cells[1]),
                      opt_cell(cells[2]), opt_cell(cells[3]), std::stod(cells[4]),
                      std::stod(cells[5]), std::stod(cells[6]), opt_cell(cells[7]),
                      opt_cell(cells[8])});
    } catch (const std::logic_error&) {
      throw ParseError(history_csv.string(), line_no, "malformed number");
    }
  }
  return rows;
}

std::vector<RewardPoint> reward_curve_export(const std::filesystem::path& history_csv,
                                             std::uint32_t window) {
  const auto rows = read_history(history_csv);
  return reward_curve(rows, window);
}

void write_ranking_csv(const std::filesystem::path& path, const RankingResult& result) {
  auto out = open_csv(path);
  out << "user,recall,ndcg,top_k\n";
  for (const auto& u : result.users) {
    out << u.user << ',' << format_double(u.recall) << ',' << format_double(u.ndcg) << ',';
    for (std::size_t i = 0; i < u.top_k.size(); ++i) out << (i ? " " : "") << u.top_k[i];
    out << '\n';
  }
}

void write_actions_csv(const std::filesystem::path& path, const ActionAssignment& assignment) {
  auto out = open_csv(path);
  out << "side,node,action\n";
  for (std::size_t u = 0; u < assignment.user_actions.size(); ++u)
    out << "user," << u << ',' << assignment.user_actions[u] << '\n';
  for (std::size_t i = 0; i < assignment.item_actions.size(); ++i)
    out << "item," << i << ',' << assignment.item_actions[i] << '\n';
}

ActionAssignment read_actions_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "side,node,action") throw ParseError(path.string(), 1, "unexpected actions header");
  ActionAssignment a;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3) throw ParseError(path.string(), line_no, "expected 3 columns");
    auto& dst = cells[0] == "user" ? a.user_actions : a.item_actions;
    const auto idx = std::stoul(cells[1]);
    if (idx != dst.size()) throw ParseError(path.string(), line_no, "nodes must be listed in order");
    dst.push_back(static_cast<std::uint32_t>(std::stoul(cells[2])));
  }
  return a;
}

void write_sparsity_csv(const std::filesystem::path& path, const SparsityGroups& groups) {
  auto out = open_csv(path);
  out << "group,min_interactions,upper_exclusive,users,interactions,ndcg\n";
  for (std::size_t g = 0; g < groups.groups.size(); ++g) {
    const auto& x = groups.groups[g];
    out << g << ',' << x.lower << ',' << x.upper_exclusive << ',' << x.users << ','
        << x.interactions << ',' << format_double(x.ndcg) << '\n';
  }
  if (!groups.note.empty()) out << "# " << groups.note << '\n';
}

void write_distribution_csv(const std::filesystem::path& path, const ActionDistribution& dist) {
  auto out = open_csv(path);
  out << "side,action,count,percent\n";
  for (std::size_t a = 0; a < dist.user_counts.size(); ++a)
    out << "user," << a + 1 << ',' << dist.user_counts[a] << ',' << format_double(dist.user_percent[a])
        << '\n';
  for (std::size_t a = 0; a < dist.item_counts.size(); ++a)
    out << "item," << a + 1 << ',' << dist.item_counts[a] << ',' << format_double(dist.item_percent[a])
        << '\n';
}

void write_reward_curve_csv(const std::filesystem::path& path, std::span<const RewardPoint> curve) {
  auto out = open_csv(path);
  out << "epoch,user_reward,item_reward,user_trend,item_trend\n";
  for (const auto& p : curve)
    out << p.epoch << ',' << opt_str(p.user_reward) << ',' << opt_str(p.item_reward) << ','
        << opt_str(p.user_trend) << ',' << opt_str(p.item_trend) << '\n';
}

}  // namespace hopwise
