#include "hopwise/graph_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "hopwise/error.hpp"
#include "hopwise/rng.hpp"

namespace hopwise {

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::User: return "user";
    case NodeKind::Item: return "item";
    case NodeKind::Entity: return "entity";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// InteractionSet

InteractionSet::InteractionSet(std::uint32_t n_users, std::uint32_t n_items)
    : user_items_(n_users), item_users_(n_items) {}

InteractionSet InteractionSet::from_pairs(
    std::uint32_t n_users, std::uint32_t n_items,
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  InteractionSet set(n_users, n_items);
  for (auto [u, i] : pairs) {
    if (u >= n_users || i >= n_items) {
      throw ContractViolation("interaction (" + std::to_string(u) + ", " + std::to_string(i) +
                              ") out of range");
    }
    set.user_items_[u].push_back(i);
    set.item_users_[i].push_back(u);
  }
  // Users were visited in ascending order so item lists are already sorted.
  set.n_pairs_ = pairs.size();
  return set;
}

std::span<const std::uint32_t> InteractionSet::neighbors_of(NodeId node) const {
  switch (node.kind) {
    case NodeKind::User: return items_of(node.index);
    case NodeKind::Item: return users_of(node.index);
    case NodeKind::Entity: break;
  }
  return {};
}

bool InteractionSet::contains(std::uint32_t user, std::uint32_t item) const {
  if (user >= n_users()) return false;
  const auto& items = user_items_[user];
  return std::binary_search(items.begin(), items.end(), item);
}

bool InteractionSet::interacted(NodeId node, NodeId other) const {
  if (node.kind == NodeKind::User && other.kind == NodeKind::Item)
    return contains(node.index, other.index);
  if (node.kind == NodeKind::Item && other.kind == NodeKind::User)
    return contains(other.index, node.index);
  return false;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> InteractionSet::pairs() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(n_pairs_);
  for (std::uint32_t u = 0; u < n_users(); ++u)
    for (auto i : user_items_[u]) out.emplace_back(u, i);
  return out;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

std::vector<std::uint64_t> parse_line(const std::string& file, std::size_t line_no,
                                      const std::string& line) {
  std::vector<std::uint64_t> tokens;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    std::uint64_t v = 0;
    if (tok.empty() || tok.size() > 19 ||
        !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw ParseError(file, line_no, "expected non-negative integer, got '" + tok + "'");
    }
    for (char c : tok) v = v * 10 + static_cast<std::uint64_t>(c - '0');
    tokens.push_back(v);
  }
  return tokens;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

IdMap densify(std::vector<std::uint64_t> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  IdMap map;
  for (std::uint32_t i = 0; i < ids.size(); ++i) map.emplace(ids[i], i);
  return map;
}

}  // namespace

std::vector<std::pair<std::uint64_t, std::uint64_t>> k_core_filter(
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs, std::uint32_t core) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  if (core <= 1) return pairs;
  for (;;) {
    std::unordered_map<std::uint64_t, std::uint32_t> user_deg, item_deg;
    for (auto [u, i] : pairs) {
      ++user_deg[u];
      ++item_deg[i];
    }
    const auto before = pairs.size();
    std::erase_if(pairs, [&](const auto& p) {
      return user_deg[p.first] < core || item_deg[p.second] < core;
    });
    if (pairs.size() == before) return pairs;
  }
}

LoadedInteractions load_interactions(const std::filesystem::path& path, std::uint32_t core) {
  if (core == 0) throw ContractViolation("core must be positive");
  auto in = open_input(path);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = parse_line(path.string(), line_no, line);
    if (tokens.empty()) continue;
    for (std::size_t k = 1; k < tokens.size(); ++k) raw.emplace_back(tokens[0], tokens[k]);
  }
  auto kept = k_core_filter(std::move(raw), core);
  if (kept.empty()) throw Error(path.string() + ": graph emptied by core filter (core=" +
                                std::to_string(core) + ")");

  std::vector<std::uint64_t> users, items;
  for (auto [u, i] : kept) {
    users.push_back(u);
    items.push_back(i);
  }
  LoadedInteractions out;
  out.user_ids = densify(std::move(users));
  out.item_ids = densify(std::move(items));
  std::vector<std::pair<std::uint32_t, std::uint32_t>> dense;
  dense.reserve(kept.size());
  for (auto [u, i] : kept) dense.emplace_back(out.user_ids.at(u), out.item_ids.at(i));
  out.interactions = InteractionSet::from_pairs(static_cast<std::uint32_t>(out.user_ids.size()),
                                                static_cast<std::uint32_t>(out.item_ids.size()),
                                                std::move(dense));
  return out;
}

KgData load_kg(const std::filesystem::path& path, const KgLoadOptions& options) {
  auto in = open_input(path);
  struct Raw {
    std::uint64_t head, relation, tail;
  };
  std::vector<Raw> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = parse_line(path.string(), line_no, line);
    if (tokens.empty()) continue;
    if (tokens.size() != 3) throw ParseError(path.string(), line_no, "expected 'head relation tail'");
    for (std::uint64_t id : {tokens[0], tokens[2]}) {
      if (options.entity_count != 0 && id >= options.entity_count) {
        throw ParseError(path.string(), line_no,
                         "dangling entity id " + std::to_string(id) + " >= declared entity count " +
                             std::to_string(options.entity_count));
      }
    }
    raw.push_back({tokens[0], tokens[1], tokens[2]});
  }

  KgData kg;
  // Triples touching an item that did not survive coring are dropped before
  // the entity and relation vocabularies are built.
  auto item_known = [&](std::uint64_t id) {
    return id >= options.item_id_bound || options.item_ids == nullptr ||
           options.item_ids->contains(id);
  };
  std::erase_if(raw, [&](const Raw& t) {
    const bool drop = !item_known(t.head) || !item_known(t.tail);
    kg.dropped_triples += drop;
    return drop;
  });
  std::vector<std::uint64_t> entities, relations;
  for (const auto& t : raw) {
    relations.push_back(t.relation);
    if (t.head >= options.item_id_bound) entities.push_back(t.head);
    if (t.tail >= options.item_id_bound) entities.push_back(t.tail);
  }
  kg.entity_ids = densify(std::move(entities));
  kg.relation_ids = densify(std::move(relations));
  kg.n_entities = static_cast<std::uint32_t>(kg.entity_ids.size());
  kg.n_relations = static_cast<std::uint32_t>(kg.relation_ids.size());

  auto resolve = [&](std::uint64_t id) -> NodeId {
    if (id >= options.item_id_bound) return entity_node(kg.entity_ids.at(id));
    if (options.item_ids == nullptr) return item_node(static_cast<std::uint32_t>(id));
    return item_node(options.item_ids->at(id));
  };
  kg.triples.reserve(raw.size());
  for (const auto& t : raw)
    kg.triples.push_back({resolve(t.head), kg.relation_ids.at(t.relation), resolve(t.tail)});
  return kg;
}

// ---------------------------------------------------------------------------
// Split

InteractionSet DataSplit::train_and_validation() const {
  auto pairs = train.pairs();
  auto v = validation.pairs();
  pairs.insert(pairs.end(), v.begin(), v.end());
  return InteractionSet::from_pairs(train.n_users(), train.n_items(), std::move(pairs));
}

DataSplit split(const InteractionSet& interactions, double train_frac, double val_frac_of_train,
                std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0) ||
      !(val_frac_of_train > 0.0 && val_frac_of_train < 1.0)) {
    throw ContractViolation("split fractions must lie in (0, 1)");
  }
  Rng rng(seed);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> train, val, test;
  for (std::uint32_t u = 0; u < interactions.n_users(); ++u) {
    auto span = interactions.items_of(u);
    std::vector<std::uint32_t> items(span.begin(), span.end());
    const std::size_t n = items.size();
    if (n == 0) continue;
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(items[i], items[rng.uniform_index(i + 1)]);
    }
    std::size_t train_part = 1;
    if (n >= 2) {
      train_part = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n) + 1e-9)));
      train_part = std::min(train_part, n);
    }
    std::size_t n_val = static_cast<std::size_t>(std::llround(val_frac_of_train * train_part));
    n_val = std::min(n_val, train_part - 1);
    for (std::size_t k = 0; k < n; ++k) {
      auto& dst = k < n_val ? val : (k < train_part ? train : test);
      dst.emplace_back(u, items[k]);
    }
  }
  const auto nu = interactions.n_users();
  const auto ni = interactions.n_items();
  return {InteractionSet::from_pairs(nu, ni, std::move(train)),
          InteractionSet::from_pairs(nu, ni, std::move(val)),
          InteractionSet::from_pairs(nu, ni, std::move(test))};
}

// ---------------------------------------------------------------------------
// Graph

Graph::Graph(InteractionSet interactions, std::vector<KgTriple> triples, std::uint32_t n_entities,
             const GraphOptions& options)
    : interactions_(std::move(interactions)),
      triples_(std::move(triples)),
      n_users_(interactions_.n_users()),
      n_items_(interactions_.n_items()),
      n_entities_(n_entities),
      max_hops_(options.max_hops) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(2 * (interactions_.size() + triples_.size()));
  for (auto [u, i] : interactions_.pairs()) {
    const auto a = global(user_node(u)), b = global(item_node(i));
    edges.emplace_back(a, b);
    edges.emplace_back(b, a);
  }
  for (const auto& t : triples_) {
    if (!contains(t.head) || !contains(t.tail) || t.head.kind == NodeKind::User ||
        t.tail.kind == NodeKind::User) {
      throw ContractViolation("KG triple references a node outside the graph");
    }
    const auto a = global(t.head), b = global(t.tail);
    if (a == b) continue;
    edges.emplace_back(a, b);
    edges.emplace_back(b, a);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  offsets_.assign(n_nodes() + 1, 0);
  for (auto [a, b] : edges) ++offsets_[a + 1];
  for (std::size_t i = 0; i < n_nodes(); ++i) offsets_[i + 1] += offsets_[i];
  neighbors_.reserve(edges.size());
  for (auto [a, b] : edges) neighbors_.push_back(b);

  if (n_nodes() <= options.index_node_threshold && max_hops_ > 0) build_index(options);
}

std::uint32_t Graph::count(NodeKind kind) const {
  switch (kind) {
    case NodeKind::User: return n_users_;
    case NodeKind::Item: return n_items_;
    case NodeKind::Entity: return n_entities_;
  }
  return 0;
}

std::uint32_t Graph::global(NodeId node) const {
  switch (node.kind) {
    case NodeKind::User: return node.index;
    case NodeKind::Item: return n_users_ + node.index;
    case NodeKind::Entity: return n_users_ + n_items_ + node.index;
  }
  return 0;
}

NodeId Graph::node(std::uint32_t g) const {
  if (g < n_users_) return user_node(g);
  if (g < n_users_ + n_items_) return item_node(g - n_users_);
  return entity_node(g - n_users_ - n_items_);
}

bool Graph::contains(NodeId node) const { return node.index < count(node.kind); }

std::vector<std::uint32_t> Graph::bfs_ball(std::uint32_t center, std::uint32_t hops) const {
  std::vector<std::uint8_t> seen(n_nodes(), 0);
  std::vector<std::uint32_t> ball{center};
  seen[center] = 1;
  std::size_t frontier_begin = 0;
  for (std::uint32_t depth = 0; depth < hops; ++depth) {
    const std::size_t frontier_end = ball.size();
    if (frontier_begin == frontier_end) break;
    for (std::size_t f = frontier_begin; f < frontier_end; ++f) {
      for (auto nb : neighbors(ball[f])) {
        if (!seen[nb]) {
          seen[nb] = 1;
          ball.push_back(nb);
        }
      }
    }
    frontier_begin = frontier_end;
  }
  std::sort(ball.begin(), ball.end());
  return ball;
}

void Graph::build_index(const GraphOptions& options) {
  const std::uint32_t n = n_nodes();
  std::vector<std::size_t> offsets;
  offsets.reserve(static_cast<std::size_t>(n) * max_hops_ + 1);
  offsets.push_back(0);
  std::vector<std::uint32_t> entries;
  std::vector<std::uint8_t> dist(n, 0xff);
  std::vector<std::uint32_t> order;
  std::vector<std::uint32_t> ball;
  for (std::uint32_t x = 0; x < n; ++x) {
    order.assign(1, x);
    dist[x] = 0;
    std::size_t frontier_begin = 0;
    // depth_end[k] = number of nodes in `order` at distance <= k
    std::vector<std::size_t> depth_end(max_hops_ + 1, 1);
    for (std::uint32_t depth = 0; depth < max_hops_; ++depth) {
      const std::size_t frontier_end = order.size();
      for (std::size_t f = frontier_begin; f < frontier_end; ++f) {
        for (auto nb : neighbors(order[f])) {
          if (dist[nb] == 0xff) {
            dist[nb] = static_cast<std::uint8_t>(depth + 1);
            order.push_back(nb);
          }
        }
      }
      frontier_begin = frontier_end;
      depth_end[depth + 1] = order.size();
    }
    for (std::uint32_t k = 1; k <= max_hops_; ++k) {
      ball.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(depth_end[k]));
      std::sort(ball.begin(), ball.end());
      entries.insert(entries.end(), ball.begin(), ball.end());
      offsets.push_back(entries.size());
    }
    for (auto v : order) dist[v] = 0xff;
    if (entries.size() > options.index_entry_budget) return;  // stay lazy
  }
  index_offsets_ = std::move(offsets);
  index_entries_ = std::move(entries);
}

std::span<const std::uint32_t> Graph::index_ball(std::uint32_t center, std::uint32_t hops) const {
  const std::size_t slot = static_cast<std::size_t>(center) * max_hops_ + (hops - 1);
  return {index_entries_.data() + index_offsets_[slot],
          index_entries_.data() + index_offsets_[slot + 1]};
}

std::vector<NodeId> Graph::khop_subgraph(NodeId center, std::uint32_t hops) const {
  if (!contains(center)) throw ContractViolation("khop_subgraph: unknown center node");
  if (hops == 0) throw ContractViolation("khop_subgraph: hops must be positive");
  const auto g = global(center);
  std::vector<std::uint32_t> ball;
  if (has_khop_index() && hops <= max_hops_) {
    auto s = index_ball(g, hops);
    ball.assign(s.begin(), s.end());
  } else {
    ball = bfs_ball(g, hops);
  }
  std::vector<NodeId> out;
  out.reserve(ball.size());
  for (auto v : ball) out.push_back(node(v));
  return out;
}

std::span<const std::uint32_t> Graph::same_kind_within(NodeId center, std::uint32_t hops,
                                                       std::vector<std::uint32_t>& storage) const {
  if (!contains(center)) throw ContractViolation("same_kind_within: unknown center node");
  if (hops == 0) throw ContractViolation("same_kind_within: hops must be positive");
  const auto g = global(center);
  std::span<const std::uint32_t> ball;
  if (has_khop_index() && hops <= max_hops_) {
    ball = index_ball(g, hops);
  } else {
    storage = bfs_ball(g, hops);
    ball = storage;
  }
  const std::uint32_t lo = global({center.kind, 0});
  const std::uint32_t hi = lo + count(center.kind);
  auto first = std::lower_bound(ball.begin(), ball.end(), lo);
  auto last = std::lower_bound(first, ball.end(), hi);
  return {first, last};
}

// ---------------------------------------------------------------------------
// Text I/O

void write_interactions(const std::filesystem::path& path, const InteractionSet& set) {
  auto out = open_output(path);
  for (std::uint32_t u = 0; u < set.n_users(); ++u) {
    auto items = set.items_of(u);
    if (items.empty()) continue;
    out << u;
    for (auto i : items) out << ' ' << i;
    out << '\n';
  }
}

InteractionSet read_dense_interactions(const std::filesystem::path& path, std::uint32_t n_users,
                                       std::uint32_t n_items) {
  auto in = open_input(path);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = parse_line(path.string(), line_no, line);
    if (tokens.empty()) continue;
    if (tokens[0] >= n_users) throw ParseError(path.string(), line_no, "user id out of range");
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      if (tokens[k] >= n_items) throw ParseError(path.string(), line_no, "item id out of range");
      pairs.emplace_back(static_cast<std::uint32_t>(tokens[0]),
                         static_cast<std::uint32_t>(tokens[k]));
    }
  }
  return InteractionSet::from_pairs(n_users, n_items, std::move(pairs));
}

void write_id_map(const std::filesystem::path& path, const IdMap& map) {
  auto out = open_output(path);
  for (auto [orig, dense] : map) out << orig << ' ' << dense << '\n';
}

IdMap read_id_map(const std::filesystem::path& path) {
  auto in = open_input(path);
  IdMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = parse_line(path.string(), line_no, line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) throw ParseError(path.string(), line_no, "expected 'original dense'");
    map.emplace(tokens[0], static_cast<std::uint32_t>(tokens[1]));
  }
  return map;
}

void write_dense_kg(const std::filesystem::path& path, const KgData& kg, std::uint32_t n_items) {
  auto out = open_output(path);
  auto id = [&](NodeId n) -> std::uint64_t {
    return n.kind == NodeKind::Item ? n.index : std::uint64_t{n_items} + n.index;
  };
  for (const auto& t : kg.triples) out << id(t.head) << ' ' << t.relation << ' ' << id(t.tail) << '\n';
}

}  // namespace hopwise
