#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hopwise {

enum class NodeKind : std::uint8_t { User = 0, Item = 1, Entity = 2 };

const char* to_string(NodeKind kind);

struct NodeId {
  NodeKind kind = NodeKind::User;
  std::uint32_t index = 0;

  friend bool operator==(const NodeId&, const NodeId&) = default;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

inline NodeId user_node(std::uint32_t i) { return {NodeKind::User, i}; }
inline NodeId item_node(std::uint32_t i) { return {NodeKind::Item, i}; }
inline NodeId entity_node(std::uint32_t i) { return {NodeKind::Entity, i}; }

/// original id -> dense id, dense ids are 0..n-1 in ascending original order.
using IdMap = std::map<std::uint64_t, std::uint32_t>;

/// Implicit-feedback pairs with symmetric per-user and per-item adjacency.
/// Adjacency lists are kept sorted.
class InteractionSet {
 public:
  InteractionSet() = default;
  InteractionSet(std::uint32_t n_users, std::uint32_t n_items);

  /// Builds from pairs; duplicate pairs are dropped.
  static InteractionSet from_pairs(std::uint32_t n_users, std::uint32_t n_items,
                                   std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs);

  std::uint32_t n_users() const { return static_cast<std::uint32_t>(user_items_.size()); }
  std::uint32_t n_items() const { return static_cast<std::uint32_t>(item_users_.size()); }
  std::size_t size() const { return n_pairs_; }
  bool empty() const { return n_pairs_ == 0; }

  std::span<const std::uint32_t> items_of(std::uint32_t user) const { return user_items_[user]; }
  std::span<const std::uint32_t> users_of(std::uint32_t item) const { return item_users_[item]; }

  /// I(node): items of a user or users of an item.
  std::span<const std::uint32_t> neighbors_of(NodeId node) const;
  bool contains(std::uint32_t user, std::uint32_t item) const;
  /// True when `other` is in I(node); other must be of the opposite kind.
  bool interacted(NodeId node, NodeId other) const;

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs() const;

  friend bool operator==(const InteractionSet&, const InteractionSet&) = default;

 private:
  std::vector<std::vector<std::uint32_t>> user_items_;
  std::vector<std::vector<std::uint32_t>> item_users_;
  std::size_t n_pairs_ = 0;
};

struct LoadedInteractions {
  InteractionSet interactions;
  IdMap user_ids;
  IdMap item_ids;
};

/// Reads `user item item ...` lines and applies iterative k-core filtering.
LoadedInteractions load_interactions(const std::filesystem::path& path, std::uint32_t core);

/// Iterative k-core filter over raw pairs. Returns surviving pairs.
std::vector<std::pair<std::uint64_t, std::uint64_t>> k_core_filter(
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs, std::uint32_t core);

struct KgTriple {
  NodeId head;
  std::uint32_t relation = 0;
  NodeId tail;

  friend bool operator==(const KgTriple&, const KgTriple&) = default;
};

struct KgData {
  std::vector<KgTriple> triples;
  std::uint32_t n_entities = 0;
  std::uint32_t n_relations = 0;
  IdMap entity_ids;
  IdMap relation_ids;
  std::size_t dropped_triples = 0;  // referenced items removed by coring
};

struct KgLoadOptions {
  /// Tokens below this bound name items by their original id; the rest are
  /// pure entities.
  std::uint64_t item_id_bound = 0;
  /// Original item id -> dense item id. Null means tokens are already dense.
  const IdMap* item_ids = nullptr;
  /// Declared size of the shared item+entity id space; 0 disables the check.
  std::uint64_t entity_count = 0;
};

KgData load_kg(const std::filesystem::path& path, const KgLoadOptions& options);

struct DataSplit {
  InteractionSet train;
  InteractionSet validation;
  InteractionSet test;

  /// train ∪ validation: everything a model saw before testing.
  InteractionSet train_and_validation() const;
};

/// Per-user random split. For a user with n interactions:
///   train_part = n == 1 ? 1 : max(1, floor(train_frac * n))
///   val       = min(round(val_frac * train_part), train_part - 1)
///   train     = train_part - val,  test = n - train_part
DataSplit split(const InteractionSet& interactions, double train_frac,
                double val_frac_of_train, std::uint64_t seed);

struct GraphOptions {
  std::uint32_t max_hops = 4;
  /// Build the k-hop index eagerly when the node count is at most this.
  std::size_t index_node_threshold = 100'000;
  /// Fall back to lazy BFS when the index would hold more entries than this.
  std::size_t index_entry_budget = std::size_t{1} << 25;
};

/// Fused user-item(-entity) graph. Nodes use one global numbering:
/// users [0, U), items [U, U+I), entities [U+I, U+I+E).
/// Immutable after construction.
class Graph {
 public:
  Graph(InteractionSet interactions, std::vector<KgTriple> triples, std::uint32_t n_entities,
        const GraphOptions& options = {});

  std::uint32_t n_users() const { return n_users_; }
  std::uint32_t n_items() const { return n_items_; }
  std::uint32_t n_entities() const { return n_entities_; }
  std::uint32_t n_nodes() const { return n_users_ + n_items_ + n_entities_; }
  std::size_t n_edges() const { return neighbors_.size() / 2; }
  std::uint32_t count(NodeKind kind) const;

  const InteractionSet& interactions() const { return interactions_; }
  const std::vector<KgTriple>& triples() const { return triples_; }

  std::uint32_t global(NodeId node) const;
  NodeId node(std::uint32_t global_id) const;
  bool contains(NodeId node) const;

  /// Neighbors of a node in global ids, sorted.
  std::span<const std::uint32_t> neighbors(std::uint32_t global_id) const {
    return {neighbors_.data() + offsets_[global_id], neighbors_.data() + offsets_[global_id + 1]};
  }
  std::uint32_t degree(std::uint32_t global_id) const {
    return offsets_[global_id + 1] - offsets_[global_id];
  }

  bool has_khop_index() const { return !index_offsets_.empty(); }
  std::uint32_t max_hops() const { return max_hops_; }

  /// All nodes within `hops` of center (center included), sorted by global id.
  std::vector<NodeId> khop_subgraph(NodeId center, std::uint32_t hops) const;

  /// Global ids of same-kind nodes within `hops` of center, ascending.
  /// Points into the index when built; otherwise BFS fills `storage`.
  std::span<const std::uint32_t> same_kind_within(NodeId center, std::uint32_t hops,
                                                  std::vector<std::uint32_t>& storage) const;

  /// Plain BFS, global ids sorted ascending. Never touches the index.
  std::vector<std::uint32_t> bfs_ball(std::uint32_t global_center, std::uint32_t hops) const;

 private:
  void build_index(const GraphOptions& options);
  std::span<const std::uint32_t> index_ball(std::uint32_t global_center, std::uint32_t hops) const;

  InteractionSet interactions_;
  std::vector<KgTriple> triples_;
  std::uint32_t n_users_ = 0;
  std::uint32_t n_items_ = 0;
  std::uint32_t n_entities_ = 0;
  std::uint32_t max_hops_ = 0;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> neighbors_;
  // (node, k) -> sorted ball of global ids, stored flat.
  std::vector<std::size_t> index_offsets_;
  std::vector<std::uint32_t> index_entries_;
};

// Text I/O for preprocessed datasets.
void write_interactions(const std::filesystem::path& path, const InteractionSet& set);
/// Reads a dense interaction file without filtering; ids must be < the given counts.
InteractionSet read_dense_interactions(const std::filesystem::path& path, std::uint32_t n_users,
                                       std::uint32_t n_items);
void write_id_map(const std::filesystem::path& path, const IdMap& map);
IdMap read_id_map(const std::filesystem::path& path);
/// Dense KG file: items are 0..I-1 and entities I..I+E-1.
void write_dense_kg(const std::filesystem::path& path, const KgData& kg, std::uint32_t n_items);

}  // namespace hopwise
