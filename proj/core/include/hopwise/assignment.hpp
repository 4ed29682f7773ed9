#pragma once

#include <cstdint>
#include <vector>

#include "hopwise/graph_store.hpp"

namespace hopwise {

/// Aggregation depth chosen for every user and every item.
struct ActionAssignment {
  std::vector<std::uint32_t> user_actions;
  std::vector<std::uint32_t> item_actions;

  static ActionAssignment constant(std::uint32_t n_users, std::uint32_t n_items,
                                   std::uint32_t depth) {
    return {std::vector<std::uint32_t>(n_users, depth), std::vector<std::uint32_t>(n_items, depth)};
  }

  std::uint32_t action_of(NodeId node) const {
    return node.kind == NodeKind::User ? user_actions.at(node.index) : item_actions.at(node.index);
  }

  friend bool operator==(const ActionAssignment&, const ActionAssignment&) = default;
};

}  // namespace hopwise
