#include "hopwise/synthetic.hpp"

#include <algorithm>
#include <set>

#include "hopwise/error.hpp"

namespace hopwise {

InteractionSet random_interactions(std::uint32_t n_users, std::uint32_t n_items,
                                   std::size_t n_pairs, Rng& rng) {
  const std::size_t max_pairs = static_cast<std::size_t>(n_users) * n_items;
  if (n_pairs > max_pairs / 2) throw ContractViolation("random_interactions: graph too dense");
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  while (seen.size() < n_pairs) {
    seen.emplace(static_cast<std::uint32_t>(rng.uniform_index(n_users)),
                 static_cast<std::uint32_t>(rng.uniform_index(n_items)));
  }
  return InteractionSet::from_pairs(n_users, n_items, {seen.begin(), seen.end()});
}

Dataset scaling_dataset(std::size_t n_edges, std::uint32_t user_degree, std::uint64_t seed) {
  Rng rng(seed);
  const auto n_users = static_cast<std::uint32_t>(std::max<std::size_t>(2, n_edges / user_degree));
  const auto n_items = n_users;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(n_edges);
  for (std::uint32_t u = 0; u < n_users; ++u) {
    std::set<std::uint32_t> items;
    while (items.size() < user_degree) items.insert(static_cast<std::uint32_t>(rng.uniform_index(n_items)));
    for (auto i : items) pairs.emplace_back(u, i);
  }
  Dataset d;
  d.n_users = n_users;
  d.n_items = n_items;
  // Everything goes to training: the benchmark measures epoch cost only.
  d.split.train = InteractionSet::from_pairs(n_users, n_items, std::move(pairs));
  d.split.validation = InteractionSet(n_users, n_items);
  d.split.test = InteractionSet(n_users, n_items);
  return d;
}

PlantedDataset planted_depth_dataset(const PlantedOptions& o) {
  if (o.n_communities == 0 || o.n_users < o.n_communities || o.n_items < o.n_communities * o.subclusters)
    throw ContractViolation("planted_depth_dataset: too few nodes for the community layout");
  Rng rng(o.seed);
  PlantedDataset out;
  out.user_community.resize(o.n_users);
  out.item_community.resize(o.n_items);
  out.community_is_far.resize(o.n_communities);
  for (std::uint32_t c = 0; c < o.n_communities; ++c) out.community_is_far[c] = (c % 2) == 1;

  std::vector<std::vector<std::uint32_t>> community_items(o.n_communities);
  for (std::uint32_t i = 0; i < o.n_items; ++i) {
    out.item_community[i] = i % o.n_communities;
    community_items[i % o.n_communities].push_back(i);
  }
  for (std::uint32_t u = 0; u < o.n_users; ++u) out.user_community[u] = u % o.n_communities;

  auto draw = [&](const std::vector<std::uint32_t>& pool) {
    return pool[rng.uniform_index(pool.size())];
  };
  auto random_item = [&] { return static_cast<std::uint32_t>(rng.uniform_index(o.n_items)); };

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t u = 0; u < o.n_users; ++u) {
    const std::uint32_t c = out.user_community[u];
    const auto& items = community_items[c];
    std::set<std::uint32_t> chosen;
    if (!out.community_is_far[c]) {
      // Tight sub-cluster plus a bridge into the paired far community.
      const std::uint32_t sub = static_cast<std::uint32_t>(rng.uniform_index(o.subclusters));
      std::vector<std::uint32_t> sub_items;
      for (std::size_t k = sub; k < items.size(); k += o.subclusters) sub_items.push_back(items[k]);
      const auto& paired = community_items[(c + 1) % o.n_communities];
      while (chosen.size() < o.near_degree) {
        const double r = rng.uniform();
        if (r < o.noise) chosen.insert(random_item());
        else if (r < o.noise + o.bridge) chosen.insert(draw(paired));
        else chosen.insert(draw(sub_items));
      }
    } else {
      while (chosen.size() < o.far_degree) {
        chosen.insert(rng.uniform() < o.noise ? random_item() : draw(items));
      }
    }
    for (auto i : chosen) pairs.emplace_back(u, i);
  }
  auto all = InteractionSet::from_pairs(o.n_users, o.n_items, std::move(pairs));
  out.data.n_users = o.n_users;
  out.data.n_items = o.n_items;
  out.data.split = split(all, o.train_frac, o.val_frac, rng.split());
  return out;
}

}  // namespace hopwise
