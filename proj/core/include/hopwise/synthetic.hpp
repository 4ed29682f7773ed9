#pragma once

#include <cstdint>
#include <vector>

#include "hopwise/dataset.hpp"
#include "hopwise/graph_store.hpp"
#include "hopwise/rng.hpp"

namespace hopwise {

/// Uniformly random bipartite interactions (duplicates rejected).
InteractionSet random_interactions(std::uint32_t n_users, std::uint32_t n_items,
                                   std::size_t n_pairs, Rng& rng);

/// Random dataset with about `n_edges` training edges and constant average
/// user degree, so node count grows linearly with the edge count.
Dataset scaling_dataset(std::size_t n_edges, std::uint32_t user_degree, std::uint64_t seed);

/// Community-structured data where the useful neighborhood depth differs
/// between communities.
///
/// "Near" communities are tight clusters: every user draws from a small
/// sub-cluster of the community and held-out items come from that same
/// sub-cluster, so the signal is two hops away (co-interacting users) and
/// deeper propagation blends in the neighboring community via bridge users.
/// "Far" communities have sparse users whose held-out items are spread over
/// the whole community, reachable only through three-hop collaborative paths.
struct PlantedOptions {
  std::uint32_t n_users = 500;
  std::uint32_t n_items = 500;
  std::uint32_t n_communities = 10;       // alternating near/far
  std::uint32_t subclusters = 4;          // per near community
  std::uint32_t near_degree = 12;         // interactions per near-community user
  std::uint32_t far_degree = 5;           // interactions per far-community user
  double noise = 0.05;                    // fraction of interactions outside the community
  double bridge = 0.15;                   // near users also drawing from the paired community
  double train_frac = 0.8;
  double val_frac = 0.1;
  std::uint64_t seed = 7;
};

struct PlantedDataset {
  Dataset data;
  std::vector<std::uint32_t> user_community;
  std::vector<std::uint32_t> item_community;
  std::vector<bool> community_is_far;
};

PlantedDataset planted_depth_dataset(const PlantedOptions& options);

}  // namespace hopwise
