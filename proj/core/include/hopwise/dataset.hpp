#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "hopwise/graph_store.hpp"

namespace hopwise {

/// A preprocessed dataset directory:
///   train.txt valid.txt test.txt   dense `user item item ...` lines
///   kg.txt                         dense `head relation tail`, items 0..I-1, entities I..
///   user_list.txt item_list.txt entity_list.txt relation_list.txt
///                                  `original_id dense_id` sidecars
///   meta.txt                       key=value counts
struct Dataset {
  DataSplit split;
  KgData kg;
  std::uint32_t n_users = 0;
  std::uint32_t n_items = 0;
};

struct IngestOptions {
  std::filesystem::path interactions;
  std::optional<std::filesystem::path> kg;
  std::uint32_t core = 10;
  double train_frac = 0.8;
  double val_frac = 0.1;
  std::uint64_t seed = 2024;
  /// Raw KG tokens below this bound are items (original ids). 0 means one
  /// past the largest original item id.
  std::uint64_t item_id_bound = 0;
  std::uint64_t entity_count = 0;
};

Dataset ingest(const IngestOptions& options, const std::filesystem::path& out_dir);

void save_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

/// Graph over the training pairs (validation and test withheld) fused with the KG.
Graph build_train_graph(const Dataset& data, const GraphOptions& options = {});

std::string describe(const Dataset& data);

}  // namespace hopwise
