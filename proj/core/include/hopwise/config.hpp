#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hopwise/dqn.hpp"
#include "hopwise/gnn.hpp"

namespace hopwise {

enum class NegativeSource : std::uint8_t { TupleList = 0, Random = 1 };

/// Every knob of a training run. Defaults follow the reference setup for
/// non-KG data; see README for the KG defaults.
struct TrainConfig {
  std::uint32_t epochs = 400;               // Z
  std::uint32_t trajectory_length = 20;     // kappa
  std::uint32_t warmup = 5;                 // beta
  std::uint32_t replay_batch = 32;          // b_D
  std::uint32_t target_sync = 10;           // upd
  double gamma = 0.98;
  double dqn_lr_user = 1e-3;
  double dqn_lr_item = 1e-3;
  std::uint32_t dqn_hidden = 64;
  double dqn_grad_clip = 10.0;              // max gradient L2 norm per DQN step, 0 = off
  std::uint32_t replay_capacity = 10'000;
  std::uint32_t n_max = 4;                  // |A|
  std::uint32_t dim = 64;
  double gnn_lr = 1e-3;
  double l2 = 1e-5;
  double init_std = 0.1;
  std::uint64_t seed = 2024;
  std::uint32_t patience = 10;
  std::uint32_t eval_stride = 1;
  std::uint32_t eval_k = 20;
  std::uint32_t trajectories_per_epoch = 10;
  std::uint32_t gnn_batch_size = 1024;      // random-negative BPR pairs per GNN step
  std::uint32_t gnn_steps_per_epoch = 1;
  PoolingMode pooling = PoolingMode::Sum;
  StateEncoding state_encoding = StateEncoding::InitialEmbedding;
  std::uint32_t probe_action = 1;
  bool dual = true;                         // false: one DQN shared by both sides
  NegativeSource negatives = NegativeSource::TupleList;
  std::uint32_t fixed_depth = 0;            // >0: fixed-depth baseline, no policy
  std::uint32_t index_node_threshold = 100'000;

  /// Throws ContractViolation when the invariants do not hold.
  void validate() const;

  /// Applies one `key=value` assignment. Unknown keys throw.
  void set(const std::string& key, const std::string& value);

  /// Canonical `key=value` lines covering every field.
  std::string to_text() const;

  static std::vector<std::string> keys();
};

/// Parses a key=value file; blank lines and `#` comments are ignored.
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});
TrainConfig parse_config(const std::string& text, TrainConfig base = {});

}  // namespace hopwise
