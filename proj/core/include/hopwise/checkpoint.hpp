#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hopwise/config.hpp"
#include "hopwise/dqn.hpp"
#include "hopwise/gnn.hpp"

namespace hopwise {

/// Everything needed to resume or evaluate a run.
///
/// On-disk layout (little-endian, version 1):
///   magic "HOPWISE\0", u32 version,
///   str config, u32 epoch, str trainer_rng,
///   gnn:   u64 rows, u64 cols, f64 layer0[rows*cols], f64 adam_m[..], f64 adam_v[..],
///          u64 adam_step, f64 lr, f64 l2,
///   u32 n_stacks, then per stack:
///          net live, net target (u64 hidden, u64 input, u64 actions, f64 w1, b1, w2, b2, f64 lr),
///          u64 capacity, str memory_rng, u64 count,
///          count x (u8 kind, u32 index, u32 action, f64 reward, u8 kind, u32 index)
/// where str is u64 length + bytes and matrices are row-major.
struct Checkpoint {
  TrainConfig config;
  std::uint32_t epoch = 0;
  std::string rng_state;
  GnnParams gnn;
  std::vector<DqnStack> stacks;  // 0: user side, 1: item side (absent when shared)
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string serialize(const Checkpoint& ckpt);
Checkpoint deserialize(const std::string& bytes);

}  // namespace hopwise
