#include "hopwise/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "hopwise/error.hpp"

namespace hopwise {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    std::size_t used = 0;
    try {
      out = static_cast<T>(std::stod(value, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty())
      throw ContractViolation("config: bad number for " + key + ": '" + value + "'");
  } else {
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
      throw ContractViolation("config: bad integer for " + key + ": '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ContractViolation("config: bad boolean for " + key + ": '" + value + "'");
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  const char* name;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define HOPWISE_UINT(field)                                                                  \
  Field {                                                                                    \
    #field, [](TrainConfig& c, const std::string& v) {                                       \
      c.field = parse_number<decltype(c.field)>(#field, v);                                  \
    },                                                                                       \
        [](const TrainConfig& c) { return std::to_string(c.field); }                         \
  }
#define HOPWISE_DOUBLE(field)                                                                \
  Field {                                                                                    \
    #field, [](TrainConfig& c, const std::string& v) { c.field = parse_number<double>(#field, v); }, \
        [](const TrainConfig& c) { return fmt_double(c.field); }                             \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      HOPWISE_UINT(epochs),
      HOPWISE_UINT(trajectory_length),
      HOPWISE_UINT(warmup),
      HOPWISE_UINT(replay_batch),
      HOPWISE_UINT(target_sync),
      HOPWISE_DOUBLE(gamma),
      HOPWISE_DOUBLE(dqn_lr_user),
      HOPWISE_DOUBLE(dqn_lr_item),
      HOPWISE_UINT(dqn_hidden),
      HOPWISE_DOUBLE(dqn_grad_clip),
      HOPWISE_UINT(replay_capacity),
      HOPWISE_UINT(n_max),
      HOPWISE_UINT(dim),
      HOPWISE_DOUBLE(gnn_lr),
      HOPWISE_DOUBLE(l2),
      HOPWISE_DOUBLE(init_std),
      HOPWISE_UINT(seed),
      HOPWISE_UINT(patience),
      HOPWISE_UINT(eval_stride),
      HOPWISE_UINT(eval_k),
      HOPWISE_UINT(trajectories_per_epoch),
      HOPWISE_UINT(gnn_batch_size),
      HOPWISE_UINT(gnn_steps_per_epoch),
      Field{"pooling",
            [](TrainConfig& c, const std::string& v) {
              if (v == "sum") c.pooling = PoolingMode::Sum;
              else if (v == "concat") c.pooling = PoolingMode::Concat;
              else throw ContractViolation("config: pooling must be sum|concat");
            },
            [](const TrainConfig& c) {
              return std::string(c.pooling == PoolingMode::Sum ? "sum" : "concat");
            }},
      Field{"state_encoding",
            [](TrainConfig& c, const std::string& v) {
              if (v == "initial") c.state_encoding = StateEncoding::InitialEmbedding;
              else if (v == "pooled") c.state_encoding = StateEncoding::PooledEmbedding;
              else throw ContractViolation("config: state_encoding must be initial|pooled");
            },
            [](const TrainConfig& c) {
              return std::string(c.state_encoding == StateEncoding::InitialEmbedding ? "initial"
                                                                                     : "pooled");
            }},
      HOPWISE_UINT(probe_action),
      Field{"dual", [](TrainConfig& c, const std::string& v) { c.dual = parse_bool("dual", v); },
            [](const TrainConfig& c) { return std::string(c.dual ? "true" : "false"); }},
      Field{"negatives",
            [](TrainConfig& c, const std::string& v) {
              if (v == "tuple") c.negatives = NegativeSource::TupleList;
              else if (v == "random") c.negatives = NegativeSource::Random;
              else throw ContractViolation("config: negatives must be tuple|random");
            },
            [](const TrainConfig& c) {
              return std::string(c.negatives == NegativeSource::TupleList ? "tuple" : "random");
            }},
      HOPWISE_UINT(fixed_depth),
      HOPWISE_UINT(index_node_threshold),
  };
  return table;
}

#undef HOPWISE_UINT
#undef HOPWISE_DOUBLE

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ContractViolation("config: " + m); };
  if (epochs == 0) fail("epochs must be positive");
  if (warmup >= trajectory_length) fail("warmup must be smaller than trajectory_length");
  if (n_max == 0) fail("n_max must be at least 1");
  if (n_max > 250) fail("n_max too large");
  if (dim == 0 || dqn_hidden == 0) fail("dimensions must be positive");
  if (!(dqn_lr_user > 0) || !(dqn_lr_item > 0) || !(gnn_lr > 0)) fail("learning rates must be > 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0, 1)");
  if (dqn_grad_clip < 0.0) fail("dqn_grad_clip must be non-negative");
  if (l2 < 0.0 || init_std < 0.0) fail("l2 and init_std must be non-negative");
  if (replay_batch == 0 || replay_capacity == 0) fail("replay sizes must be positive");
  if (target_sync == 0) fail("target_sync must be positive");
  if (eval_stride == 0 || eval_k == 0) fail("eval_stride and eval_k must be positive");
  if (trajectories_per_epoch == 0) fail("trajectories_per_epoch must be positive");
  if (probe_action < 1 || probe_action > n_max) fail("probe_action must lie in 1..n_max");
  if (fixed_depth > n_max) fail("fixed_depth must lie in 0..n_max");
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.name) {
      f.set(*this, trim(value));
      return;
    }
  }
  throw ContractViolation("config: unknown key '" + key + "'");
}

std::string TrainConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.name) + "=" + f.get(*this) + "\n";
  return out;
}

std::vector<std::string> TrainConfig::keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.name);
  return out;
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config", line_no, "expected key=value, got '" + line + "'");
    base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

}  // namespace hopwise
