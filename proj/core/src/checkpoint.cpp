#include "hopwise/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hopwise/error.hpp"

namespace hopwise {

static_assert(std::endian::native == std::endian::little, "checkpoint format is little-endian");

namespace {

constexpr char kMagic[8] = {'H', 'O', 'P', 'W', 'I', 'S', 'E', '\0'};

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    buf_ += s;
  }
  void doubles(const double* p, std::size_t n) {
    buf_.append(reinterpret_cast<const char*>(p), n * sizeof(double));
  }
  template <typename M>
  void dense(const M& m) {
    // Row-major regardless of the in-memory layout.
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) pod<double>(m(r, c));
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename M>
  void dense(M& m, std::uint64_t rows, std::uint64_t cols) {
    need(rows * cols * sizeof(double));
    m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = pod<double>();
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw Error("checkpoint truncated");
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

void write_net(Writer& w, const QNetwork& net) {
  w.pod<std::uint64_t>(net.hidden());
  w.pod<std::uint64_t>(net.input_dim());
  w.pod<std::uint64_t>(net.n_actions());
  w.dense(net.w1);
  w.dense(net.b1);
  w.dense(net.w2);
  w.dense(net.b2);
  w.pod<double>(net.lr);
}

QNetwork read_net(Reader& r) {
  QNetwork net;
  const auto hidden = r.pod<std::uint64_t>();
  const auto input = r.pod<std::uint64_t>();
  const auto actions = r.pod<std::uint64_t>();
  r.dense(net.w1, hidden, input);
  r.dense(net.b1, hidden, 1);
  r.dense(net.w2, actions, hidden);
  r.dense(net.b2, actions, 1);
  net.lr = r.pod<double>();
  return net;
}

void write_node(Writer& w, NodeId n) {
  w.pod<std::uint8_t>(static_cast<std::uint8_t>(n.kind));
  w.pod<std::uint32_t>(n.index);
}

NodeId read_node(Reader& r) {
  const auto kind = r.pod<std::uint8_t>();
  if (kind > 2) throw Error("checkpoint: bad node kind");
  return {static_cast<NodeKind>(kind), r.pod<std::uint32_t>()};
}

}  // namespace

std::string serialize(const Checkpoint& ckpt) {
  Writer w;
  for (char c : kMagic) w.pod(c);
  w.pod<std::uint32_t>(kCheckpointVersion);
  w.str(ckpt.config.to_text());
  w.pod<std::uint32_t>(ckpt.epoch);
  w.str(ckpt.rng_state);

  const auto& g = ckpt.gnn;
  w.pod<std::uint64_t>(static_cast<std::uint64_t>(g.layer0.rows()));
  w.pod<std::uint64_t>(static_cast<std::uint64_t>(g.layer0.cols()));
  w.dense(g.layer0);
  if (g.adam.m.rows() != g.layer0.rows() || g.adam.m.cols() != g.layer0.cols()) {
    const Matrix zero = Matrix::Zero(g.layer0.rows(), g.layer0.cols());
    w.dense(zero);
    w.dense(zero);
  } else {
    w.dense(g.adam.m);
    w.dense(g.adam.v);
  }
  w.pod<std::uint64_t>(g.adam.step);
  w.pod<double>(g.lr);
  w.pod<double>(g.l2);

  w.pod<std::uint32_t>(static_cast<std::uint32_t>(ckpt.stacks.size()));
  for (const auto& s : ckpt.stacks) {
    write_net(w, s.live);
    write_net(w, s.target);
    w.pod<std::uint64_t>(s.memory.capacity());
    w.str(s.memory.rng().state());
    const auto items = s.memory.contents();
    w.pod<std::uint64_t>(items.size());
    for (const auto& t : items) {
      write_node(w, t.state);
      w.pod<std::uint32_t>(t.action);
      w.pod<double>(t.reward);
      write_node(w, t.next_state);
    }
  }
  return w.take();
}

Checkpoint deserialize(const std::string& bytes) {
  Reader r(bytes);
  for (char c : kMagic)
    if (r.pod<char>() != c) throw Error("not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.config = parse_config(r.str());
  ckpt.epoch = r.pod<std::uint32_t>();
  ckpt.rng_state = r.str();

  auto& g = ckpt.gnn;
  const auto rows = r.pod<std::uint64_t>();
  const auto cols = r.pod<std::uint64_t>();
  r.dense(g.layer0, rows, cols);
  r.dense(g.adam.m, rows, cols);
  r.dense(g.adam.v, rows, cols);
  g.adam.step = r.pod<std::uint64_t>();
  g.lr = r.pod<double>();
  g.l2 = r.pod<double>();

  const auto n_stacks = r.pod<std::uint32_t>();
  for (std::uint32_t s = 0; s < n_stacks; ++s) {
    QNetwork live = read_net(r);
    QNetwork target = read_net(r);
    const auto capacity = r.pod<std::uint64_t>();
    ReplayMemory memory(capacity);
    memory.rng().set_state(r.str());
    const auto count = r.pod<std::uint64_t>();
    std::vector<Transition> items;
    items.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      Transition t;
      t.state = read_node(r);
      t.action = r.pod<std::uint32_t>();
      t.reward = r.pod<double>();
      t.next_state = read_node(r);
      items.push_back(t);
    }
    memory.restore(items);
    ckpt.stacks.push_back({std::move(live), std::move(target), std::move(memory)});
  }
  if (!r.done()) throw Error("checkpoint has trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const auto bytes = serialize(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace hopwise
