#include "hopwise/dataset.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "hopwise/error.hpp"

namespace hopwise {

namespace {

std::map<std::string, std::uint64_t> read_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::map<std::string, std::uint64_t> meta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), line_no, "expected key=value");
    try {
      meta[line.substr(0, eq)] = std::stoull(line.substr(eq + 1));
    } catch (const std::logic_error&) {
      throw ParseError(path.string(), line_no, "expected an integer value");
    }
  }
  return meta;
}

}  // namespace

Dataset ingest(const IngestOptions& options, const std::filesystem::path& out_dir) {
  auto loaded = load_interactions(options.interactions, options.core);
  Dataset data;
  data.n_users = loaded.interactions.n_users();
  data.n_items = loaded.interactions.n_items();
  data.split = split(loaded.interactions, options.train_frac, options.val_frac, options.seed);
  if (options.kg) {
    KgLoadOptions kg_options;
    kg_options.item_ids = &loaded.item_ids;
    kg_options.item_id_bound =
        options.item_id_bound ? options.item_id_bound : loaded.item_ids.rbegin()->first + 1;
    kg_options.entity_count = options.entity_count;
    data.kg = load_kg(*options.kg, kg_options);
  }
  std::filesystem::create_directories(out_dir);
  save_dataset(data, out_dir);
  write_id_map(out_dir / "user_list.txt", loaded.user_ids);
  write_id_map(out_dir / "item_list.txt", loaded.item_ids);
  write_id_map(out_dir / "entity_list.txt", data.kg.entity_ids);
  write_id_map(out_dir / "relation_list.txt", data.kg.relation_ids);
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_interactions(dir / "train.txt", data.split.train);
  write_interactions(dir / "valid.txt", data.split.validation);
  write_interactions(dir / "test.txt", data.split.test);
  write_dense_kg(dir / "kg.txt", data.kg, data.n_items);
  std::ofstream meta(dir / "meta.txt");
  if (!meta) throw Error("cannot write " + (dir / "meta.txt").string());
  meta << "n_users=" << data.n_users << "\nn_items=" << data.n_items
       << "\nn_entities=" << data.kg.n_entities << "\nn_relations=" << data.kg.n_relations
       << "\nn_train=" << data.split.train.size() << "\nn_valid=" << data.split.validation.size()
       << "\nn_test=" << data.split.test.size() << "\nn_triples=" << data.kg.triples.size() << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto meta = read_meta(dir / "meta.txt");
  auto get = [&](const char* key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw Error("meta.txt lacks " + std::string(key));
    return static_cast<std::uint32_t>(it->second);
  };
  Dataset data;
  data.n_users = get("n_users");
  data.n_items = get("n_items");
  data.split.train = read_dense_interactions(dir / "train.txt", data.n_users, data.n_items);
  data.split.validation = read_dense_interactions(dir / "valid.txt", data.n_users, data.n_items);
  data.split.test = read_dense_interactions(dir / "test.txt", data.n_users, data.n_items);
  if (std::filesystem::exists(dir / "kg.txt")) {
    KgLoadOptions kg_options;
    kg_options.item_id_bound = data.n_items;
    kg_options.entity_count = std::uint64_t{data.n_items} + get("n_entities");
    data.kg = load_kg(dir / "kg.txt", kg_options);
  }
  return data;
}

Graph build_train_graph(const Dataset& data, const GraphOptions& options) {
  return Graph(data.split.train, data.kg.triples, data.kg.n_entities, options);
}

std::string describe(const Dataset& data) {
  std::ostringstream os;
  os << "users=" << data.n_users << " items=" << data.n_items
     << " entities=" << data.kg.n_entities << " relations=" << data.kg.n_relations
     << " triples=" << data.kg.triples.size() << " train=" << data.split.train.size()
     << " valid=" << data.split.validation.size() << " test=" << data.split.test.size();
  return os.str();
}

}  // namespace hopwise
