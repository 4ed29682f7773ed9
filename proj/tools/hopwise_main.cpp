#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hopwise/checkpoint.hpp"
#include "hopwise/config.hpp"
#include "hopwise/dataset.hpp"
#include "hopwise/error.hpp"
#include "hopwise/eval.hpp"
#include "hopwise/trainer.hpp"

namespace fs = std::filesystem;
using namespace hopwise;

namespace {

struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.file, "key=value config file");
  cmd->add_option("--set", args.sets, "override one key, e.g. --set epochs=50")->allow_extra_args(false);
}

TrainConfig resolve_config(const ConfigArgs& args) {
  TrainConfig cfg = args.file.empty() ? TrainConfig{} : load_config(args.file);
  for (const auto& kv : args.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ContractViolation("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void write_summary(const fs::path& path, const RankingResult& test, const TrainReport* report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "metric,value\n";
  out << "k," << test.k << '\n';
  out << "test_ndcg," << format_double(test.ndcg) << '\n';
  out << "test_recall," << format_double(test.recall) << '\n';
  out << "test_users," << test.users.size() << '\n';
  out << "skipped_users," << test.skipped_users << '\n';
  if (report) {
    out << "best_epoch," << report->best_epoch << '\n';
    out << "val_ndcg," << format_double(report->best_validation.ndcg) << '\n';
    out << "val_recall," << format_double(report->best_validation.recall) << '\n';
    out << "epochs_run," << report->epochs_run << '\n';
    out << "early_stopped," << (report->early_stopped ? 1 : 0) << '\n';
  }
}

int run_train(const std::string& data_dir, const std::string& out_dir, const ConfigArgs& cargs,
              std::uint32_t fixed_depth, bool quiet) {
  TrainConfig cfg = resolve_config(cargs);
  if (fixed_depth > 0) {
    cfg.fixed_depth = fixed_depth;
    cfg.validate();
  }
  Dataset data = load_dataset(data_dir);
  GraphOptions gopts;
  gopts.max_hops = cfg.n_max;
  gopts.index_node_threshold = cfg.index_node_threshold;
  Graph graph = build_train_graph(data, gopts);
  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  {
    std::ofstream cfg_out(out / "config.txt");
    cfg_out << cfg.to_text();
  }
  std::ofstream history(out / "history.csv");
  if (!history) throw Error("cannot write " + (out / "history.csv").string());
  history << kHistoryHeader << '\n';

  Trainer trainer(graph, data.split.validation, cfg);
  TrainReport report = trainer.train([&](const HistoryRow& row) {
    history << format_history_row(row) << '\n';
    history.flush();
    if (!quiet && row.val_ndcg)
      std::fprintf(stderr, "epoch %u  val ndcg %.4f\n", row.epoch, *row.val_ndcg);
  });

  ActionAssignment actions = trainer.assign_actions();
  RankingResult test = evaluate(actions, trainer.table(), trainer.pooling(), data.split, cfg.eval_k);

  save_checkpoint(out / "checkpoint.bin", trainer.checkpoint());
  write_actions_csv(out / "actions.csv", actions);
  write_ranking_csv(out / "ranking.csv", test);
  write_summary(out / "metrics.csv", test, &report);

  std::printf("best epoch %u  test ndcg@%u %.4f  recall@%u %.4f\n", report.best_epoch, cfg.eval_k,
              test.ndcg, cfg.eval_k, test.recall);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hopwise: adaptive-depth graph recommender"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "no per-epoch progress on stderr");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "filter, densify and split raw data");
  IngestOptions iopts;
  std::string ingest_out;
  std::string interactions_path, kg_path;
  ingest_cmd->add_option("--interactions", interactions_path, "`user item item ...` file")->required();
  ingest_cmd->add_option("--kg", kg_path, "`head relation tail` triple file");
  ingest_cmd->add_option("--out", ingest_out, "output dataset directory")->required();
  ingest_cmd->add_option("--core", iopts.core, "k-core threshold")->capture_default_str();
  ingest_cmd->add_option("--train-frac", iopts.train_frac)->capture_default_str();
  ingest_cmd->add_option("--val-frac", iopts.val_frac, "share of the train part held out")
      ->capture_default_str();
  ingest_cmd->add_option("--seed", iopts.seed)->capture_default_str();
  ingest_cmd->add_option("--item-id-bound", iopts.item_id_bound,
                         "KG tokens below this are item ids (0: largest item id + 1)");
  ingest_cmd->add_option("--entity-count", iopts.entity_count, "declared KG id space size");

  // train / train-fixed
  std::string data_dir, out_dir;
  ConfigArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train the adaptive-depth model");
  train_cmd->add_option("--data", data_dir, "dataset directory from ingest")->required();
  train_cmd->add_option("--out", out_dir, "run directory")->required();
  add_config_options(train_cmd, train_args);

  std::uint32_t depth = 0;
  ConfigArgs fixed_args;
  auto* fixed_cmd = app.add_subcommand("train-fixed", "train the fixed-depth baseline");
  fixed_cmd->add_option("--data", data_dir)->required();
  fixed_cmd->add_option("--out", out_dir)->required();
  fixed_cmd->add_option("--depth", depth, "aggregation depth for every node")->required();
  add_config_options(fixed_cmd, fixed_args);

  // eval
  std::string ckpt_path, eval_out;
  std::uint32_t k = 0;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  eval_cmd->add_option("--data", data_dir)->required();
  eval_cmd->add_option("--checkpoint", ckpt_path)->required();
  eval_cmd->add_option("--k", k, "cutoff (default: the checkpoint's eval_k)");
  eval_cmd->add_option("--out", eval_out, "directory for ranking.csv and metrics.csv");

  // report
  auto* report_cmd = app.add_subcommand("report", "analyses over a finished run");
  report_cmd->require_subcommand(1);
  std::string report_out, actions_path, history_path;
  std::uint32_t n_actions = 4, window = 0, n_groups = 4;

  auto* actions_cmd = report_cmd->add_subcommand("actions", "per-side action percentages");
  actions_cmd->add_option("--actions", actions_path, "actions.csv from a run")->required();
  actions_cmd->add_option("--n-actions", n_actions)->capture_default_str();
  actions_cmd->add_option("--out", report_out, "CSV output path");

  auto* sparsity_cmd = report_cmd->add_subcommand("sparsity", "nDCG by user interaction count");
  sparsity_cmd->add_option("--data", data_dir)->required();
  sparsity_cmd->add_option("--checkpoint", ckpt_path)->required();
  sparsity_cmd->add_option("--groups", n_groups)->capture_default_str();
  sparsity_cmd->add_option("--out", report_out);

  auto* reward_cmd = report_cmd->add_subcommand("reward", "reward per epoch with trend column");
  reward_cmd->add_option("--history", history_path, "history.csv from a run")->required();
  reward_cmd->add_option("--window", window, "trailing window, 0 = running mean")->capture_default_str();
  reward_cmd->add_option("--out", report_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest_cmd) {
      iopts.interactions = interactions_path;
      if (!kg_path.empty()) iopts.kg = kg_path;
      Dataset d = ingest(iopts, ingest_out);
      std::printf("%s\n", describe(d).c_str());
      return 0;
    }
    if (*train_cmd) return run_train(data_dir, out_dir, train_args, 0, quiet);
    if (*fixed_cmd) {
      if (depth == 0) throw ContractViolation("--depth must be at least 1");
      return run_train(data_dir, out_dir, fixed_args, depth, quiet);
    }
    if (*eval_cmd || *sparsity_cmd) {
      Checkpoint ckpt = load_checkpoint(ckpt_path);
      Dataset data = load_dataset(data_dir);
      GraphOptions gopts;
      gopts.max_hops = ckpt.config.n_max;
      gopts.index_node_threshold = ckpt.config.index_node_threshold;
      Graph graph = build_train_graph(data, gopts);
      Trainer trainer(graph, data.split.validation, ckpt);
      std::uint32_t cutoff = k ? k : ckpt.config.eval_k;
      RankingResult test =
          evaluate(trainer.assign_actions(), trainer.table(), trainer.pooling(), data.split, cutoff);
      if (*eval_cmd) {
        if (!eval_out.empty()) {
          fs::create_directories(eval_out);
          write_ranking_csv(fs::path(eval_out) / "ranking.csv", test);
          write_summary(fs::path(eval_out) / "metrics.csv", test, nullptr);
        }
        std::printf("test ndcg@%u %.4f  recall@%u %.4f  users %zu\n", cutoff, test.ndcg, cutoff,
                    test.recall, test.users.size());
        return 0;
      }
      std::vector<std::uint32_t> counts(data.n_users);
      for (std::uint32_t u = 0; u < data.n_users; ++u)
        counts[u] = static_cast<std::uint32_t>(data.split.train.items_of(u).size());
      SparsityGroups groups = sparsity_groups(test, counts, n_groups);
      if (!report_out.empty()) write_sparsity_csv(report_out, groups);
      for (const auto& g : groups.groups)
        std::printf("[%u, %u)  users %zu  interactions %zu  ndcg %.4f\n", g.lower,
                    g.upper_exclusive, g.users, g.interactions, g.ndcg);
      if (!groups.note.empty()) std::printf("note: %s\n", groups.note.c_str());
      return 0;
    }
    if (*actions_cmd) {
      ActionDistribution dist = action_distribution_report(read_actions_csv(actions_path), n_actions);
      if (!report_out.empty()) write_distribution_csv(report_out, dist);
      for (std::uint32_t a = 0; a < n_actions; ++a)
        std::printf("action %u  users %6.2f%%  items %6.2f%%\n", a + 1, dist.user_percent[a],
                    dist.item_percent[a]);
      return 0;
    }
    if (*reward_cmd) {
      auto curve = reward_curve_export(history_path, window);
      if (!report_out.empty()) {
        write_reward_curve_csv(report_out, curve);
      } else {
        std::printf("epoch,user_reward,item_reward,user_trend,item_trend\n");
        auto s = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
        for (const auto& p : curve)
          std::printf("%u,%s,%s,%s,%s\n", p.epoch, s(p.user_reward).c_str(), s(p.item_reward).c_str(),
                      s(p.user_trend).c_str(), s(p.item_trend).c_str());
      }
      return 0;
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 3;
  } catch (const ContractViolation& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
