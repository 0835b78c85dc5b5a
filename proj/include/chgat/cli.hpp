#pragma once

// Command-line front end. `run_cli` takes the argument vector without the
// program name and writes to the given streams, so tests can drive it
// in-process.

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chgat/char_knowledge.hpp"
#include "chgat/checkpoint.hpp"
#include "chgat/config.hpp"
#include "chgat/error.hpp"
#include "chgat/graph_builder.hpp"
#include "chgat/model.hpp"
#include "chgat/naive_bayes.hpp"
#include "chgat/name_dataset.hpp"
#include "chgat/training.hpp"
#include "chgat/vocabulary.hpp"

namespace chgat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitTraining = 3;

struct CommandResult {
  int exit_code = kExitOk;
  std::string summary;
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::invalid_argument, "sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

inline std::string format_fixed(double v, int decimals) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

/// Everything a training run reads from its config file.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::array<double, 3> split_ratios{0.90, 0.05, 0.05};
  double nb_alpha = 1.0;
  KeyValueConfig raw;
};

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "dim",          "heads",        "encoder_layers", "text_layers",   "max_name_len",       "dropout",
      "neighbor_cap", "epochs",       "batch_size",     "learning_rate", "weight_decay",       "grid_lr",
      "grid_wd",      "seed",         "use_weights",    "split_train",   "split_val",          "split_test",
      "nb_alpha"};
  return keys;
}

inline RunConfig parse_run_config(const KeyValueConfig& kv) {
  const auto unknown = kv.unknown_keys(known_config_keys());
  if (!unknown.empty()) throw InvalidArgument("unknown config key " + unknown.front());
  RunConfig rc;
  rc.raw = kv;
  auto& m = rc.model;
  auto& t = rc.train;
  if (kv.has("dim")) m.dim = kv.get_size("dim");
  if (kv.has("heads")) m.heads = kv.get_size("heads");
  if (kv.has("encoder_layers")) m.encoder_layers = kv.get_size("encoder_layers");
  if (kv.has("text_layers")) m.text_layers = kv.get_size("text_layers");
  if (kv.has("max_name_len")) m.max_name_len = kv.get_size("max_name_len");
  if (kv.has("dropout")) m.dropout = kv.get_double("dropout");
  if (kv.has("neighbor_cap")) m.neighbor_cap = kv.get_size("neighbor_cap");
  if (kv.has("epochs")) t.epochs = kv.get_size("epochs");
  if (kv.has("batch_size")) t.batch_size = kv.get_size("batch_size");
  if (kv.has("learning_rate")) t.learning_rate = kv.get_double("learning_rate");
  if (kv.has("weight_decay")) t.weight_decay = kv.get_double("weight_decay");
  if (kv.has("grid_lr")) t.grid_learning_rates = kv.get_doubles("grid_lr");
  if (kv.has("grid_wd")) t.grid_weight_decays = kv.get_doubles("grid_wd");
  if (kv.has("seed")) t.seed = kv.get_size("seed");
  if (kv.has("use_weights")) t.use_example_weights = kv.get_bool("use_weights");
  if (kv.has("split_train")) rc.split_ratios[0] = kv.get_double("split_train");
  if (kv.has("split_val")) rc.split_ratios[1] = kv.get_double("split_val");
  if (kv.has("split_test")) rc.split_ratios[2] = kv.get_double("split_test");
  if (kv.has("nb_alpha")) rc.nb_alpha = kv.get_double("nb_alpha");
  m.validate();
  t.validate();
  return rc;
}

namespace detail {

inline void print_report(std::ostream& out, const std::string& prefix, const EvalReport& r) {
  out << prefix << "accuracy: " << format_fixed(r.accuracy, 6) << '\n';
  out << prefix << "n_examples: " << r.n_examples << '\n';
  out << prefix << "n_weighted: " << r.n_weighted << '\n';
  const char* names[2] = {"male", "female"};
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& pc = r.per_class[c];
    const double acc = pc.weight ? static_cast<double>(pc.correct_weight) / static_cast<double>(pc.weight) : 0.0;
    out << prefix << names[c] << "_accuracy: " << format_fixed(acc, 6) << " (" << pc.examples << " names)\n";
  }
}

inline std::vector<LabeledExample> load_labeled(const std::string& path) {
  auto examples = derive_labels(load_name_records(path)).examples;
  if (examples.empty()) throw InvalidArgument("no labeled names in " + path);
  return examples;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<LabeledExample>& examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_examples_csv(out, examples);
}

struct LoadedModel {
  std::optional<ChgatModel> chgat;
  std::optional<NBModel> nb;
};

inline LoadedModel load_any_model(const std::string& path) {
  const auto data = read_file(path);
  LoadedModel m;
  if (looks_like_checkpoint(data)) {
    m.chgat.emplace(deserialize_checkpoint(data));
  } else if (looks_like_nb_model(data)) {
    std::istringstream in(data);
    m.nb = read_nb_model(in);
  } else {
    throw CheckpointError("unrecognized model file " + path);
  }
  return m;
}

}  // namespace detail

inline CommandResult cmd_build_graph(const std::string& chars_path, const std::string& out_dir, bool dump) {
  const auto table = load_character_table(chars_path);
  const HetGraphBundle bundle(table);
  const auto s = summarize(table, bundle);
  if (dump) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(std::filesystem::path(out_dir) / "graph.jsonl", std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write graph dump in " + out_dir);
    write_graph_dump(out, table, bundle);
  }
  std::ostringstream o;
  o << "nodes.character: " << s.characters << '\n'
    << "nodes.semantic_component: " << s.semantic_components << '\n'
    << "nodes.phonetic_component: " << s.phonetic_components << '\n'
    << "nodes.pronunciation: " << s.pronunciations << '\n'
    << "edges.char_sem: " << s.char_sem_edges << '\n'
    << "edges.char_phon: " << s.char_phon_edges << '\n'
    << "edges.char_pron: " << s.char_pron_edges << '\n'
    << "meta_path_pairs: " << s.meta_path_pairs << '\n';
  return {kExitOk, o.str()};
}

inline CommandResult cmd_train(const std::string& names_path, const std::string& chars_path,
                               const std::string& config_path, const std::string& variant,
                               const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (variant != "nb") parse_variant(variant);
  auto rc = parse_run_config(KeyValueConfig::load(config_path));
  if (const char* env = std::getenv("CHGAT_SEED")) {
    KeyValueConfig seed_kv;
    seed_kv.set("seed", env);
    rc.train.seed = seed_kv.get_size("seed");
    rc.raw.set("seed", env);
  }
  rc.train.variant = variant;
  const auto names_text = read_file(names_path);
  const auto records = parse_name_records(names_text);
  const auto labeled = derive_labels(records);
  if (labeled.examples.empty()) throw EmptyTrainingSet();
  const auto splits = split(labeled.examples, rc.split_ratios, rc.train.seed);
  if (splits.train.empty()) throw EmptyTrainingSet();

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  detail::write_csv(out / "train.csv", splits.train);
  detail::write_csv(out / "val.csv", splits.val);
  detail::write_csv(out / "test.csv", splits.test);

  std::ostringstream o;
  std::string model_file, model_bytes, chars_hash = "-";
  if (variant == "nb") {
    const auto nb = nb_train(splits.train, rc.nb_alpha, rc.train.use_example_weights);
    std::ostringstream ss;
    write_nb_model(ss, nb);
    model_file = "model.nb.csv";
    model_bytes = ss.str();
    write_file((out / model_file).string(), model_bytes);
    detail::print_report(o, "train_", evaluate(nb, splits.train));
    if (!splits.val.empty()) detail::print_report(o, "val_", evaluate(nb, splits.val));
    if (!splits.test.empty()) detail::print_report(o, "test_", evaluate(nb, splits.test));
  } else {
    if (splits.val.empty()) throw InvalidArgument("validation split is empty");
    const auto chars_text = read_file(chars_path);
    chars_hash = sha256_hex(chars_text);
    const auto table = parse_character_table(chars_text);
    std::vector<std::string> train_names;
    for (const auto& e : splits.train) train_names.push_back(e.first_name);
    const auto vocab = build_vocab(table, train_names);
    const auto kind = parse_variant(variant);
    auto grid = grid_search(
        rc.train, [&](const TrainConfig& cell) { return ChgatModel::create(rc.model, kind, table, vocab, cell.seed); },
        splits.train, splits.val);
    const auto& model = *grid.best_model;
    model_file = "checkpoint.chgat";
    model_bytes = serialize_checkpoint(model);
    write_file((out / model_file).string(), model_bytes);
    {
      std::ofstream h(out / "history.csv", std::ios::trunc);
      write_history_csv(h, grid.best_result.history);
      std::ofstream g(out / "grid.csv", std::ios::trunc);
      write_grid_csv(g, grid.cells);
    }
    o << "best_lr: " << format_double(grid.best_learning_rate()) << '\n'
      << "best_wd: " << format_double(grid.best_weight_decay()) << '\n'
      << "best_epoch: " << grid.best_result.best_epoch << '\n';
    detail::print_report(o, "train_", evaluate(model, splits.train));
    detail::print_report(o, "val_", evaluate(model, splits.val));
    if (!splits.test.empty()) detail::print_report(o, "test_", evaluate(model, splits.test));
  }

  std::ofstream manifest(out / "manifest.txt", std::ios::trunc);
  manifest << "variant = " << variant << '\n'
           << "seed = " << rc.train.seed << '\n'
           << "config_sha256 = " << sha256_hex(rc.raw.to_text()) << '\n'
           << "names_sha256 = " << sha256_hex(names_text) << '\n'
           << "chars_sha256 = " << chars_hash << '\n'
           << "model_file = " << model_file << '\n'
           << "model_sha256 = " << sha256_hex(model_bytes) << '\n';
  o << "model_sha256: " << sha256_hex(model_bytes) << '\n';
  return {kExitOk, o.str()};
}

inline CommandResult cmd_eval(const std::string& model_path, const std::string& names_path) {
  const auto model = detail::load_any_model(model_path);
  const auto examples = detail::load_labeled(names_path);
  std::ostringstream o;
  detail::print_report(o, "", model.chgat ? evaluate(*model.chgat, examples) : evaluate(*model.nb, examples));
  return {kExitOk, o.str()};
}

inline CommandResult cmd_predict(const std::string& model_path, const std::vector<std::string>& names) {
  if (names.empty()) throw InvalidArgument("at least one --name is required");
  for (const auto& n : names) {
    if (n.empty()) throw EmptyName();
  }
  const auto model = detail::load_any_model(model_path);
  std::ostringstream o;
  for (const auto& n : names) {
    const auto p = model.chgat ? model.chgat->predict(n) : nb_predict(*model.nb, n);
    o << n << '\t' << (p.label == 1 ? 'F' : 'M') << '\t' << format_fixed(p.probability, 4) << '\n';
  }
  return {kExitOk, o.str()};
}

inline CommandResult cmd_stats(const std::string& names_path) {
  const auto s = compute_stats(load_name_records(names_path));
  std::ostringstream o;
  o << "total_records: " << s.total_records << '\n'
    << "unique_names: " << s.unique_names << '\n'
    << "ties: " << s.ties << '\n'
    << "m_to_f_percent: " << format_fixed(s.m_to_f_percent, 4) << '\n'
    << "same_gender_flip_percent: " << format_fixed(s.same_gender_flip_percent, 4) << '\n'
    << "reversal_flip_percent: " << format_fixed(s.reversal_flip_percent, 4) << '\n'
    << "two_char_labeled: " << s.two_char_labeled << '\n'
    << "same_gender_flips: " << s.same_gender_flips << '\n'
    << "reversal_candidates: " << s.reversal_candidates << '\n'
    << "reversal_flips: " << s.reversal_flips << '\n';
  return {kExitOk, o.str()};
}

inline int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::training_failed:
    case ErrorKind::diverged_loss:
      return kExitTraining;
    default:
      return kExitInput;
  }
}

/// Parses `args` (no program name), runs the subcommand and returns the exit code.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Chinese first-name gender classifier"};
  app.require_subcommand(1);

  std::string chars, out_dir, names, config_path, variant = "full", model_path;
  std::vector<std::string> predict_names;
  bool dump = false;

  auto* build = app.add_subcommand("build-graph", "Build character graphs and print node and edge counts");
  build->add_option("--chars", chars, "Character decomposition table (TSV)")->required();
  build->add_option("--out", out_dir, "Output directory")->required();
  build->add_flag("--dump", dump, "Write graph.jsonl into --out");

  auto* train_cmd = app.add_subcommand("train", "Train a model with grid search");
  train_cmd->add_option("--names", names, "Name-gender CSV")->required();
  train_cmd->add_option("--chars", chars, "Character decomposition table (TSV)");
  train_cmd->add_option("--config", config_path, "key = value config file")->required();
  train_cmd->add_option("--variant", variant, "full, variant_1, variant_2 or nb")
      ->check(CLI::IsMember({"full", "variant_1", "variant_2", "nb"}));
  train_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Weighted accuracy of a saved model");
  eval_cmd->add_option("--model", model_path, "Checkpoint or NB model")->required();
  eval_cmd->add_option("--names", names, "Name-gender CSV")->required();

  auto* predict_cmd = app.add_subcommand("predict", "Predict the gender of names");
  predict_cmd->add_option("--model", model_path, "Checkpoint or NB model")->required();
  predict_cmd->add_option("--name", predict_names, "First name (repeatable)")->required()->allow_extra_args();

  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics");
  stats_cmd->add_option("--names", names, "Name-gender CSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    CommandResult r;
    if (build->parsed()) {
      r = cmd_build_graph(chars, out_dir, dump);
    } else if (train_cmd->parsed()) {
      if (variant != "nb" && chars.empty()) throw InvalidArgument("--chars is required for variant " + variant);
      r = cmd_train(names, chars, config_path, variant, out_dir);
    } else if (eval_cmd->parsed()) {
      r = cmd_eval(model_path, names);
    } else if (predict_cmd->parsed()) {
      r = cmd_predict(model_path, predict_names);
    } else {
      r = cmd_stats(names);
    }
    out << r.summary;
    return r.exit_code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace chgat::cli
