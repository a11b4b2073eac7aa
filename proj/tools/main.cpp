// denc — command-line front end wiring the library into a full workflow:
// generate a corpus, train the twin encoders, index shots, retrieve per
// concept, and score runs against judgment pools.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "denc/common.hpp"
#include "denc/corpus.hpp"
#include "denc/diagnostics.hpp"
#include "denc/embedding.hpp"
#include "denc/evaluation.hpp"
#include "denc/model_io.hpp"
#include "denc/retrieval.hpp"
#include "denc/rng.hpp"
#include "denc/synth.hpp"
#include "denc/taxonomy.hpp"
#include "denc/train.hpp"

namespace {

using denc::ConfigError;
using denc::DataError;
using denc::NumericError;
using json = nlohmann::ordered_json;

// --- Key-value configuration ---------------------------------------------------

// Layered configuration: file < --set overrides < dedicated flags. Every key a
// command consults is recorded with its effective value (defaults included),
// and keys nobody consulted are rejected, so typos cannot silently no-op.
class KvConfig {
 public:
  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string trimmed = trim(line);
      if (trimmed.empty() || trimmed.front() == '#') continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value, got '" +
                          trimmed + "'");
      }
      set(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)), line_no);
    }
  }

  void set_kv(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got '" + spec + "'");
    }
    set(trim(spec.substr(0, eq)), trim(spec.substr(eq + 1)));
  }

  void set(const std::string& key, const std::string& value, std::size_t line_no = 0) {
    if (key.empty() || !std::all_of(key.begin(), key.end(), [](unsigned char c) {
          return std::isalnum(c) || c == '_';
        })) {
      const std::string at = line_no ? " (config line " + std::to_string(line_no) + ")" : "";
      throw ConfigError("invalid config key '" + key + "'" + at);
    }
    values_[key] = value;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const auto it = values_.find(key);
    const std::string value = it == values_.end() ? fallback : it->second;
    record(key, value);
    return value;
  }

  std::string require_string(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) {
      throw ConfigError("missing required config key '" + key + "'");
    }
    record(key, it->second);
    return it->second;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) {
    return parse_int(key, get_string(key, std::to_string(fallback)));
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) {
    const std::int64_t v = parse_int(key, get_string(key, std::to_string(fallback)));
    if (v < 0) throw ConfigError("config key '" + key + "' must be >= 0");
    return static_cast<std::uint64_t>(v);
  }

  double get_double(const std::string& key, double fallback) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", fallback);
    const std::string raw = get_string(key, buf);
    try {
      std::size_t used = 0;
      const double v = std::stod(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected a number, got '" + raw + "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) {
    const std::string raw = get_string(key, fallback ? "true" : "false");
    if (raw == "true" || raw == "1") return true;
    if (raw == "false" || raw == "0") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + raw + "'");
  }

  std::vector<std::int64_t> get_int_list(const std::string& key, const std::string& fallback) {
    std::vector<std::int64_t> out;
    for (const std::string& part : split(get_string(key, fallback), ',')) {
      out.push_back(parse_int(key, trim(part)));
    }
    return out;
  }

  std::vector<std::string> get_string_list(const std::string& key, const std::string& fallback,
                                           char sep) {
    std::vector<std::string> out;
    for (const std::string& part : split(get_string(key, fallback), sep)) {
      const std::string t = trim(part);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : values_) {
      if (consulted_.count(key) == 0) {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  }

  const std::vector<std::pair<std::string, std::string>>& resolved() const { return resolved_; }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : s) {
      if (c == sep) {
        parts.push_back(current);
        current.clear();
      } else {
        current += c;
      }
    }
    parts.push_back(current);
    return parts;
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

  std::int64_t parse_int(const std::string& key, const std::string& raw) const {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected an integer, got '" + raw + "'");
    }
  }

  void record(const std::string& key, const std::string& value) {
    if (consulted_.insert(key).second) resolved_.emplace_back(key, value);
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> consulted_;
  std::vector<std::pair<std::string, std::string>> resolved_;
};

// --- Run manifest --------------------------------------------------------------

struct RunMeta {
  std::string subcommand;
  std::vector<std::pair<std::string, std::string>> inputs;   // name → path
  std::vector<std::pair<std::string, std::string>> outputs;  // name → path
  std::uint64_t seed = 0;
  std::string checkpoint_fingerprint;
  json extra;  // command-specific facts (counts, scores)
};

void write_manifest(const std::string& path, const KvConfig& cfg, const RunMeta& meta,
                    double seconds) {
  if (path.empty()) return;
  for (const auto& [name, out] : meta.outputs) {
    if (!std::filesystem::exists(out)) {
      throw std::runtime_error("internal error: manifest output '" + name + "' missing: " + out);
    }
  }
  json doc;
  doc["subcommand"] = meta.subcommand;
  json config = json::object();
  for (const auto& [key, value] : cfg.resolved()) config[key] = value;
  doc["config"] = config;
  json inputs = json::object(), outputs = json::object();
  for (const auto& [name, p] : meta.inputs) inputs[name] = p;
  for (const auto& [name, p] : meta.outputs) outputs[name] = p;
  doc["inputs"] = inputs;
  doc["outputs"] = outputs;
  doc["seed"] = meta.seed;
  if (!meta.checkpoint_fingerprint.empty()) {
    doc["checkpoint_fingerprint"] = meta.checkpoint_fingerprint;
  }
  if (!meta.extra.is_null()) doc["details"] = meta.extra;
  doc["duration_seconds"] = seconds;

  denc::AtomicFile file(path);
  file.stream() << doc.dump(2) << '\n';
  file.commit();
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_text_atomic(const std::string& path, const std::string& content) {
  denc::AtomicFile file(path);
  file.stream() << content;
  file.commit();
}

std::string format6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// --- Subcommands ---------------------------------------------------------------

int cmd_taxonomy_validate(const std::string& path, KvConfig& cfg,
                          const std::string& manifest_path) {
  Timer timer;
  cfg.reject_unknown();
  const denc::ConceptTree tree = denc::ConceptTree::load_file(path);

  std::string by_category;
  for (const denc::Category c : denc::kAllCategories) {
    if (!by_category.empty()) by_category += ", ";
    by_category += std::string(denc::category_name(c)) + " " +
                   std::to_string(tree.level1_ids(c).size());
  }
  std::printf("taxonomy OK: %zu concepts, %zu level-1 (%s)\n", tree.size(), tree.level1_count(),
              by_category.c_str());

  RunMeta meta;
  meta.subcommand = "taxonomy-validate";
  meta.inputs.emplace_back("taxonomy", path);
  meta.extra = {{"concepts", tree.size()}, {"level1", tree.level1_count()}};
  write_manifest(manifest_path, cfg, meta, timer.seconds());
  return 0;
}

int cmd_synth(KvConfig& cfg, const std::string& manifest_override) {
  Timer timer;
  denc::SyntheticCorpusSpec spec;
  spec.prototype_count = static_cast<int>(cfg.get_int("prototypes", spec.prototype_count));
  spec.shots_per_prototype =
      static_cast<int>(cfg.get_int("shots_per_prototype", spec.shots_per_prototype));
  spec.frames_min = static_cast<int>(cfg.get_int("frames_min", spec.frames_min));
  spec.frames_max = static_cast<int>(cfg.get_int("frames_max", spec.frames_max));
  spec.feature_dim = cfg.get_int("feature_dim", spec.feature_dim);
  spec.noise = cfg.get_double("noise", spec.noise);
  spec.judgment_rate = cfg.get_double("judgment_rate", spec.judgment_rate);
  std::string default_templates;
  for (const std::string& t : spec.caption_templates) {
    if (!default_templates.empty()) default_templates += '|';
    default_templates += t;
  }
  spec.caption_templates = cfg.get_string_list("caption_templates", default_templates, '|');
  spec.seed = cfg.get_seed("seed", 1);
  const std::int64_t embed_dim = cfg.get_int("embed_dim", 32);
  const std::uint64_t table_seed = cfg.get_seed("table_seed", spec.seed + 1);
  const std::string out_dir = cfg.require_string("out");
  cfg.reject_unknown();

  const denc::SyntheticCorpus corpus = denc::generate_synthetic_corpus(spec);
  denc::Rng table_rng(table_seed);
  const denc::EmbeddingTable table =
      denc::random_embedding_table(corpus.vocabulary, embed_dim, table_rng);

  std::filesystem::create_directories(out_dir);
  const auto in_dir = [&](const char* name) { return (std::filesystem::path(out_dir) / name).string(); };
  const std::string features = in_dir("features.bin");
  const std::string captions_train = in_dir("captions_train.tsv");
  const std::string captions_val = in_dir("captions_val.tsv");
  const std::string embeddings = in_dir("embeddings.txt");
  const std::string qrels = in_dir("qrels.txt");
  const std::string taxonomy = in_dir("taxonomy.tsv");

  denc::save_features_binary(features, corpus.shots);
  denc::save_captions(captions_train, corpus.train_captions);
  denc::save_captions(captions_val, corpus.val_captions);
  denc::save_embeddings(embeddings, table);
  write_text_atomic(qrels, corpus.qrels_text);
  write_text_atomic(taxonomy, corpus.taxonomy_text);

  std::printf("synthetic corpus: %zu shots, %zu+%zu captions, %zu topics, %zu-word vocabulary -> %s\n",
              corpus.shots.size(), corpus.train_captions.size(), corpus.val_captions.size(),
              corpus.concept_ids.size(), corpus.vocabulary.size(), out_dir.c_str());

  RunMeta meta;
  meta.subcommand = "synth";
  meta.outputs = {{"features", features},       {"captions_train", captions_train},
                  {"captions_val", captions_val}, {"embeddings", embeddings},
                  {"qrels", qrels},             {"taxonomy", taxonomy}};
  meta.seed = spec.seed;
  meta.extra = {{"shots", corpus.shots.size()},
                {"train_captions", corpus.train_captions.size()},
                {"val_captions", corpus.val_captions.size()},
                {"topics", corpus.concept_ids.size()},
                {"vocabulary", corpus.vocabulary.size()}};
  const std::string manifest =
      manifest_override.empty() ? in_dir("manifest.json") : manifest_override;
  write_manifest(manifest, cfg, meta, timer.seconds());
  return 0;
}

denc::EncoderConfig encoder_config_from(KvConfig& cfg) {
  denc::EncoderConfig enc;
  enc.hidden = cfg.get_int("hidden", enc.hidden);
  enc.attention_dim = cfg.get_int("attention_dim", enc.attention_dim);
  enc.common_dim = cfg.get_int("common_dim", enc.common_dim);
  enc.conv_widths = cfg.get_int_list("conv_widths", "2,3,4");
  enc.conv_filters = cfg.get_int("conv_filters", enc.conv_filters);
  enc.max_frames = cfg.get_int("max_frames", enc.max_frames);
  return enc;
}

int cmd_train(KvConfig& cfg, const std::string& manifest_override) {
  Timer timer;
  const std::string features_path = cfg.require_string("features");
  const std::string captions_path = cfg.require_string("captions");
  const std::string val_path = cfg.get_string("val_captions", captions_path);
  const std::string embeddings_path = cfg.require_string("embeddings");
  const std::string out = cfg.get_string("out", "model.denc");
  const std::string log_path = cfg.get_string("log", out + ".log");

  denc::EncoderConfig enc = encoder_config_from(cfg);

  denc::TrainConfig train;
  train.margin = cfg.get_double("margin", train.margin);
  train.learning_rate = cfg.get_double("learning_rate", train.learning_rate);
  train.batch_size = static_cast<int>(cfg.get_int("batch_size", train.batch_size));
  train.epochs = static_cast<int>(cfg.get_int("epochs", train.epochs));
  train.precision = cfg.get_string("precision", train.precision);
  train.adam_beta1 = cfg.get_double("adam_beta1", train.adam_beta1);
  train.adam_beta2 = cfg.get_double("adam_beta2", train.adam_beta2);
  train.adam_eps = cfg.get_double("adam_eps", train.adam_eps);
  train.seed = cfg.get_seed("seed", train.seed);
  train.strict_repro = cfg.get_bool("strict_repro", train.strict_repro);
  const std::int64_t threads = cfg.get_int("threads", 1);  // training itself is serial
  if (threads < 1) throw ConfigError("config key 'threads' must be >= 1");
  cfg.reject_unknown();
  train.validate();

  const std::vector<denc::FeatureSequence> shots = denc::load_features(features_path);
  if (shots.empty()) throw DataError("feature file contains no shots: " + features_path);
  const std::vector<denc::CaptionPair> train_pairs = denc::load_captions(captions_path);
  const std::vector<denc::CaptionPair> val_pairs = denc::load_captions(val_path);
  const denc::EmbeddingTable table = denc::load_embeddings(embeddings_path);

  enc.feature_dim = shots.front().dim();
  enc.embed_dim = table.dim();
  enc.bow_dim = static_cast<std::int64_t>(table.size());

  std::printf("training on %zu pairs (%zu shots, |V|=%zu), %d epochs\n", train_pairs.size(),
              shots.size(), table.size(), train.epochs);

  std::string log_text = "epoch\tmean_loss\trecall1\trecall5\tmedian_rank\n";
  int best_epoch = 0;
  double best_recall1 = 0;
  const auto run = [&](auto scalar_tag) {
    using Scalar = decltype(scalar_tag);
    const denc::TrainedModel<Scalar> model = denc::fit<Scalar>(
        train_pairs, val_pairs, shots, table, enc, train,
        [&](const denc::EpochStats& s, const denc::EncoderParams<Scalar>&) {
          std::printf("epoch %3d/%d  loss %.6f  recall@1 %.3f  recall@5 %.3f  median %.1f\n",
                      s.epoch, train.epochs, s.mean_loss, s.recall1, s.recall5, s.median_rank);
          log_text += std::to_string(s.epoch) + '\t' + format6(s.mean_loss) + '\t' +
                      format6(s.recall1) + '\t' + format6(s.recall5) + '\t' +
                      format6(s.median_rank) + '\n';
        });
    denc::save_model(out, model.best);
    best_epoch = model.best_epoch;
    best_recall1 = model.history[static_cast<std::size_t>(model.best_epoch - 1)].recall1;
  };
  if (train.precision == "f32") {
    run(float{});
  } else {
    run(double{});
  }

  write_text_atomic(log_path, log_text);
  const std::string fingerprint = denc::checkpoint_fingerprint(out);
  std::printf("best epoch %d (recall@1 %.3f); checkpoint %s (fingerprint %s)\n", best_epoch,
              best_recall1, out.c_str(), fingerprint.c_str());

  RunMeta meta;
  meta.subcommand = "train";
  meta.inputs = {{"features", features_path},
                 {"captions", captions_path},
                 {"val_captions", val_path},
                 {"embeddings", embeddings_path}};
  meta.outputs = {{"checkpoint", out}, {"log", log_path}};
  meta.seed = train.seed;
  meta.checkpoint_fingerprint = fingerprint;
  meta.extra = {{"best_epoch", best_epoch}, {"best_recall1", best_recall1}};
  write_manifest(manifest_override.empty() ? out + ".manifest.json" : manifest_override, cfg,
                 meta, timer.seconds());
  return 0;
}

int cmd_index(KvConfig& cfg, const std::string& manifest_override) {
  Timer timer;
  const std::string checkpoint = cfg.require_string("checkpoint");
  const std::string features_path = cfg.require_string("features");
  const std::string out = cfg.get_string("out", "index.didx");
  std::int64_t threads = cfg.get_int("threads", 1);
  if (threads < 1) throw ConfigError("config key 'threads' must be >= 1");
  if (cfg.get_bool("strict_repro", false)) threads = 1;
  cfg.reject_unknown();

  const denc::EncoderParams<double> params = denc::load_model(checkpoint);
  const std::vector<denc::FeatureSequence> shots = denc::load_features(features_path);
  const std::string fingerprint = denc::checkpoint_fingerprint(checkpoint);

  const denc::ShotIndex index =
      denc::build_index(shots, params, fingerprint, static_cast<std::size_t>(threads));
  denc::save_index(index, out);
  std::printf("indexed %zu shots (common dim %lld) -> %s\n", index.size(),
              static_cast<long long>(index.dim()), out.c_str());

  RunMeta meta;
  meta.subcommand = "index";
  meta.inputs = {{"checkpoint", checkpoint}, {"features", features_path}};
  meta.outputs = {{"index", out}};
  meta.checkpoint_fingerprint = fingerprint;
  meta.extra = {{"shots", index.size()}, {"dim", index.dim()}};
  write_manifest(manifest_override.empty() ? out + ".manifest.json" : manifest_override, cfg,
                 meta, timer.seconds());
  return 0;
}

int cmd_retrieve(KvConfig& cfg, const std::string& manifest_override) {
  Timer timer;
  const std::string checkpoint = cfg.require_string("checkpoint");
  const std::string index_path = cfg.require_string("index");
  const std::string taxonomy_path = cfg.require_string("taxonomy");
  const std::string embeddings_path = cfg.require_string("embeddings");
  const std::string concepts_csv = cfg.get_string("concepts", "");
  const std::int64_t k = cfg.get_int("k", 1000);
  if (k < 1) throw ConfigError("config key 'k' must be >= 1");
  const std::string run_tag = cfg.get_string("run_tag", "denc");
  const bool label_only = cfg.get_bool("label_only", false);
  const std::string out = cfg.get_string("out", "run.txt");
  cfg.reject_unknown();

  const denc::EncoderParams<double> params = denc::load_model(checkpoint);
  const denc::ShotIndex index = denc::load_index(index_path);
  const std::string fingerprint = denc::checkpoint_fingerprint(checkpoint);
  if (!index.checkpoint_fingerprint.empty() && index.checkpoint_fingerprint != fingerprint) {
    throw DataError("shot index was built from checkpoint fingerprint " +
                    index.checkpoint_fingerprint + ", but " + checkpoint + " has fingerprint " +
                    fingerprint);
  }
  const denc::ConceptTree tree = denc::ConceptTree::load_file(taxonomy_path);
  const denc::EmbeddingTable table = denc::load_embeddings(embeddings_path);

  std::vector<std::string> concept_ids;
  if (concepts_csv.empty()) {
    for (const std::string& id : tree.ids_in_order()) {
      if (tree.get(id).level == 1) concept_ids.push_back(id);
    }
  } else {
    for (const std::string& part : KvConfig::split(concepts_csv, ',')) {
      if (!part.empty()) concept_ids.push_back(part);
    }
  }
  if (concept_ids.empty()) throw ConfigError("no concepts requested");

  std::vector<denc::RankedList> lists;
  for (const std::string& id : concept_ids) {
    denc::AugmentedQuery query = tree.expand_query(id);
    if (label_only) query.sentences.resize(1);
    lists.push_back(
        denc::rank_shots(query, index, table, params, static_cast<std::size_t>(k)));
  }
  denc::save_run_file(lists, run_tag, out);
  std::size_t total_lines = 0;
  for (const denc::RankedList& list : lists) total_lines += list.entries.size();
  std::printf("ranked %zu topics (%zu run lines, k=%lld) -> %s\n", lists.size(), total_lines,
              static_cast<long long>(k), out.c_str());

  RunMeta meta;
  meta.subcommand = "retrieve";
  meta.inputs = {{"checkpoint", checkpoint},
                 {"index", index_path},
                 {"taxonomy", taxonomy_path},
                 {"embeddings", embeddings_path}};
  meta.outputs = {{"run", out}};
  meta.checkpoint_fingerprint = fingerprint;
  meta.extra = {{"topics", lists.size()}, {"run_lines", total_lines}};
  write_manifest(manifest_override.empty() ? out + ".manifest.json" : manifest_override, cfg,
                 meta, timer.seconds());
  return 0;
}

std::vector<std::pair<std::string, double>> score_run(const denc::RunFile& run,
                                                      const denc::JudgmentPool& pool,
                                                      double epsilon) {
  std::vector<std::pair<std::string, double>> scores;
  for (const denc::RankedList& list : run.topics) {
    denc::RankedShots shots;
    shots.reserve(list.entries.size());
    for (const denc::ScoredShot& e : list.entries) shots.push_back(e.shot_id);
    scores.emplace_back(list.topic_id, denc::xinfap(shots, pool.topic(list.topic_id), epsilon));
  }
  return scores;
}

int cmd_evaluate(KvConfig& cfg, const std::string& manifest_path) {
  Timer timer;
  const std::string run_path = cfg.require_string("run");
  const std::string qrels_path = cfg.require_string("qrels");
  const double epsilon = cfg.get_double("epsilon", denc::kDefaultEvalEpsilon);
  const std::string compare_path = cfg.get_string("compare", "");
  const std::string format = cfg.get_string("format", "text");
  const std::string out = cfg.get_string("out", "");
  cfg.reject_unknown();
  if (format != "text" && format != "tsv") {
    throw ConfigError("config key 'format': expected text or tsv, got '" + format + "'");
  }

  const denc::JudgmentPool pool = denc::JudgmentPool::load_file(qrels_path);
  const denc::RunFile run = denc::load_run_file(run_path);
  const auto scores = score_run(run, pool, epsilon);

  std::string text;
  double mean = 0;
  if (compare_path.empty()) {
    const denc::EvalReport report = denc::make_report(scores);
    mean = report.mean;
    text = format == "tsv" ? denc::format_report_tsv(report) : denc::format_report_text(report);
  } else {
    const denc::RunFile other = denc::load_run_file(compare_path);
    std::map<std::string, double> other_scores;
    for (const auto& [topic, score] : score_run(other, pool, epsilon)) {
      other_scores.emplace(topic, score);
    }
    const std::string col_a = run.run_tag, col_b = other.run_tag;
    double mean_a = 0, mean_b = 0;
    std::ostringstream table;
    const int width = static_cast<int>(std::max({col_a.size(), col_b.size(), std::size_t{10}}));
    const auto row = [&](const std::string& topic, double a, double b) {
      if (format == "tsv") {
        table << topic << '\t' << format6(a) << '\t' << format6(b) << '\t' << format6(b - a)
              << '\n';
      } else {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-16s  %*s  %*s  %+.6f\n", topic.c_str(), width,
                      format6(a).c_str(), width, format6(b).c_str(), b - a);
        table << buf;
      }
    };
    if (format == "tsv") {
      table << "topic\t" << col_a << '\t' << col_b << "\tdelta\n";
    } else {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%-16s  %*s  %*s  %s\n", "topic", width, col_a.c_str(),
                    width, col_b.c_str(), "delta");
      table << buf;
    }
    for (const auto& [topic, score] : scores) {
      const auto it = other_scores.find(topic);
      if (it == other_scores.end()) {
        throw DataError("comparison run '" + col_b + "' lacks topic '" + topic + "'");
      }
      row(topic, score, it->second);
      mean_a += score / static_cast<double>(scores.size());
      mean_b += it->second / static_cast<double>(scores.size());
    }
    row("mean", mean_a, mean_b);
    mean = mean_a;
    text = table.str();
  }

  if (out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    write_text_atomic(out, text);
    std::printf("MXinfAP %.6f -> %s\n", mean, out.c_str());
  }

  RunMeta meta;
  meta.subcommand = "evaluate";
  meta.inputs = {{"run", run_path}, {"qrels", qrels_path}};
  if (!compare_path.empty()) meta.inputs.emplace_back("compare", compare_path);
  if (!out.empty()) meta.outputs.emplace_back("report", out);
  meta.extra = {{"mean_xinfap", mean}};
  write_manifest(manifest_path, cfg, meta, timer.seconds());
  return 0;
}

int cmd_gradcheck(KvConfig& cfg, const std::string& manifest_path) {
  Timer timer;
  denc::FdCheckConfig fd;
  fd.encoder.feature_dim = cfg.get_int("feature_dim", fd.encoder.feature_dim);
  fd.encoder.embed_dim = cfg.get_int("embed_dim", fd.encoder.embed_dim);
  fd.encoder.bow_dim = cfg.get_int("bow_dim", fd.encoder.bow_dim);
  fd.encoder.hidden = cfg.get_int("hidden", fd.encoder.hidden);
  fd.encoder.attention_dim = cfg.get_int("attention_dim", fd.encoder.attention_dim);
  fd.encoder.common_dim = cfg.get_int("common_dim", fd.encoder.common_dim);
  fd.encoder.conv_widths = cfg.get_int_list("conv_widths", "2,3");
  fd.encoder.conv_filters = cfg.get_int("conv_filters", fd.encoder.conv_filters);
  fd.pairs = static_cast<int>(cfg.get_int("pairs", fd.pairs));
  fd.frames = cfg.get_int("frames", fd.frames);
  fd.tokens = static_cast<int>(cfg.get_int("tokens", fd.tokens));
  fd.margin = cfg.get_double("margin", fd.margin);
  fd.step = cfg.get_double("step", fd.step);
  fd.seed = cfg.get_seed("seed", fd.seed);
  const double threshold = cfg.get_double("threshold", 1e-4);
  cfg.reject_unknown();

  const denc::FdCheckReport report = denc::fd_check_encoder(fd);
  std::printf("checked %lld parameter scalars: worst relative error %.3e (probe loss %.6f)\n",
              static_cast<long long>(report.scalar_count), report.worst_rel_error, report.loss);

  RunMeta meta;
  meta.subcommand = "gradcheck";
  meta.seed = fd.seed;
  meta.extra = {{"scalars", report.scalar_count},
                {"worst_rel_error", report.worst_rel_error},
                {"loss", report.loss}};
  write_manifest(manifest_path, cfg, meta, timer.seconds());

  if (report.loss <= 0) {
    throw NumericError("probe loss is zero; the gradient check is vacuous at these settings");
  }
  if (report.worst_rel_error > threshold) {
    throw NumericError("gradient check failed: worst relative error " +
                       std::to_string(report.worst_rel_error) + " exceeds threshold " +
                       std::to_string(threshold));
  }
  return 0;
}

// --- Wiring --------------------------------------------------------------------

struct SubOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string manifest;
  std::string positional;
  std::vector<std::pair<std::string, std::string>> direct;  // dedicated-flag overrides
};

void add_common(CLI::App* sub, SubOptions& opt) {
  sub->add_option("--config", opt.config_path, "key=value configuration file");
  sub->add_option("--set", opt.sets, "override a config key (key=value, repeatable)");
  sub->add_option("--manifest", opt.manifest, "write the run manifest to this path");
}

void add_kv_option(CLI::App* sub, SubOptions& opt, const std::string& flag,
                   const std::string& key, const std::string& help) {
  sub->add_option_function<std::string>(
      flag, [&opt, key](const std::string& v) { opt.direct.emplace_back(key, v); }, help);
}

void add_kv_flag(CLI::App* sub, SubOptions& opt, const std::string& flag, const std::string& key,
                 const std::string& help) {
  sub->add_flag_callback(
      flag, [&opt, key] { opt.direct.emplace_back(key, "true"); }, help);
}

KvConfig build_config(const SubOptions& opt) {
  KvConfig cfg;
  if (!opt.config_path.empty()) cfg.load_file(opt.config_path);
  for (const std::string& spec : opt.sets) cfg.set_kv(spec);
  for (const auto& [key, value] : opt.direct) cfg.set(key, value);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"denc: twin-encoder text-to-video retrieval toolkit"};
  app.require_subcommand(1);

  std::map<std::string, SubOptions> opts;
  std::map<std::string, std::function<int(KvConfig&, SubOptions&)>> runners;

  {
    SubOptions& o = opts["taxonomy-validate"];
    CLI::App* sub = app.add_subcommand("taxonomy-validate", "check a concept taxonomy file");
    sub->add_option("file", o.positional, "taxonomy file")->required();
    add_common(sub, o);
    runners["taxonomy-validate"] = [](KvConfig& cfg, SubOptions& o2) {
      return cmd_taxonomy_validate(o2.positional, cfg, o2.manifest);
    };
  }
  {
    SubOptions& o = opts["synth"];
    CLI::App* sub = app.add_subcommand("synth", "generate a synthetic retrieval corpus");
    add_common(sub, o);
    add_kv_option(sub, o, "--out", "out", "output directory");
    add_kv_option(sub, o, "--seed", "seed", "corpus seed");
    runners["synth"] = [](KvConfig& cfg, SubOptions& o2) { return cmd_synth(cfg, o2.manifest); };
  }
  {
    SubOptions& o = opts["train"];
    CLI::App* sub = app.add_subcommand("train", "train the twin encoders on caption pairs");
    add_common(sub, o);
    add_kv_option(sub, o, "--features", "features", "shot feature file");
    add_kv_option(sub, o, "--captions", "captions", "training caption file");
    add_kv_option(sub, o, "--val-captions", "val_captions", "held-out caption file");
    add_kv_option(sub, o, "--embeddings", "embeddings", "word embedding file");
    add_kv_option(sub, o, "--out", "out", "checkpoint path");
    add_kv_option(sub, o, "--seed", "seed", "training seed");
    add_kv_option(sub, o, "--threads", "threads", "worker cap (training math is serial)");
    add_kv_flag(sub, o, "--strict-repro", "strict_repro", "force bitwise-reproducible settings");
    runners["train"] = [](KvConfig& cfg, SubOptions& o2) { return cmd_train(cfg, o2.manifest); };
  }
  {
    SubOptions& o = opts["index"];
    CLI::App* sub = app.add_subcommand("index", "encode a shot corpus into a search index");
    add_common(sub, o);
    add_kv_option(sub, o, "--checkpoint", "checkpoint", "model checkpoint");
    add_kv_option(sub, o, "--features", "features", "shot feature file");
    add_kv_option(sub, o, "--out", "out", "index path");
    add_kv_option(sub, o, "--threads", "threads", "encoder worker count");
    add_kv_flag(sub, o, "--strict-repro", "strict_repro", "force serial encoding");
    runners["index"] = [](KvConfig& cfg, SubOptions& o2) { return cmd_index(cfg, o2.manifest); };
  }
  {
    SubOptions& o = opts["retrieve"];
    CLI::App* sub = app.add_subcommand("retrieve", "rank shots for taxonomy concepts");
    add_common(sub, o);
    add_kv_option(sub, o, "--checkpoint", "checkpoint", "model checkpoint");
    add_kv_option(sub, o, "--index", "index", "shot index file");
    add_kv_option(sub, o, "--taxonomy", "taxonomy", "concept taxonomy file");
    add_kv_option(sub, o, "--embeddings", "embeddings", "word embedding file");
    add_kv_option(sub, o, "--concepts", "concepts", "comma-separated concept ids (default: all level-1)");
    add_kv_option(sub, o, "--k", "k", "ranked-list depth");
    add_kv_option(sub, o, "--run-tag", "run_tag", "run identifier written into the run file");
    add_kv_option(sub, o, "--out", "out", "run file path");
    add_kv_flag(sub, o, "--label-only", "label_only", "query with the concept label only");
    runners["retrieve"] = [](KvConfig& cfg, SubOptions& o2) {
      return cmd_retrieve(cfg, o2.manifest);
    };
  }
  {
    SubOptions& o = opts["evaluate"];
    CLI::App* sub = app.add_subcommand("evaluate", "score a run file against judgment pools");
    add_common(sub, o);
    add_kv_option(sub, o, "--run", "run", "run file");
    add_kv_option(sub, o, "--qrels", "qrels", "judgment pool file");
    add_kv_option(sub, o, "--epsilon", "epsilon", "relevance-ratio smoothing constant");
    add_kv_option(sub, o, "--compare", "compare", "second run file; adds per-topic deltas");
    add_kv_option(sub, o, "--out", "out", "write the report here instead of stdout");
    add_kv_flag(sub, o, "--tsv", "format_tsv_flag", "tab-separated report");
    runners["evaluate"] = [](KvConfig& cfg, SubOptions& o2) { return cmd_evaluate(cfg, o2.manifest); };
  }
  {
    SubOptions& o = opts["gradcheck"];
    CLI::App* sub = app.add_subcommand("gradcheck", "finite-difference check of the gradients");
    add_common(sub, o);
    add_kv_option(sub, o, "--seed", "seed", "probe seed");
    runners["gradcheck"] = [](KvConfig& cfg, SubOptions& o2) {
      return cmd_gradcheck(cfg, o2.manifest);
    };
  }

  try {
    app.parse(argc, argv);
    for (auto& [name, runner] : runners) {
      if (app.got_subcommand(name)) {
        SubOptions& o = opts[name];
        // The --tsv flag is sugar for format=tsv.
        for (auto& [key, value] : o.direct) {
          if (key == "format_tsv_flag") {
            key = "format";
            value = "tsv";
          }
        }
        KvConfig cfg = build_config(o);
        return runner(cfg, o);
      }
    }
    std::fprintf(stderr, "error: no subcommand selected\n");
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
