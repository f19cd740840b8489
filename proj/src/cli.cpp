#include "tagtrain/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "tagtrain/corpus.hpp"
#include "tagtrain/fairness.hpp"
#include "tagtrain/lexdb.hpp"
#include "tagtrain/objective.hpp"
#include "tagtrain/rng.hpp"
#include "tagtrain/sampler.hpp"
#include "tagtrain/trainer.hpp"
#include "tagtrain/vocab.hpp"
#include "tagtrain/zeroshot.hpp"

namespace fs = std::filesystem;

namespace tagtrain {

namespace {

// Writes through a temp file and renames, so a failed command leaves no
// partial artifact behind.
void write_file_atomic(const std::string& path,
                       const std::function<void(std::ostream&)>& emit) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    emit(out);
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("failed while writing " + path);
    }
  }
  fs::rename(tmp, path);
}

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(std::string(what) + " not found: " + path);
  return in;
}

LexDb load_wordnet(const std::string& dir) {
  if (!fs::exists(dir)) throw std::runtime_error("wordnet directory not found: " + dir);
  return load_database(dir);
}

std::map<std::string, std::size_t> vocab_class_index(const Vocabulary& vocab) {
  std::set<std::string> keys;
  for (const auto& [key, tag] : vocab.tags) keys.insert(key);
  return class_index_of_keys(keys);
}

struct TrainFlags {
  std::string config_path;
  std::string optimizer;
  std::uint64_t steps = 0;
  std::uint64_t batch = 0;
  double base_lr = -1.0;
  std::uint64_t ref_batch = 0;
  double weight_decay = -1.0;
  double momentum = -1.0;
  double warmup_frac = -1.0;
  std::string no_decay;
  bool mixup = false;
  double mixup_alpha = -1.0;
  double ema_decay = -1.0;
  double init_scale = -1.0;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value config file");
  cmd->add_option("--optimizer", f.optimizer, "sgd-nesterov (default) or adamw");
  cmd->add_option("--steps", f.steps, "total optimizer steps");
  cmd->add_option("--batch", f.batch, "mini-batch size");
  cmd->add_option("--base-lr", f.base_lr,
                  "base learning rate at the reference batch size"
                  " (default 0.1 for sgd-nesterov, 4e-4 for adamw)");
  cmd->add_option("--ref-batch", f.ref_batch,
                  "reference batch size for linear lr scaling (default 256 / 8192)");
  cmd->add_option("--weight-decay", f.weight_decay, "default 1e-5 (sgd) / 0.1 (adamw)");
  cmd->add_option("--momentum", f.momentum, "Nesterov momentum (default 0.9)");
  cmd->add_option("--warmup-frac", f.warmup_frac,
                  "fraction of steps spent in linear warmup (default 0.05)");
  cmd->add_option("--no-decay", f.no_decay,
                  "comma-separated parameter groups excluded from weight decay");
  cmd->add_flag("--mixup", f.mixup, "enable mixup");
  cmd->add_option("--mixup-alpha", f.mixup_alpha, "mixup Beta parameter (default 0.1)");
  cmd->add_option("--ema-decay", f.ema_decay, "EMA decay rate (default 1e-4)");
  cmd->add_option("--init-scale", f.init_scale, "random init scale (default 0.01)");
}

TrainConfig resolve_train_config(const TrainFlags& f, std::uint64_t seed) {
  TrainConfig cfg;
  if (!f.config_path.empty()) {
    std::ifstream in = open_input(f.config_path, "config file");
    cfg = parse_train_config(in);
  }
  if (!f.optimizer.empty()) {
    const auto kind = optimizer_kind_from(f.optimizer);
    if (!kind) throw std::runtime_error("unknown optimizer '" + f.optimizer + "'");
    const auto keep_schedule = cfg.schedule;
    const bool keep_mixup = cfg.use_mixup;
    cfg.optimizer = *kind == OptimizerKind::SgdNesterov ? OptimizerConfig::sgd_defaults()
                                                        : OptimizerConfig::adamw_defaults();
    cfg.schedule = keep_schedule;
    cfg.use_mixup = keep_mixup;
  }
  if (f.steps > 0) cfg.schedule.total_steps = f.steps;
  if (f.batch > 0) cfg.optimizer.batch = f.batch;
  if (f.base_lr >= 0.0) cfg.optimizer.base_lr = f.base_lr;
  if (f.ref_batch > 0) cfg.optimizer.ref_batch = f.ref_batch;
  if (f.weight_decay >= 0.0) cfg.optimizer.weight_decay = f.weight_decay;
  if (f.momentum >= 0.0) cfg.optimizer.momentum = f.momentum;
  if (f.warmup_frac >= 0.0) cfg.schedule.warmup_frac = f.warmup_frac;
  if (!f.no_decay.empty()) {
    std::istringstream ss(f.no_decay);
    std::string group;
    while (std::getline(ss, group, ',')) {
      if (!group.empty()) cfg.optimizer.wd_exclusions.insert(group);
    }
  }
  if (f.mixup) cfg.use_mixup = true;
  if (f.mixup_alpha >= 0.0) cfg.mixup_alpha = f.mixup_alpha;
  if (f.ema_decay >= 0.0) cfg.ema_decay = f.ema_decay;
  if (f.init_scale >= 0.0) cfg.init_scale = f.init_scale;
  cfg.seed = seed;
  return cfg;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// ---- synth helpers ----------------------------------------------------

std::vector<std::string> read_word_list(const std::string& path) {
  std::ifstream in = open_input(path, "word list");
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line[0] != '#') words.push_back(line);
  }
  return words;
}

void write_counts_from_corpus(const Corpus& corpus, std::ostream& out) {
  std::map<std::string, std::uint64_t> counts;
  for (const ImageRecord& rec : corpus) {
    std::set<std::string> uniq(rec.tags.begin(), rec.tags.end());
    for (const auto& tag : uniq) ++counts[tag];
  }
  for (const auto& [tag, count] : counts) out << tag << '\t' << count << '\n';
}

// ---- prediction file formats ------------------------------------------

// topk.csv rows: id,rank,canonical_key (no header).
TopkPredictions read_topk_csv(const std::string& path) {
  std::ifstream in = open_input(path, "predictions file");
  TopkPredictions preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, rank, key;
    if (!std::getline(ss, id, ',') || !std::getline(ss, rank, ',') ||
        !std::getline(ss, key, ',')) {
      throw std::runtime_error("bad top-k prediction line " + std::to_string(line_no));
    }
    preds[id].push_back(key);
  }
  return preds;
}

// predictions.csv rows: id,class_index,class_name (no header).
std::map<std::string, int> read_class_predictions_csv(const std::string& path) {
  std::ifstream in = open_input(path, "predictions file");
  std::map<std::string, int> preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, cls;
    if (!std::getline(ss, id, ',') || !std::getline(ss, cls, ',')) {
      throw std::runtime_error("bad class prediction line " + std::to_string(line_no));
    }
    preds[id] = std::stoi(cls);
  }
  return preds;
}

// ---- zero-shot glue ----------------------------------------------------

std::vector<std::vector<double>> hashtag_probability_rows(const TrainState& state,
                                                          const Corpus& eval_corpus,
                                                          bool use_ema) {
  std::vector<std::vector<double>> rows;
  rows.reserve(eval_corpus.size());
  for (const ImageRecord& rec : eval_corpus) {
    if (rec.features.empty()) {
      throw std::runtime_error("eval image without features: " + rec.id);
    }
    rows.push_back(softmax(logits_of(state, rec.features, use_ema)));
  }
  return rows;
}

double balanced_accuracy(const Corpus& eval_corpus, const std::vector<std::size_t>& predicted) {
  std::map<int, std::pair<std::uint64_t, std::uint64_t>> per_class;  // correct, total
  for (std::size_t i = 0; i < eval_corpus.size(); ++i) {
    if (!eval_corpus[i].label) throw std::runtime_error("eval image without label");
    auto& [correct, total] = per_class[*eval_corpus[i].label];
    ++total;
    if (static_cast<std::size_t>(*eval_corpus[i].label) == predicted[i]) ++correct;
  }
  double acc = 0.0;
  for (const auto& [cls, ct] : per_class) {
    acc += static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  return acc / static_cast<double>(per_class.size());
}

// ---- subcommand bodies --------------------------------------------------

int cmd_build_vocab(const std::string& counts_path, const std::string& wordnet_dir,
                    std::uint64_t min_count, const std::string& out_path, std::ostream& err) {
  std::ifstream counts_in = open_input(counts_path, "counts file");
  const auto counts = read_hashtag_counts_tsv(counts_in);
  const LexDb db = load_wordnet(wordnet_dir);
  const Vocabulary vocab = build_vocabulary(counts, db, min_count);
  write_file_atomic(out_path, [&](std::ostream& out) { write_vocabulary_tsv(vocab, out); });
  err << "build-vocab: " << counts.size() << " raw hashtags -> " << vocab.size()
      << " canonical tags (min count " << min_count << ")\n";
  return 0;
}

int cmd_resample(const std::string& corpus_path, const std::string& vocab_path,
                 std::uint64_t samples, double alpha, std::uint64_t cutoff,
                 std::uint64_t seed, const std::string& out_path, std::ostream& err) {
  const Corpus raw = read_corpus_file(corpus_path);
  std::ifstream vin = open_input(vocab_path, "vocabulary");
  const Vocabulary vocab = read_vocabulary_tsv(vin);
  const Corpus corpus = relabel_corpus(raw, vocab);
  if (corpus.empty()) throw std::runtime_error("no image carries an in-vocabulary hashtag");

  const CorpusStats stats = compute_stats(corpus);
  SamplePlan plan;
  plan.total_samples = samples;
  plan.head_fraction = alpha;
  plan.tail_cutoff = cutoff;
  plan.seed = seed;
  const SampledEpoch epoch = resample(corpus, stats, plan);

  write_file_atomic(out_path, [&](std::ostream& out) {
    for (const std::string& id : epoch.ids) out << id << '\n';
  });
  err << "resample: " << corpus.size() << " labeled images, " << epoch.head_draws
      << " head draws + " << epoch.tail_draws << " tail draws; realized tail upsampling "
      << fmt6(epoch.tail_multiplier) << "x\n";
  return 0;
}

int cmd_train(const std::string& corpus_path, const std::string& vocab_path,
              const std::string& epoch_path, const TrainFlags& flags, std::uint64_t seed,
              const std::string& out_path, std::ostream& err) {
  const Corpus raw = read_corpus_file(corpus_path);
  std::ifstream vin = open_input(vocab_path, "vocabulary");
  const Vocabulary vocab = read_vocabulary_tsv(vin);
  const Corpus corpus = relabel_corpus(raw, vocab);
  if (corpus.empty()) throw std::runtime_error("no image carries an in-vocabulary hashtag");

  std::vector<std::string> epoch_ids;
  if (!epoch_path.empty()) {
    std::ifstream ein = open_input(epoch_path, "epoch file");
    std::string line;
    while (std::getline(ein, line)) {
      if (!line.empty()) epoch_ids.push_back(line);
    }
  }

  TrainConfig cfg = resolve_train_config(flags, seed);
  if (cfg.schedule.total_steps == 0 && !epoch_ids.empty() && cfg.optimizer.batch > 0) {
    cfg.schedule.total_steps = epoch_ids.size() / cfg.optimizer.batch;
  }
  const auto class_index = vocab_class_index(vocab);
  const TrainResult result = train(corpus, epoch_ids, class_index, cfg);
  write_file_atomic(out_path, [&](std::ostream& o) { save_checkpoint(result.state, o); });
  err << "train: " << result.state.n_classes << " classes, "
      << cfg.schedule.total_steps << " steps";
  if (!result.losses.empty()) {
    err << ", first loss " << fmt6(result.losses.front()) << ", last loss "
        << fmt6(result.losses.back());
  }
  err << "\n";
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hashtag pre-training data machinery: canonicalization, resampling,"
               " desk-scale training, zero-shot transfer and fairness reports"};
  app.require_subcommand(1);

  // ---- build-vocab ----
  std::string counts_path, wordnet_dir, vocab_out;
  std::uint64_t min_count = 2;
  auto* build = app.add_subcommand("build-vocab",
                                   "canonicalize hashtag counts into a label vocabulary");
  build->add_option("--counts", counts_path, "hashtag<TAB>count input")->required();
  build->add_option("--wordnet", wordnet_dir, "WordNet 3.0 database directory")->required();
  build->add_option("--min-count", min_count, "minimum occurrence count (default 2)");
  build->add_option("--out", vocab_out, "output vocabulary tsv")->required();

  // ---- resample ----
  std::string rs_corpus, rs_vocab, rs_out;
  std::uint64_t rs_samples = 0;
  double rs_alpha = 0.7;
  std::uint64_t rs_cutoff = 5000;
  std::optional<std::uint64_t> rs_seed;
  auto* rs = app.add_subcommand("resample", "materialize a resampled training epoch");
  rs->add_option("--corpus", rs_corpus, "corpus jsonl")->required();
  rs->add_option("--vocab", rs_vocab, "vocabulary tsv")->required();
  rs->add_option("--samples", rs_samples, "total samples M")->required();
  rs->add_option("--alpha", rs_alpha, "head fraction (default 0.7)");
  rs->add_option("--cutoff", rs_cutoff, "head/tail frequency cutoff (default 5000)");
  rs->add_option("--seed", rs_seed, "RNG seed (required)");
  rs->add_option("--out", rs_out, "output epoch id file")->required();

  // ---- train ----
  std::string tr_corpus, tr_vocab, tr_epoch, tr_out;
  std::optional<std::uint64_t> tr_seed;
  TrainFlags tr_flags;
  auto* tr = app.add_subcommand("train", "train the hashtag classifier head");
  tr->add_option("--corpus", tr_corpus, "corpus jsonl with features")->required();
  tr->add_option("--vocab", tr_vocab, "vocabulary tsv")->required();
  tr->add_option("--epoch", tr_epoch, "epoch id file from resample");
  tr->add_option("--seed", tr_seed, "RNG seed (required)");
  tr->add_option("--out", tr_out, "output checkpoint json")->required();
  add_train_flags(tr, tr_flags);

  // ---- finetune ----
  std::string ft_corpus, ft_taxonomy, ft_out, ft_init = "random";
  std::string ft_checkpoint, ft_vocab, ft_wordnet;
  std::optional<std::uint64_t> ft_seed;
  TrainFlags ft_flags;
  auto* ft = app.add_subcommand("finetune", "finetune a classifier on labeled examples");
  ft->add_option("--corpus", ft_corpus, "labeled corpus jsonl")->required();
  ft->add_option("--taxonomy", ft_taxonomy, "taxonomy tsv defining the class space")
      ->required();
  ft->add_option("--init", ft_init, "random (default) or zeroshot");
  ft->add_option("--checkpoint", ft_checkpoint, "pretrained checkpoint (zeroshot init)");
  ft->add_option("--vocab", ft_vocab, "vocabulary tsv (zeroshot init)");
  ft->add_option("--wordnet", ft_wordnet, "WordNet directory (zeroshot init)");
  ft->add_option("--seed", ft_seed, "RNG seed (required)");
  ft->add_option("--out", ft_out, "output checkpoint json")->required();
  add_train_flags(ft, ft_flags);

  // ---- zeroshot ----
  std::string zs_checkpoint, zs_taxonomy, zs_wordnet, zs_vocab, zs_eval, zs_out;
  std::string zs_strategy = "sum", zs_platt = "on", zs_map_out, zs_platt_out;
  bool zs_use_ema = false;
  auto* zs = app.add_subcommand("zeroshot",
                                "classify via the hashtag head and a WordNet class mapping");
  zs->add_option("--checkpoint", zs_checkpoint, "pretrained checkpoint")->required();
  zs->add_option("--taxonomy", zs_taxonomy, "taxonomy tsv")->required();
  zs->add_option("--wordnet", zs_wordnet, "WordNet 3.0 database directory")->required();
  zs->add_option("--vocab", zs_vocab, "vocabulary tsv")->required();
  zs->add_option("--eval", zs_eval, "evaluation corpus jsonl")->required();
  zs->add_option("--strategy", zs_strategy, "sum (default), avg or split-max");
  zs->add_option("--platt", zs_platt, "on (default) or off");
  zs->add_option("--map-out", zs_map_out, "write the hashtag/class mapping tsv");
  zs->add_option("--platt-out", zs_platt_out, "write fitted Platt parameters json");
  zs->add_flag("--use-ema", zs_use_ema, "use EMA weights for inference");
  zs->add_option("--out", zs_out, "output predictions csv")->required();

  // ---- predict ----
  std::string pr_checkpoint, pr_corpus, pr_out;
  std::uint64_t pr_k = 5;
  bool pr_use_ema = false;
  auto* pr = app.add_subcommand("predict", "top-k hashtag predictions per image");
  pr->add_option("--checkpoint", pr_checkpoint, "checkpoint json")->required();
  pr->add_option("--corpus", pr_corpus, "corpus jsonl with features")->required();
  pr->add_option("--topk", pr_k, "number of hashtags per image (default 5)");
  pr->add_flag("--use-ema", pr_use_ema, "use EMA weights for inference");
  pr->add_option("--out", pr_out, "output csv: id,rank,canonical_key")->required();

  // ---- fairness-report ----
  std::string fr_eval, fr_predictions, fr_attribute, fr_group, fr_out, fr_svg;
  std::string fr_accuracy_out;
  std::uint64_t fr_k = 5;
  double fr_threshold = 0.8;
  bool fr_matrix = false;
  auto* fr = app.add_subcommand("fairness-report",
                                "prediction-rate disparities or the 80%-rule matrix");
  fr->add_option("--eval", fr_eval, "corpus jsonl with attrs (and labels for the matrix)")
      ->required();
  fr->add_option("--predictions", fr_predictions,
                 "top-k csv (disparity) or class predictions csv (matrix)")
      ->required();
  fr->add_option("--attribute", fr_attribute, "subgroup attribute name")->required();
  fr->add_option("--group", fr_group, "group value the disparity report focuses on");
  fr->add_option("--k", fr_k, "top-k used when predicting (default 5)");
  fr->add_flag("--ratio-matrix", fr_matrix, "emit the pairwise 80%-rule matrix instead");
  fr->add_option("--threshold", fr_threshold, "accuracy ratio threshold (default 0.8)");
  fr->add_option("--accuracy-out", fr_accuracy_out, "also write per-(group,class) accuracy csv");
  fr->add_option("--svg", fr_svg, "also write an svg bar chart (disparity mode)");
  fr->add_option("--out", fr_out, "output csv")->required();

  // ---- synth ----
  std::uint64_t sy_images = 0, sy_tags = 0, sy_dim = 0, sy_groups = 0, sy_max_tags = 3;
  double sy_zipf = 1.1, sy_cluster = 1.0, sy_noise = 0.5;
  std::optional<std::uint64_t> sy_seed;
  std::string sy_out, sy_hashtags, sy_counts_out;
  auto* sy = app.add_subcommand("synth", "generate a synthetic corpus");
  sy->add_option("--images", sy_images, "number of images")->required();
  sy->add_option("--tags", sy_tags, "number of distinct tags (ignored with --hashtag-list)");
  sy->add_option("--zipf", sy_zipf, "Zipf exponent of the tag distribution (default 1.1)");
  sy->add_option("--dim", sy_dim, "feature dimensionality (0 = no features)");
  sy->add_option("--seed", sy_seed, "RNG seed (required)");
  sy->add_option("--hashtag-list", sy_hashtags, "draw tag names from this file");
  sy->add_option("--attr-groups", sy_groups, "assign attrs.group over this many groups");
  sy->add_option("--max-tags", sy_max_tags, "maximum tags per image (default 3)");
  sy->add_option("--cluster-scale", sy_cluster, "tag cluster center scale (default 1.0)");
  sy->add_option("--noise-scale", sy_noise, "feature noise scale (default 0.5)");
  sy->add_option("--counts-out", sy_counts_out, "also write hashtag<TAB>count tsv");
  sy->add_option("--out", sy_out, "output corpus jsonl")->required();

  // ---- pipeline ----
  std::string pl_outdir, pl_wordnet, pl_hashtags, pl_taxonomy;
  std::optional<std::uint64_t> pl_seed;
  std::uint64_t pl_images = 3000, pl_dim = 16, pl_samples = 6000, pl_cutoff = 0;
  std::uint64_t pl_steps = 300, pl_batch = 32, pl_eval_per_class = 25;
  double pl_alpha = 0.7, pl_zipf = 1.1;
  auto* pl = app.add_subcommand("pipeline",
                                "synth -> build-vocab -> resample -> train -> zeroshot"
                                " -> fairness-report end to end");
  pl->add_option("--outdir", pl_outdir, "output directory")->required();
  pl->add_option("--wordnet", pl_wordnet, "WordNet 3.0 database directory")->required();
  pl->add_option("--hashtags", pl_hashtags, "hashtag universe file")->required();
  pl->add_option("--taxonomy", pl_taxonomy, "taxonomy tsv for zero-shot transfer")->required();
  pl->add_option("--seed", pl_seed, "RNG seed (required)");
  pl->add_option("--images", pl_images, "pretraining corpus size (default 3000)");
  pl->add_option("--dim", pl_dim, "feature dimensionality (default 16)");
  pl->add_option("--samples", pl_samples, "epoch samples M (default 6000)");
  pl->add_option("--alpha", pl_alpha, "head fraction (default 0.7)");
  pl->add_option("--cutoff", pl_cutoff, "head/tail cutoff (default: median tag frequency)");
  pl->add_option("--zipf", pl_zipf, "hashtag Zipf exponent (default 1.1)");
  pl->add_option("--steps", pl_steps, "training steps (default 300)");
  pl->add_option("--batch", pl_batch, "batch size (default 32)");
  pl->add_option("--eval-per-class", pl_eval_per_class, "eval images per class (default 25)");

  std::vector<std::string> argv_storage = args;
  std::vector<const char*> argv;
  argv.push_back("tagtrain");
  for (const std::string& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::stringstream out_buf, err_buf;
    const int code = app.exit(e, out_buf, err_buf);
    out << out_buf.str();
    err << err_buf.str();
    return code;
  }

  try {
    if (build->parsed()) {
      return cmd_build_vocab(counts_path, wordnet_dir, min_count, vocab_out, err);
    }

    if (rs->parsed()) {
      if (!rs_seed) throw std::runtime_error("resample samples randomly; --seed is required");
      return cmd_resample(rs_corpus, rs_vocab, rs_samples, rs_alpha, rs_cutoff, *rs_seed,
                          rs_out, err);
    }

    if (tr->parsed()) {
      if (!tr_seed) throw std::runtime_error("train shuffles and initializes randomly;"
                                             " --seed is required");
      return cmd_train(tr_corpus, tr_vocab, tr_epoch, tr_flags, *tr_seed, tr_out, err);
    }

    if (ft->parsed()) {
      if (!ft_seed) throw std::runtime_error("finetune initializes randomly; --seed is required");
      std::ifstream tin = open_input(ft_taxonomy, "taxonomy");
      const ClassTaxonomy taxonomy = read_taxonomy_tsv(tin);
      const Corpus corpus = read_corpus_file(ft_corpus);
      TrainConfig cfg = resolve_train_config(ft_flags, *ft_seed);

      TrainResult result;
      if (ft_init == "zeroshot") {
        if (ft_checkpoint.empty() || ft_vocab.empty() || ft_wordnet.empty()) {
          throw std::runtime_error("--init zeroshot needs --checkpoint, --vocab and --wordnet");
        }
        const TrainState pre = load_checkpoint(ft_checkpoint);
        std::ifstream vin = open_input(ft_vocab, "vocabulary");
        const Vocabulary vocab = read_vocabulary_tsv(vin);
        const LexDb db = load_wordnet(ft_wordnet);
        const TagClassMap map = build_mapping(vocab, taxonomy, db);
        const TrainState init = zeroshot_init(pre, map, taxonomy.classes.size());
        result = finetune(corpus, taxonomy.classes.size(), cfg, &init);
      } else if (ft_init == "random") {
        result = finetune(corpus, taxonomy.classes.size(), cfg);
      } else {
        throw std::runtime_error("unknown --init '" + ft_init + "' (random or zeroshot)");
      }
      result.state.class_keys.clear();
      for (const auto& cls : taxonomy.classes) result.state.class_keys.push_back(cls.name);
      write_file_atomic(ft_out, [&](std::ostream& o) { save_checkpoint(result.state, o); });
      err << "finetune: " << corpus.size() << " labeled examples, init " << ft_init << "\n";
      return 0;
    }

    if (zs->parsed()) {
      const auto strategy = aggregation_from(zs_strategy);
      if (!strategy) throw std::runtime_error("unknown --strategy '" + zs_strategy + "'");
      if (zs_platt != "on" && zs_platt != "off") {
        throw std::runtime_error("--platt must be on or off");
      }
      const bool use_platt = zs_platt == "on";
      if (use_platt && *strategy != AggregationStrategy::Sum) {
        err << "note: Platt scaling is paired with sum aggregation in the reference"
               " recipe; combining it with "
            << to_string(*strategy) << " is an extrapolation\n";
      }

      const TrainState state = load_checkpoint(zs_checkpoint);
      std::ifstream tin = open_input(zs_taxonomy, "taxonomy");
      const ClassTaxonomy taxonomy = read_taxonomy_tsv(tin);
      std::ifstream vin = open_input(zs_vocab, "vocabulary");
      const Vocabulary vocab = read_vocabulary_tsv(vin);
      const LexDb db = load_wordnet(zs_wordnet);
      const Corpus eval_corpus = read_corpus_file(zs_eval);

      const TagClassMap map = build_mapping(vocab, taxonomy, db);
      std::size_t unmapped = 0;
      for (double s : map.class_max_similarity) {
        if (s <= 0.0) ++unmapped;
      }

      const auto rows = hashtag_probability_rows(state, eval_corpus, zs_use_ema);
      const ZeroshotResult zr =
          zeroshot_classify(rows, state.class_keys, map, *strategy, use_platt);

      write_file_atomic(zs_out, [&](std::ostream& o) {
        for (std::size_t i = 0; i < eval_corpus.size(); ++i) {
          o << eval_corpus[i].id << ',' << zr.predicted[i] << ','
            << taxonomy.classes[zr.predicted[i]].name << '\n';
        }
      });
      if (!zs_map_out.empty()) {
        write_file_atomic(zs_map_out,
                          [&](std::ostream& o) { write_mapping_tsv(map, taxonomy, o); });
      }
      if (!zs_platt_out.empty() && zr.platt) {
        write_file_atomic(zs_platt_out,
                          [&](std::ostream& o) { write_platt_json(*zr.platt, o); });
      }

      err << "zeroshot: " << eval_corpus.size() << " images, " << taxonomy.classes.size()
          << " classes, strategy " << to_string(*strategy) << ", platt " << zs_platt;
      if (unmapped > 0) err << ", " << unmapped << " classes unmapped (always score 0)";
      const bool labeled = std::all_of(eval_corpus.begin(), eval_corpus.end(),
                                       [](const ImageRecord& r) { return r.label.has_value(); });
      if (labeled && !eval_corpus.empty()) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < eval_corpus.size(); ++i) {
          if (static_cast<std::size_t>(*eval_corpus[i].label) == zr.predicted[i]) ++correct;
        }
        err << ", top-1 " << fmt6(static_cast<double>(correct) / eval_corpus.size())
            << ", balanced " << fmt6(balanced_accuracy(eval_corpus, zr.predicted));
      }
      err << "\n";
      return 0;
    }

    if (pr->parsed()) {
      const TrainState state = load_checkpoint(pr_checkpoint);
      const Corpus corpus = read_corpus_file(pr_corpus);
      write_file_atomic(pr_out, [&](std::ostream& o) {
        for (const ImageRecord& rec : corpus) {
          if (rec.features.empty()) {
            throw std::runtime_error("image without features: " + rec.id);
          }
          const auto scores = softmax(logits_of(state, rec.features, pr_use_ema));
          const auto keys = topk(scores, state.class_keys, pr_k);
          for (std::size_t r = 0; r < keys.size(); ++r) {
            o << rec.id << ',' << (r + 1) << ',' << keys[r] << '\n';
          }
        }
      });
      err << "predict: top-" << pr_k << " hashtags for " << corpus.size() << " images\n";
      return 0;
    }

    if (fr->parsed()) {
      const Corpus eval_corpus = read_corpus_file(fr_eval);
      if (fr_matrix) {
        const auto preds = read_class_predictions_csv(fr_predictions);
        const GroupAccuracy acc = per_group_accuracy(eval_corpus, preds, fr_attribute);
        const RatioMatrix matrix = ratio_matrix(acc, fr_threshold);
        write_file_atomic(fr_out,
                          [&](std::ostream& o) { write_ratio_matrix_csv(matrix, o); });
        if (!fr_accuracy_out.empty()) {
          write_file_atomic(fr_accuracy_out,
                            [&](std::ostream& o) { write_group_accuracy_csv(acc, o); });
        }
        err << "fairness-report: ratio matrix over " << matrix.groups.size()
            << " groups (threshold " << fmt6(fr_threshold) << ")\n";
        for (const auto& [group, a] : acc.accuracy) {
          err << "  " << group << ": top-1 " << fmt6(a) << "\n";
        }
      } else {
        if (fr_group.empty()) {
          throw std::runtime_error("disparity report needs --group (or use --ratio-matrix)");
        }
        const auto preds = read_topk_csv(fr_predictions);
        const DisparityReport report =
            disparity_report(eval_corpus, preds, fr_attribute, fr_group, fr_k);
        write_file_atomic(fr_out, [&](std::ostream& o) { write_disparity_csv(report, o); });
        if (!fr_svg.empty()) {
          write_file_atomic(fr_svg, [&](std::ostream& o) { write_disparity_svg(report, o); });
        }
        err << "fairness-report: " << report.rows.size() << " hashtags for " << fr_attribute
            << " = " << fr_group << "\n";
      }
      return 0;
    }

    if (sy->parsed()) {
      if (!sy_seed) throw std::runtime_error("synth samples randomly; --seed is required");
      SynthConfig cfg;
      cfg.n_images = sy_images;
      cfg.n_tags = sy_tags;
      cfg.zipf_exponent = sy_zipf;
      cfg.feature_dim = sy_dim;
      cfg.seed = *sy_seed;
      cfg.attr_groups = sy_groups;
      cfg.max_tags_per_image = sy_max_tags;
      cfg.cluster_scale = sy_cluster;
      cfg.noise_scale = sy_noise;
      if (!sy_hashtags.empty()) {
        cfg.tag_names = read_word_list(sy_hashtags);
        if (cfg.tag_names.empty()) throw std::runtime_error("empty hashtag list");
      } else if (sy_tags == 0 && sy_images > 0) {
        throw std::runtime_error("--tags (or --hashtag-list) is required");
      }
      const Corpus corpus = generate_synthetic_corpus(cfg);
      write_file_atomic(sy_out, [&](std::ostream& o) { write_corpus_jsonl(corpus, o); });
      if (!sy_counts_out.empty()) {
        write_file_atomic(sy_counts_out,
                          [&](std::ostream& o) { write_counts_from_corpus(corpus, o); });
      }
      err << "synth: " << corpus.size() << " images\n";
      return 0;
    }

    if (pl->parsed()) {
      if (!pl_seed) throw std::runtime_error("pipeline samples randomly; --seed is required");
      fs::create_directories(pl_outdir);
      const auto path = [&](const char* name) { return (fs::path(pl_outdir) / name).string(); };

      // 1. synthetic pretraining corpus over the hashtag universe
      SynthConfig synth_cfg;
      synth_cfg.n_images = pl_images;
      synth_cfg.feature_dim = pl_dim;
      synth_cfg.zipf_exponent = pl_zipf;
      synth_cfg.seed = *pl_seed;
      synth_cfg.attr_groups = 2;
      synth_cfg.tag_names = read_word_list(pl_hashtags);
      if (synth_cfg.tag_names.empty()) throw std::runtime_error("empty hashtag list");
      const Corpus raw_corpus = generate_synthetic_corpus(synth_cfg);
      write_file_atomic(path("corpus.jsonl"),
                        [&](std::ostream& o) { write_corpus_jsonl(raw_corpus, o); });
      write_file_atomic(path("counts.tsv"),
                        [&](std::ostream& o) { write_counts_from_corpus(raw_corpus, o); });

      // 2. vocabulary
      const LexDb db = load_wordnet(pl_wordnet);
      std::ifstream cin_counts(path("counts.tsv"));
      const auto counts = read_hashtag_counts_tsv(cin_counts);
      const Vocabulary vocab = build_vocabulary(counts, db, 2);
      if (vocab.size() == 0) throw std::runtime_error("pipeline vocabulary is empty");
      write_file_atomic(path("vocab.tsv"),
                        [&](std::ostream& o) { write_vocabulary_tsv(vocab, o); });

      // 3. resampled epoch
      const Corpus corpus = relabel_corpus(raw_corpus, vocab);
      const CorpusStats stats = compute_stats(corpus);
      std::uint64_t cutoff = pl_cutoff;
      if (cutoff == 0) {
        std::vector<std::uint64_t> freqs;
        for (const auto& [key, f] : stats.freq) freqs.push_back(f);
        std::sort(freqs.begin(), freqs.end());
        cutoff = freqs[freqs.size() / 2];  // median keeps both partitions populated
        if (cutoff < 2) cutoff = 2;
      }
      SamplePlan plan;
      plan.total_samples = pl_samples;
      plan.head_fraction = pl_alpha;
      plan.tail_cutoff = cutoff;
      plan.seed = *pl_seed;
      const SampledEpoch epoch = resample(corpus, stats, plan);
      write_file_atomic(path("epoch.ids"), [&](std::ostream& o) {
        for (const std::string& id : epoch.ids) o << id << '\n';
      });
      err << "pipeline: cutoff " << cutoff << ", tail upsampling "
          << fmt6(epoch.tail_multiplier) << "x\n";

      // 4. train the hashtag head on the epoch
      TrainConfig tcfg;
      tcfg.optimizer = OptimizerConfig::sgd_defaults();
      tcfg.optimizer.batch = pl_batch;
      tcfg.optimizer.wd_exclusions = {"bias"};
      tcfg.schedule.total_steps = pl_steps;
      tcfg.seed = *pl_seed;
      const auto class_index = vocab_class_index(vocab);
      std::vector<std::string> epoch_ids = epoch.ids;
      const TrainResult trained = train(corpus, epoch_ids, class_index, tcfg);
      write_file_atomic(path("checkpoint.json"),
                        [&](std::ostream& o) { save_checkpoint(trained.state, o); });

      // 5. labeled evaluation corpus drawn from the taxonomy classes
      std::ifstream tin = open_input(pl_taxonomy, "taxonomy");
      const ClassTaxonomy taxonomy = read_taxonomy_tsv(tin);
      const TagClassMap map = build_mapping(vocab, taxonomy, db);
      const auto centers = synthetic_tag_centers(synth_cfg);
      const auto by_class = map.edges_of_class();

      Corpus eval_corpus;
      Rng eval_rng(*pl_seed, "eval-features");
      Rng group_rng(*pl_seed, "eval-groups");
      for (std::size_t c = 0; c < taxonomy.classes.size(); ++c) {
        if (by_class[c].empty()) {
          throw std::runtime_error("taxonomy class '" + taxonomy.classes[c].name +
                                   "' maps to no vocabulary hashtag");
        }
        // Features come from the cluster of the class's best-mapped hashtag.
        const std::string& key = map.edges[by_class[c].front()].key;
        const std::string raw = *vocab.members.at(key).begin();
        const auto& center = centers.at(raw);
        for (std::uint64_t e = 0; e < pl_eval_per_class; ++e) {
          ImageRecord rec;
          rec.id = "eval" + std::to_string(c * pl_eval_per_class + e + 1);
          rec.tags = {key};
          rec.label = static_cast<int>(c);
          const bool g2 = group_rng.uniform() < 0.5;
          rec.attrs["group"] = g2 ? "g2" : "g1";
          // The second group gets noisier features, so accuracies differ.
          const double noise = synth_cfg.noise_scale * (g2 ? 1.6 : 1.0);
          rec.features.resize(pl_dim);
          for (std::size_t d = 0; d < pl_dim; ++d) {
            rec.features[d] = center[d] + noise * eval_rng.normal();
          }
          eval_corpus.push_back(std::move(rec));
        }
      }
      write_file_atomic(path("eval.jsonl"),
                        [&](std::ostream& o) { write_corpus_jsonl(eval_corpus, o); });
      write_file_atomic(path("map.tsv"),
                        [&](std::ostream& o) { write_mapping_tsv(map, taxonomy, o); });

      // 6. zero-shot classification (sum aggregation + transductive Platt)
      const auto rows = hashtag_probability_rows(trained.state, eval_corpus, false);
      const ZeroshotResult zr = zeroshot_classify(rows, trained.state.class_keys, map,
                                                  AggregationStrategy::Sum, true);
      write_file_atomic(path("predictions.csv"), [&](std::ostream& o) {
        for (std::size_t i = 0; i < eval_corpus.size(); ++i) {
          o << eval_corpus[i].id << ',' << zr.predicted[i] << ','
            << taxonomy.classes[zr.predicted[i]].name << '\n';
        }
      });
      if (zr.platt) {
        write_file_atomic(path("platt.json"),
                          [&](std::ostream& o) { write_platt_json(*zr.platt, o); });
      }
      std::size_t correct = 0;
      for (std::size_t i = 0; i < eval_corpus.size(); ++i) {
        if (static_cast<std::size_t>(*eval_corpus[i].label) == zr.predicted[i]) ++correct;
      }
      err << "pipeline: zero-shot top-1 "
          << fmt6(static_cast<double>(correct) / eval_corpus.size()) << "\n";

      // 7. hashtag top-5 predictions + disparity report
      TopkPredictions topk_preds;
      write_file_atomic(path("topk.csv"), [&](std::ostream& o) {
        for (const ImageRecord& rec : eval_corpus) {
          const auto scores = softmax(logits_of(trained.state, rec.features, false));
          const auto keys = topk(scores, trained.state.class_keys, 5);
          topk_preds[rec.id] = keys;
          for (std::size_t r = 0; r < keys.size(); ++r) {
            o << rec.id << ',' << (r + 1) << ',' << keys[r] << '\n';
          }
        }
      });
      const DisparityReport report =
          disparity_report(eval_corpus, topk_preds, "group", "g1", 5);
      write_file_atomic(path("disparity.csv"),
                        [&](std::ostream& o) { write_disparity_csv(report, o); });
      write_file_atomic(path("disparity.svg"),
                        [&](std::ostream& o) { write_disparity_svg(report, o); });

      // 8. per-group accuracy + 80%-rule matrix on the class predictions
      std::map<std::string, int> class_preds;
      for (std::size_t i = 0; i < eval_corpus.size(); ++i) {
        class_preds[eval_corpus[i].id] = static_cast<int>(zr.predicted[i]);
      }
      const GroupAccuracy acc = per_group_accuracy(eval_corpus, class_preds, "group");
      const RatioMatrix matrix = ratio_matrix(acc, 0.8);
      write_file_atomic(path("ratio_matrix.csv"),
                        [&](std::ostream& o) { write_ratio_matrix_csv(matrix, o); });
      write_file_atomic(path("accuracy.csv"),
                        [&](std::ostream& o) { write_group_accuracy_csv(acc, o); });
      for (const auto& [group, a] : acc.accuracy) {
        err << "pipeline: group " << group << " top-1 " << fmt6(a) << "\n";
      }
      err << "pipeline: artifacts written to " << pl_outdir << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  err << "error: no subcommand\n";
  (void)out;
  return 1;
}

}  // namespace tagtrain
