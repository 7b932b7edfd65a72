// gujian: prepare / pretrain / train / eval / segment / radical
//
// Exit codes: 0 success, 2 usage or validation failure, 3 empty data.
// Data goes to stdout, diagnostics to stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <gujian/gujian.hpp>

namespace fs = std::filesystem;
using namespace gujian;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitEmpty = 3;

// Carries an exit code up to main.
struct ExitError : std::runtime_error {
  int code;
  ExitError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

[[noreturn]] void usage_error(const std::string& msg) { throw ExitError(kExitUsage, msg); }

std::shared_ptr<const RadicalTable> open_radicals(const std::string& path) {
  try {
    return std::make_shared<const RadicalTable>(load_radical_table(path));
  } catch (const std::exception& e) {
    usage_error(e.what());
  }
}

struct DataDir {
  fs::path dir;
  SplitManifest manifest;

  static DataDir open(const std::string& path) {
    DataDir d{path, {}};
    const fs::path mpath = d.dir / "manifest.txt";
    if (!fs::is_regular_file(mpath)) usage_error("no prepared data in " + path + " (missing manifest.txt)");
    d.manifest = SplitManifest::parse(read_file(mpath));
    return d;
  }

  std::vector<Unit> split(const std::string& file) const { return load_dataset(dir / file); }
};

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct PrepareOpts {
  std::string input;
  std::string stops = "，。；？！,;?!";
  int unit_size = 100;
  std::uint64_t seed = 1;
  int max_unsure_run = 5;
  std::string out;
};

int cmd_prepare(const PrepareOpts& o) {
  if (o.unit_size < 2) usage_error("--unit-size must be at least 2");
  if (o.max_unsure_run < 0) usage_error("--max-unsure-run must be >= 0");
  PunctConfig punct;
  try {
    punct = PunctConfig::from_utf8(o.stops);
  } catch (const std::exception& e) {
    usage_error(std::string("--stops: ") + e.what());
  }
  std::error_code ec;
  if (!fs::is_directory(o.input, ec)) usage_error("cannot read input directory " + o.input);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(o.input, ec)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  if (ec) usage_error("cannot read input directory " + o.input + ": " + ec.message());
  std::sort(files.begin(), files.end());

  std::vector<Unit> units;
  for (const auto& f : files) {
    std::u32string text;
    try {
      text = utf8::decode(read_file(f));
    } catch (const std::exception& e) {
      usage_error(f.string() + ": " + e.what());
    }
    auto cleaned = clean_unsure(normalize_text(text, punct), punct, static_cast<std::size_t>(o.max_unsure_run));
    auto seq = text_to_tags(cleaned, punct);
    auto doc_units = chunk_units(seq, static_cast<std::size_t>(o.unit_size), f.filename().string());
    units.insert(units.end(), std::make_move_iterator(doc_units.begin()), std::make_move_iterator(doc_units.end()));
  }
  if (units.empty()) throw ExitError(kExitEmpty, "corpus in " + o.input + " yields no units");

  CorpusSplits splits = split_corpus(std::move(units), o.seed);
  Vocab vocab = build_vocab(splits.train);

  fs::create_directories(o.out, ec);
  if (ec) usage_error("cannot create " + o.out + ": " + ec.message());
  SplitManifest manifest;
  manifest.seed = o.seed;
  const fs::path out(o.out);
  write_file(out / manifest.train, format_dataset(splits.train));
  write_file(out / manifest.valid, format_dataset(splits.valid));
  write_file(out / manifest.test, format_dataset(splits.test));
  write_file(out / "manifest.txt", manifest.format());
  write_file(out / "vocab.tsv", format_vocab(vocab, splits.train));

  std::cout << "train\t" << splits.train.size() << "\nvalid\t" << splits.valid.size() << "\ntest\t"
            << splits.test.size() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct PretrainOpts {
  std::string data;
  EmbeddingConfig cfg;
  std::string out;
  std::string export_text;
  std::string radicals = kDefaultRadicalTablePath;
};

int cmd_pretrain(const PretrainOpts& o) {
  try {
    o.cfg.validate();
  } catch (const std::exception& e) {
    usage_error(e.what());
  }
  const DataDir data = DataDir::open(o.data);
  auto table = open_radicals(o.radicals);
  const Vocab vocab = parse_vocab(read_file(data.dir / "vocab.tsv"));
  const auto train_units = data.split(data.manifest.train);
  std::vector<std::vector<Token>> corpus;
  for (const auto& u : train_units) corpus.push_back(encode(u.seq.chars, vocab, *table));

  EmbeddingSet set;
  try {
    set = train_embeddings(corpus, vocab, o.cfg, [](int epoch, double loss) {
      std::cout << "epoch\t" << epoch << "\tloss\t" << fmt4(loss) << "\n";
    });
  } catch (const ConfigError& e) {
    throw ExitError(kExitEmpty, e.what());
  }
  save_embeddings(set, o.out);
  if (!o.export_text.empty()) {
    std::ofstream os(o.export_text, std::ios::binary);
    if (!os) usage_error("cannot write " + o.export_text);
    export_word2vec_text(set, *table, os);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainOpts {
  std::string data;
  std::string embeddings;
  Hyperparams hp;
  int dim_char = 70;
  int dim_radical = 30;
  bool no_radicals = false;
  std::uint64_t seed = 1;
  std::string out;
  std::string log;
  std::string radicals = kDefaultRadicalTablePath;
};

int cmd_train(const TrainOpts& o) {
  try {
    o.hp.validate();
  } catch (const std::exception& e) {
    usage_error(e.what());
  }
  const DataDir data = DataDir::open(o.data);
  auto table = open_radicals(o.radicals);

  SegmenterModel model;
  if (!o.embeddings.empty()) {
    if (!fs::is_regular_file(o.embeddings)) usage_error("embedding file not found: " + o.embeddings);
    EmbeddingSet emb;
    try {
      emb = load_embeddings(o.embeddings);
      model = SegmenterModel::from_embeddings(emb, table, o.hp, o.seed);
    } catch (const std::exception& e) {
      usage_error(e.what());
    }
  } else {
    if (o.dim_char + o.dim_radical != o.hp.embed_dim) {
      usage_error("embedding dimension mismatch: --embed-dim " + std::to_string(o.hp.embed_dim) + " but --dim-char " +
                  std::to_string(o.dim_char) + " + --dim-radical " + std::to_string(o.dim_radical) + " = " +
                  std::to_string(o.dim_char + o.dim_radical));
    }
    if (o.dim_char < 1 || o.dim_radical < 1) usage_error("--dim-char and --dim-radical must be >= 1");
    const Vocab vocab = parse_vocab(read_file(data.dir / "vocab.tsv"));
    model = SegmenterModel::random(vocab, table, static_cast<std::size_t>(o.dim_char),
                                   static_cast<std::size_t>(o.dim_radical), static_cast<std::size_t>(o.hp.hidden),
                                   o.seed);
  }
  model.use_radicals = !o.no_radicals;

  CorpusSplits splits;
  splits.train = data.split(data.manifest.train);
  splits.valid = data.split(data.manifest.valid);
  splits.seed = data.manifest.seed;
  if (splits.train.empty() && o.hp.epochs > 0) throw ExitError(kExitEmpty, "training split is empty");

  const std::string log_path = o.log.empty() ? o.out + ".log" : o.log;
  std::ofstream log(log_path, std::ios::binary);
  if (!log) usage_error("cannot write " + log_path);
  auto line = [](const EpochRecord& r) {
    std::string s = std::to_string(r.epoch) + "\t" + fmt4(r.mean_loss) + "\tP=" + fmt4(r.valid.precision) +
                    "\tR=" + fmt4(r.valid.recall) + "\tF1=" + fmt4(r.valid.f1);
    if (r.train) {
      s += "\ttrain_P=" + fmt4(r.train->precision) + "\ttrain_R=" + fmt4(r.train->recall) +
           "\ttrain_F1=" + fmt4(r.train->f1);
    }
    return s + "\n";
  };
  if (o.hp.epochs > 0) {
    TrainLog tl = train(model, splits, o.hp, o.seed, [&](const EpochRecord& r) {
      log << line(r);
      std::cout << line(r) << std::flush;
    });
    std::cerr << "best epoch " << tl.best_epoch << "\n";
  }
  save_model(model, o.out);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalOpts {
  std::string model;
  std::string data;
  std::string radicals = kDefaultRadicalTablePath;
};

SegmenterModel open_model(const std::string& path, const std::string& radicals) {
  if (!fs::is_regular_file(path)) usage_error("model not found: " + path);
  auto table = open_radicals(radicals);
  try {
    return load_model(path, table);
  } catch (const std::exception& e) {
    usage_error(e.what());
  }
}

int cmd_eval(const EvalOpts& o) {
  SegmenterModel model = open_model(o.model, o.radicals);
  if (!fs::is_regular_file(o.data)) usage_error("dataset not found: " + o.data);
  std::vector<Unit> units;
  try {
    units = load_dataset(o.data);
  } catch (const std::exception& e) {
    usage_error(e.what());
  }
  const EvalReport r = evaluate(model, units);
  std::cout << "P=" << fmt4(r.precision) << " R=" << fmt4(r.recall) << " F1=" << fmt4(r.f1) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SegmentOpts {
  std::string model;
  std::string in;
  std::string sep = "/";
  std::string radicals = kDefaultRadicalTablePath;
};

int cmd_segment(const SegmentOpts& o) {
  const auto sep = utf8::decode(o.sep);
  if (sep.size() != 1) usage_error("--sep must be exactly one character");
  SegmenterModel model = open_model(o.model, o.radicals);
  std::string raw;
  if (o.in.empty() || o.in == "-") {
    raw.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  } else {
    if (!fs::is_regular_file(o.in)) usage_error("input not found: " + o.in);
    raw = read_file(o.in);
  }
  std::u32string text;
  try {
    text = utf8::decode(raw);
  } catch (const Utf8Error& e) {
    usage_error(e.what());
  }
  // One output line per input line.
  std::string out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find(U'\n', start);
    const bool has_nl = nl != std::u32string::npos;
    if (!has_nl) nl = text.size();
    const auto seg = segment(model, std::u32string_view(text).substr(start, nl - start), sep[0]);
    out += utf8::encode(seg);
    if (has_nl) out += '\n';
    start = nl + 1;
  }
  std::cout << out;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct RadicalOpts {
  std::string ch;
  std::string radicals = kDefaultRadicalTablePath;
};

int cmd_radical(const RadicalOpts& o) {
  std::u32string cs;
  try {
    cs = utf8::decode(o.ch);
  } catch (const Utf8Error& e) {
    usage_error(e.what());
  }
  if (cs.size() != 1) usage_error("--char takes exactly one character");
  auto table = open_radicals(o.radicals);
  if (auto id = table->radical_of(cs[0])) {
    std::cout << *id << "\t" << utf8::encode(radical_glyph(*id)) << "\n";
  } else {
    std::cout << "none\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence segmentation for unpunctuated classical Chinese"};
  app.require_subcommand(1);

  PrepareOpts prep;
  auto* p = app.add_subcommand("prepare", "Normalise, tag, chunk and split a corpus directory");
  p->add_option("--input", prep.input, "Directory of UTF-8 documents")->required();
  p->add_option("--stops", prep.stops, "Sentence-ending punctuation")->capture_default_str();
  p->add_option("--unit-size", prep.unit_size, "Characters per unit")->capture_default_str();
  p->add_option("--seed", prep.seed, "Shuffle seed")->capture_default_str();
  p->add_option("--max-unsure-run", prep.max_unsure_run, "Drop sentences with a longer run of unsure characters")
      ->capture_default_str();
  p->add_option("--out", prep.out, "Output directory")->required();

  PretrainOpts pre;
  auto* pt = app.add_subcommand("pretrain", "Pretrain radical-augmented character embeddings");
  pt->add_option("--data", pre.data, "Prepared data directory")->required();
  pt->add_option("--dim-char", pre.cfg.dim_char)->capture_default_str();
  pt->add_option("--dim-radical", pre.cfg.dim_radical)->capture_default_str();
  pt->add_option("--window", pre.cfg.window, "Context radius")->capture_default_str();
  pt->add_option("--epochs", pre.cfg.epochs)->capture_default_str();
  pt->add_option("--lr", pre.cfg.learning_rate)->capture_default_str();
  pt->add_option("--seed", pre.cfg.seed)->capture_default_str();
  pt->add_option("--out", pre.out, "Embedding file")->required();
  pt->add_option("--export-text", pre.export_text, "Also write word2vec-style text vectors");
  pt->add_option("--radicals", pre.radicals)->capture_default_str();

  TrainOpts tr;
  auto* t = app.add_subcommand("train", "Train the Bi-LSTM-CRF tagger");
  t->add_option("--data", tr.data, "Prepared data directory")->required();
  t->add_option("--embeddings", tr.embeddings, "Pretrained embedding file");
  t->add_option("--embed-dim", tr.hp.embed_dim)->capture_default_str();
  t->add_option("--hidden", tr.hp.hidden)->capture_default_str();
  t->add_option("--layers", tr.hp.layers)->capture_default_str();
  t->add_option("--batch", tr.hp.batch)->capture_default_str();
  t->add_option("--epochs", tr.hp.epochs)->capture_default_str();
  t->add_option("--lr", tr.hp.learning_rate)->capture_default_str();
  t->add_option("--clip", tr.hp.clip)->capture_default_str();
  const std::map<std::string, ClipMode> clip_modes{{"value", ClipMode::Value}, {"norm", ClipMode::GlobalNorm}};
  t->add_option("--clip-mode", tr.hp.clip_mode, "value: clamp each entry; norm: rescale the global norm")
      ->transform(CLI::CheckedTransformer(clip_modes, CLI::ignore_case))
      ->default_str("value");
  t->add_option("--dropout", tr.hp.dropout)->capture_default_str();
  t->add_option("--dim-char", tr.dim_char, "Char dimension when no embeddings are given")->capture_default_str();
  t->add_option("--dim-radical", tr.dim_radical, "Radical dimension when no embeddings are given")
      ->capture_default_str();
  t->add_flag("--freeze-embeddings", tr.hp.freeze_embeddings);
  t->add_flag("--no-radicals", tr.no_radicals, "Char-only ablation");
  t->add_flag("--eval-on-train", tr.hp.eval_on_train, "Also report training-set P/R/F1 each epoch");
  t->add_option("--seed", tr.seed)->capture_default_str();
  t->add_option("--out", tr.out, "Model checkpoint")->required();
  t->add_option("--log", tr.log, "Training log (default: <out>.log)");
  t->add_option("--radicals", tr.radicals)->capture_default_str();

  EvalOpts ev;
  auto* e = app.add_subcommand("eval", "Boundary precision / recall / F1 on a dataset file");
  e->add_option("--model", ev.model)->required();
  e->add_option("--data", ev.data, "Dataset file (chars<TAB>tags per line)")->required();
  e->add_option("--radicals", ev.radicals)->capture_default_str();

  SegmentOpts sg;
  auto* s = app.add_subcommand("segment", "Insert sentence separators into raw text");
  s->add_option("--model", sg.model)->required();
  s->add_option("--in", sg.in, "Input file (default: stdin)");
  s->add_option("--sep", sg.sep)->capture_default_str();
  s->add_option("--radicals", sg.radicals)->capture_default_str();

  RadicalOpts rad;
  auto* r = app.add_subcommand("radical", "Look up the Kangxi radical of a character");
  r->add_option("--char", rad.ch)->required();
  r->add_option("--radicals", rad.radicals)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitUsage;
  }

  try {
    if (*p) return cmd_prepare(prep);
    if (*pt) return cmd_pretrain(pre);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*s) return cmd_segment(sg);
    if (*r) return cmd_radical(rad);
  } catch (const ExitError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return ex.code;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
