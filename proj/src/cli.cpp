#include "autoformal/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>

#include "autoformal/checkpoint.hpp"
#include "autoformal/corpus.hpp"
#include "autoformal/error.hpp"
#include "autoformal/evaluation.hpp"
#include "autoformal/hyperparams.hpp"
#include "autoformal/lexing.hpp"
#include "autoformal/training.hpp"

namespace autoformal::cli {
namespace {

namespace fs = std::filesystem;
using lexing::Language;
using lexing::TokenSequence;

std::string default_output_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? env : ".";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error(ErrorKind::Io, "write failed: " + path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory '" + dir + "': " + ec.message());
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

void print_error(std::ostream& err, const Error& e) {
  err << "error kind=" << to_string(e.kind()) << " line=" << e.line() << " column=" << e.column()
      << " message=" << one_line(e.what()) << '\n';
}

// Raw string flags, parsed after CLI11 so enum errors surface as
// InvalidHyperParams like every other configuration problem.
struct HyperFlags {
  std::string unit_type = "lstm";
  std::string attention = "none";
  std::string optimizer = "sgd";
  std::string encoder_type = "uni";
  HyperParams hp;
  std::optional<double> learning_rate;

  void attach(CLI::App& app) {
    app.add_option("--unit-type", unit_type, "lstm | gru | layer_norm_lstm")->capture_default_str();
    app.add_option("--attention", attention,
                   "none | bahdanau | normed_bahdanau | luong | scaled_luong")
        ->capture_default_str();
    app.add_option("--num-layers", hp.num_layers)->capture_default_str();
    app.add_flag("--residual", hp.residual);
    app.add_option("--optimizer", optimizer, "sgd | adam")->capture_default_str();
    app.add_option("--encoder-type", encoder_type, "uni | bi")->capture_default_str();
    app.add_option("--num-units", hp.num_units)->capture_default_str();
    app.add_option("--dropout", hp.dropout)->capture_default_str();
    app.add_option("--forget-bias", hp.forget_bias)->capture_default_str();
    app.add_option("--learning-rate", learning_rate, "default 1.0 (sgd) or 0.001 (adam)");
    app.add_option("--batch-size", hp.batch_size)->capture_default_str();
    app.add_option("--train-steps", hp.train_steps)->capture_default_str();
    app.add_option("--seed", hp.seed)->capture_default_str();
    app.add_option("--clip-norm", hp.clip_norm)->capture_default_str();
    app.add_option("--max-src-len", hp.max_src_len)->capture_default_str();
    app.add_option("--max-tgt-len", hp.max_tgt_len)->capture_default_str();
  }

  HyperParams resolve() const {
    HyperParams out = hp;
    out.unit_type = parse_unit_type(unit_type);
    out.attention = parse_attention(attention);
    out.optimizer = parse_optimizer(optimizer);
    out.encoder_type = parse_encoder_type(encoder_type);
    out.learning_rate = learning_rate;
    out.validate();
    return out;
  }
};

std::vector<bool> read_optional_flags(const std::string& path) {
  return path.empty() ? std::vector<bool>{} : corpus::read_flags(path);
}

// ---------------------------------------------------------------------------

struct TokenizeArgs {
  std::string side;
  std::string input;
  std::string output;
  std::string symbols;
  bool strip = false;
};

int cmd_tokenize(const TokenizeArgs& a, std::ostream&) {
  const Language lang = lexing::parse_language(a.side);
  std::optional<lexing::SymbolTable> table;
  if (lang == Language::Mizar) {
    if (a.symbols.empty()) {
      throw Error(ErrorKind::InvalidSymbolTable, "--symbols is required for the mizar side");
    }
    table = lexing::load_symbol_table(a.symbols);
  }
  const auto lines = corpus::read_lines(a.input);
  std::vector<TokenSequence> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      if (lang == Language::Mizar) {
        out.push_back(lexing::tokenize_mizar(lines[i], *table));
      } else {
        out.push_back(lexing::tokenize_latex(a.strip ? lexing::strip_markup(lines[i]) : lines[i]));
      }
    } catch (const Error& e) {
      throw e.at_line(i + 1);
    }
  }
  corpus::write_tokenized(a.output, out);
  return kExitOk;
}

struct AlignArgs {
  std::string latex;
  std::string mizar;
  std::string symbols;
  std::string output;
};

int cmd_align(const AlignArgs& a, std::ostream& out) {
  const auto table = lexing::load_symbol_table(a.symbols);
  const auto result =
      corpus::align_by_position(corpus::read_tagged(a.latex), corpus::read_tagged(a.mizar), table);
  corpus::write_corpus(a.output, result.pairs);
  out << "pairs=" << result.pairs.size() << " dropped_latex=" << result.dropped_latex
      << " dropped_mizar=" << result.dropped_mizar << " dropped_empty=" << result.dropped_empty
      << '\n';
  return kExitOk;
}

struct SplitArgs {
  std::string corpus;
  std::vector<std::size_t> sizes;
  std::uint64_t seed = 0;
  std::string output_dir;
};

int cmd_split(const SplitArgs& a, std::ostream& out) {
  if (a.sizes.size() != 4) {
    throw Error(ErrorKind::SizeMismatch, "--sizes needs four values: train,dev,test,inference");
  }
  auto pairs = corpus::read_corpus(a.corpus);
  const corpus::SplitSizes sizes{a.sizes[0], a.sizes[1], a.sizes[2], a.sizes[3]};
  const auto split = corpus::split_corpus(std::move(pairs), sizes, a.seed);
  ensure_dir(a.output_dir);
  const fs::path dir(a.output_dir);
  corpus::write_corpus((dir / "train").string(), split.train);
  corpus::write_corpus((dir / "dev").string(), split.dev);
  corpus::write_corpus((dir / "test").string(), split.test);
  corpus::write_corpus((dir / "inference").string(), split.inference);
  const auto overlap = corpus::compute_overlap(split.train, split.inference);
  corpus::write_flags((dir / "inference.overlap").string(), overlap.flags);
  out << "train=" << split.train.size() << " dev=" << split.dev.size()
      << " test=" << split.test.size() << " inference=" << split.inference.size()
      << " overlap=" << overlap.count << '\n';
  return kExitOk;
}

struct VocabArgs {
  std::vector<std::string> inputs;
  std::string side = "latex";
  std::string output;
};

int cmd_vocab(const VocabArgs& a, std::ostream& out) {
  const Language lang = lexing::parse_language(a.side);
  std::vector<TokenSequence> sentences;
  for (const auto& path : a.inputs) {
    auto part = corpus::read_tokenized(path, lang);
    sentences.insert(sentences.end(), part.begin(), part.end());
  }
  const auto vocab = corpus::build_vocab(sentences);
  vocab.save(a.output);
  out << "size=" << vocab.size() << '\n';
  return kExitOk;
}

struct TrainArgs {
  HyperFlags flags;
  std::string data_dir;
  std::string output_dir;
  std::string src = "latex";
  std::string tgt = "mizar";
  std::int64_t snapshot_every = 1000;
  std::int64_t log_every = 100;
  std::optional<std::int64_t> inject_nan_at;
};

bool corpus_exists(const fs::path& prefix) {
  return fs::exists(prefix.string() + ".latex") && fs::exists(prefix.string() + ".mizar");
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const HyperParams hp = a.flags.resolve();
  TrainOptions options;
  options.src_language = lexing::parse_language(a.src);
  options.tgt_language = lexing::parse_language(a.tgt);
  if (options.src_language == options.tgt_language) {
    throw Error(ErrorKind::InvalidHyperParams, "--src and --tgt must differ");
  }
  options.snapshot_every = a.snapshot_every;
  options.log_every = a.log_every;
  options.inject_nan_at = a.inject_nan_at;
  options.keep_snapshots = false;

  const fs::path data(a.data_dir);
  corpus::CorpusSplit split;
  split.train = corpus::read_corpus((data / "train").string());
  if (corpus_exists(data / "dev")) split.dev = corpus::read_corpus((data / "dev").string());

  ensure_dir(a.output_dir);
  const fs::path dir(a.output_dir);
  std::ofstream log((dir / "train.log").string(), std::ios::trunc);
  if (!log) throw Error(ErrorKind::Io, "cannot open training log in '" + a.output_dir + "'");
  options.on_log = [&](const TrainLogEntry& entry) {
    log << format_log_entry(entry) << '\n';
    log.flush();
  };
  options.on_snapshot = [&](const Snapshot& snap) {
    save_checkpoint((dir / ("snapshot-" + std::to_string(snap.step))).string(), snap.model);
  };

  const auto result = train(split, hp, options);
  save_checkpoint((dir / "checkpoint").string(), result.model);
  std::ostringstream status;
  status << "diverged=" << (result.diverged ? "true" : "false") << '\n'
         << "step=" << result.state.step << '\n';
  write_text((dir / "train.status").string(), status.str());
  out << status.str();
  return result.diverged ? kExitDiverged : kExitOk;
}

struct InferArgs {
  std::string checkpoint;
  std::string input;
  std::string output;
};

int cmd_infer(const InferArgs& a, std::ostream&) {
  const Model model = load_checkpoint(a.checkpoint);
  const auto sources = corpus::read_tokenized(a.input, model.src_language);
  std::vector<TokenSequence> hyps;
  hyps.reserve(sources.size());
  for (const auto& s : sources) hyps.push_back(model.translate_tokens(s));
  corpus::write_tokenized(a.output, hyps);
  return kExitOk;
}

struct EvaluateArgs {
  std::string hypotheses;
  std::string references;
  std::string overlap;
  std::string checkpoint;
  std::string sources;
  std::string model_id;
  std::string output;
  bool table = false;
};

double checkpoint_perplexity(const Model& model, const std::vector<TokenSequence>& sources,
                             const std::vector<TokenSequence>& references) {
  if (sources.size() != references.size()) {
    throw Error(ErrorKind::LengthMismatch, "sources and references differ in length");
  }
  std::vector<Example> examples;
  examples.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    corpus::SentencePair pair;
    (model.src_language == Language::Latex ? pair.latex : pair.mizar) = sources[i];
    (model.tgt_language == Language::Latex ? pair.latex : pair.mizar) = references[i];
    examples.push_back(make_example(pair, model));
  }
  std::vector<std::vector<double>> logprobs;
  const auto batch = static_cast<std::size_t>(model.hp.batch_size);
  for (std::size_t begin = 0; begin < examples.size(); begin += batch) {
    const std::size_t n = std::min(batch, examples.size() - begin);
    auto part = gold_logprobs(std::span<const Example>(examples.data() + begin, n), model.hp,
                              model.params);
    for (auto& p : part) logprobs.push_back(std::move(p));
  }
  return evaluation::perplexity(logprobs);
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  std::optional<Model> model;
  if (!a.checkpoint.empty()) model = load_checkpoint(a.checkpoint);
  const Language tgt = model ? model->tgt_language : Language::Mizar;
  const auto hyps = corpus::read_tokenized(a.hypotheses, tgt);
  const auto refs = corpus::read_tokenized(a.references, tgt);
  auto report = evaluation::evaluate(hyps, refs, read_optional_flags(a.overlap));
  report.model_id = a.model_id.empty() ? fs::path(a.hypotheses).filename().string() : a.model_id;
  if (model) {
    report.hyperparams = model->hp.to_text();
    if (!a.sources.empty()) {
      report.perplexity = checkpoint_perplexity(
          *model, corpus::read_tokenized(a.sources, model->src_language), refs);
    }
  }
  const std::string text = a.table
                               ? evaluation::format_table_header() + evaluation::format_table_row(report)
                               : evaluation::format_report(report);
  emit(a.output, text, out);
  return kExitOk;
}

struct CoverArgs {
  std::vector<std::string> hypotheses;
  std::string references;
  std::string overlap;
  std::size_t n = 5;
  std::string output;
};

int cmd_cover(const CoverArgs& a, std::ostream& out) {
  const auto refs = corpus::read_tokenized(a.references, Language::Mizar);
  const auto flags = read_optional_flags(a.overlap);
  evaluation::CorrectSets sets;
  for (const auto& path : a.hypotheses) {
    sets[path] = evaluation::correct_set(corpus::read_tokenized(path, Language::Mizar), refs);
  }
  const auto cover = evaluation::greedy_cover(sets, a.n);
  const auto all = evaluation::union_cover(sets, refs.size(), flags);
  emit(a.output, evaluation::format_cover(cover, all, refs.size(), flags), out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Informal-to-formal translation pipeline", "autoformal"};
  app.require_subcommand(1);
  std::function<int()> action;

  TokenizeArgs tok;
  auto* s_tok = app.add_subcommand("tokenize", "Tokenize one statement per line");
  s_tok->add_option("--side", tok.side, "latex | mizar")->required();
  s_tok->add_option("--input", tok.input)->required();
  s_tok->add_option("--output", tok.output)->required();
  s_tok->add_option("--symbols", tok.symbols, "Mizar symbol table");
  s_tok->add_flag("--strip-markup", tok.strip, "Remove cross-referencing markup first");
  s_tok->callback([&] { action = [&] { return cmd_tokenize(tok, out); }; });

  AlignArgs al;
  auto* s_al = app.add_subcommand("align", "Pair position-tagged formulas");
  s_al->add_option("--latex", al.latex)->required();
  s_al->add_option("--mizar", al.mizar)->required();
  s_al->add_option("--symbols", al.symbols)->required();
  s_al->add_option("--output", al.output, "Corpus prefix")->required();
  s_al->callback([&] { action = [&] { return cmd_align(al, out); }; });

  SplitArgs sp;
  sp.output_dir = default_output_dir();
  auto* s_sp = app.add_subcommand("split", "Split a corpus into train/dev/test/inference");
  s_sp->add_option("--corpus", sp.corpus, "Corpus prefix")->required();
  s_sp->add_option("--sizes", sp.sizes, "train,dev,test,inference")->required()->delimiter(',');
  s_sp->add_option("--seed", sp.seed)->capture_default_str();
  s_sp->add_option("--output-dir", sp.output_dir)->capture_default_str();
  s_sp->callback([&] { action = [&] { return cmd_split(sp, out); }; });

  VocabArgs vo;
  auto* s_vo = app.add_subcommand("vocab", "Build a vocabulary from tokenized files");
  s_vo->add_option("--input", vo.inputs)->required();
  s_vo->add_option("--side", vo.side)->capture_default_str();
  s_vo->add_option("--output", vo.output)->required();
  s_vo->callback([&] { action = [&] { return cmd_vocab(vo, out); }; });

  TrainArgs tr;
  tr.output_dir = default_output_dir();
  auto* s_tr = app.add_subcommand("train", "Train a model on <data-dir>/train");
  tr.flags.attach(*s_tr);
  s_tr->add_option("--data-dir", tr.data_dir)->required();
  s_tr->add_option("--output-dir", tr.output_dir)->capture_default_str();
  s_tr->add_option("--src", tr.src)->capture_default_str();
  s_tr->add_option("--tgt", tr.tgt)->capture_default_str();
  s_tr->add_option("--snapshot-every", tr.snapshot_every)->capture_default_str();
  s_tr->add_option("--log-every", tr.log_every)->capture_default_str();
  s_tr->add_option("--inject-nan-at", tr.inject_nan_at)->group("");
  s_tr->callback([&] { action = [&] { return cmd_train(tr, out); }; });

  InferArgs in;
  auto* s_in = app.add_subcommand("infer", "Greedy-decode a tokenized source file");
  s_in->add_option("--checkpoint", in.checkpoint, "Checkpoint or snapshot file")->required();
  s_in->add_option("--input", in.input)->required();
  s_in->add_option("--output", in.output)->required();
  s_in->callback([&] { action = [&] { return cmd_infer(in, out); }; });

  EvaluateArgs ev;
  auto* s_ev = app.add_subcommand("evaluate", "Score hypotheses against references");
  s_ev->add_option("--hypotheses", ev.hypotheses)->required();
  s_ev->add_option("--references", ev.references)->required();
  s_ev->add_option("--overlap", ev.overlap, "Overlap flags of the items");
  s_ev->add_option("--checkpoint", ev.checkpoint, "Adds hyperparameters and, with --sources, perplexity");
  s_ev->add_option("--sources", ev.sources);
  s_ev->add_option("--model-id", ev.model_id);
  s_ev->add_option("--output", ev.output);
  s_ev->add_flag("--table", ev.table, "Tabular summary instead of key=value lines");
  s_ev->callback([&] { action = [&] { return cmd_evaluate(ev, out); }; });

  CoverArgs co;
  auto* s_co = app.add_subcommand("cover", "Greedy top-n cover over several models");
  s_co->add_option("--hypotheses", co.hypotheses)->required();
  s_co->add_option("--references", co.references)->required();
  s_co->add_option("--overlap", co.overlap);
  s_co->add_option("-n", co.n)->capture_default_str();
  s_co->add_option("--output", co.output);
  s_co->callback([&] { action = [&] { return cmd_cover(co, out); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error kind=Usage line=0 column=0 message=" << one_line(e.what()) << '\n';
    return kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const Error& e) {
    print_error(err, e);
    return e.kind() == ErrorKind::InvalidHyperParams ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    err << "error kind=Internal line=0 column=0 message=" << one_line(e.what()) << '\n';
    return kExitData;
  }
}

int run_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace autoformal::cli
