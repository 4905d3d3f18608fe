// Command-line front end: synth, train, select, marginals, eval, oracle.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include "spansel/corpus.hpp"
#include "spansel/errors.hpp"
#include "spansel/eval.hpp"
#include "spansel/inference.hpp"
#include "spansel/scorer.hpp"
#include "spansel/selection.hpp"
#include "spansel/synthetic.hpp"
#include "spansel/train.hpp"

using namespace spansel;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

struct SynthArgs {
  SyntheticSpec spec;
  std::string task = "coref";
  std::string out;
  bool no_singletons = false;
};

struct TrainArgs {
  TrainConfig config;
  std::optional<std::string> task;
  std::string corpus, dev, out, log, l2_mode = "sampled", optimizer = "adagrad";
  bool deterministic = false;
};

struct SelectArgs {
  std::string corpus, model, out, strategy = "structured";
  std::optional<std::size_t> k, max_width;
  std::optional<double> ratio, threshold;
};

struct EvalArgs {
  std::string pred, gold, out, table, csv;
};

struct OracleArgs {
  std::string corpus, model;
  std::uint64_t seed = 1;
  std::size_t sentences = 20;
  double tolerance = 1e-9;
};

int run_synth(const SynthArgs& a) {
  SyntheticSpec spec = a.spec;
  spec.task = parse_task(a.task);
  spec.annotate_singletons = !a.no_singletons;
  const Corpus c = generate_synthetic(spec);
  save_corpus(c, a.out);
  std::size_t gold = 0;
  for (const Document& d : c.documents) gold += d.gold_spans().size();
  std::printf("documents=%zu tokens=%zu gold=%zu gold_per_token=%.4f\n", c.documents.size(), c.token_count(), gold,
              c.token_count() ? static_cast<double>(gold) / static_cast<double>(c.token_count()) : 0.0);
  return 0;
}

int run_train(TrainArgs a) {
  Corpus corpus = load_corpus(a.corpus);
  TrainConfig cfg = a.config;
  cfg.task = a.task ? parse_task(*a.task) : corpus.task;
  cfg.objective.l2_mode = parse_l2_mode(a.l2_mode);
  cfg.optimizer = parse_optimizer(a.optimizer);
  if (a.deterministic) cfg.threads = 1;
  std::optional<Corpus> dev;
  if (!a.dev.empty()) dev = load_corpus(a.dev);
  std::ofstream log;
  if (!a.log.empty()) {
    log.open(a.log, std::ios::app);
    if (!log) throw DataError("cannot write " + a.log);
  }
  const TrainResult r = train(corpus, cfg, dev ? &*dev : nullptr, [&](const EpochMetrics& m) {
    const std::string line = format_metrics(m);
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    if (log) log << line << '\n' << std::flush;
  });
  save_model(r.params, a.out);
  return 0;
}

int run_select(const SelectArgs& a) {
  const Corpus corpus = load_corpus(a.corpus);
  const ModelParams params = load_model(a.model);
  SelectionConfig cfg;
  cfg.strategy = parse_strategy(a.strategy);
  cfg.k = a.k;
  cfg.ratio = a.ratio;
  cfg.threshold = a.threshold;
  cfg.max_width = a.max_width;
  if (cfg.strategy == Strategy::GreedyDocument && !cfg.ratio) cfg.ratio = kDefaultRatio;
  cfg.validate();
  std::vector<SelectionRecord> records;
  std::size_t selected = 0;
  for (const Document& doc : corpus.documents) {
    SelectionRecord r{doc.doc_id, select(doc, params, cfg), {}};
    for (const ScoredSpan& s : rank_spans(document_scores(doc, params), a.max_width)) r.ranked.push_back(s.span);
    selected += r.spans.size();
    records.push_back(std::move(r));
  }
  save_selection(records, a.out);
  const double tokens = static_cast<double>(corpus.token_count());
  std::printf("documents=%zu tokens=%zu selected=%zu ratio=%.4f\n", records.size(), corpus.token_count(), selected,
              tokens > 0 ? static_cast<double>(selected) / tokens : 0.0);
  return 0;
}

int run_marginals(const SelectArgs& a) {
  const Corpus corpus = load_corpus(a.corpus);
  const ModelParams params = load_model(a.model);
  std::vector<MarginalRecord> records;
  for (const Document& doc : corpus.documents) {
    MarginalRecord r{doc.doc_id, {}};
    const DocumentFeatures features(doc.sentences, params);
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      const std::size_t n = doc.sentences[s].size();
      if (n < 2) continue;
      const MarginalTable m = marginals(score_spans(features, s, params, Head::SpanGrammar));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i + 1; k <= n; ++k) r.marginals.emplace_back(Span{s, i, k}, m(i, k));
    }
    records.push_back(std::move(r));
  }
  save_marginals(records, a.out);
  std::printf("documents=%zu\n", records.size());
  return 0;
}

int run_eval(const EvalArgs& a) {
  const Corpus gold = load_corpus(a.gold);
  const std::vector<SelectionRecord> pred = load_selection(a.pred);
  std::map<std::string, const SelectionRecord*> by_id;
  for (const SelectionRecord& r : pred) by_id[r.doc_id] = &r;
  std::vector<DocumentEval> docs;
  for (const Document& d : gold.documents) {
    DocumentEval e{{}, d.gold_spans(), {}, d.token_count()};
    if (auto it = by_id.find(d.doc_id); it != by_id.end()) {
      e.pred = it->second->spans;
      e.ranked = it->second->ranked;
      by_id.erase(it);
    }
    docs.push_back(std::move(e));
  }
  if (!by_id.empty()) throw DataError("prediction for unknown document '" + by_id.begin()->first + "'");
  const auto ratios = default_curve_ratios();
  const EvalReport report = evaluate(docs, ratios);
  const std::string json = report_to_json(report);
  if (!a.out.empty()) write_text(a.out, json + "\n");
  if (!a.table.empty()) write_text(a.table, report_table(report));
  if (!a.csv.empty()) write_text(a.csv, curve_csv(report));
  std::printf("%s", report_table(report).c_str());
  return 0;
}

// Brute-force cross-check of inside, outside and CKY on every sentence with
// 2 <= n <= 6, scored by a model file or random weights.
int run_oracle(const OracleArgs& a) {
  std::vector<Sentence> sentences;
  if (!a.corpus.empty()) {
    for (const Document& d : load_corpus(a.corpus).documents)
      sentences.insert(sentences.end(), d.sentences.begin(), d.sentences.end());
  } else {
    std::mt19937_64 rng(a.seed);
    std::uniform_int_distribution<std::size_t> len(2, 6), word(0, 9);
    for (std::size_t s = 0; s < a.sentences; ++s) {
      Sentence t(len(rng));
      for (std::string& w : t) w = "w" + std::to_string(word(rng));
      sentences.push_back(t);
    }
  }
  ModelParams params(1 << 10, a.seed);
  if (!a.model.empty())
    params = load_model(a.model);
  else
    params.randomize(a.seed, 1.0);
  double d_logz = 0.0, d_marg = 0.0, d_cky = 0.0;
  std::size_t checked = 0, skipped = 0;
  for (const Sentence& s : sentences) {
    if (s.size() < 2 || s.size() > 6) {
      ++skipped;
      continue;
    }
    const ScoreTable scores = score_spans(s, params, Head::SpanGrammar);
    const BruteForceResult brute = brute_force(scores);
    const MarginalTable m = marginals(scores);
    d_logz = std::max(d_logz, std::abs(inside(scores).log_z() - brute.log_z));
    for (std::size_t c = 0; c < m.interest_values().size(); ++c) {
      d_marg = std::max(d_marg, std::abs(m.interest_values()[c] - brute.marginals.interest_values()[c]));
      d_marg = std::max(d_marg, std::abs(m.non_interest_values()[c] - brute.marginals.non_interest_values()[c]));
    }
    d_cky = std::max(d_cky, std::abs(cky(scores).best_log_score - brute.viterbi.best_log_score));
    ++checked;
  }
  const bool ok = checked > 0 && d_logz <= a.tolerance && d_marg <= a.tolerance && d_cky <= a.tolerance;
  std::printf("sentences=%zu skipped=%zu max_logz_dev=%.3e max_marginal_dev=%.3e max_cky_dev=%.3e %s\n", checked,
              skipped, d_logz, d_marg, d_cky, ok ? "ok" : "FAILED");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured span selection: synthetic data, training, selection and evaluation"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic planted-grammar corpus");
  s->add_option("--out", synth.out, "Corpus file (JSONL)")->required();
  s->add_option("--task", synth.task, "coref, srl or spans-only")->capture_default_str();
  s->add_option("--seed", synth.spec.seed)->capture_default_str();
  s->add_option("--docs", synth.spec.documents)->capture_default_str();
  s->add_option("--sentences", synth.spec.sentences_per_doc, "Sentences per document")->capture_default_str();
  s->add_option("--min-len", synth.spec.min_length)->capture_default_str();
  s->add_option("--max-len", synth.spec.max_length)->capture_default_str();
  s->add_option("--vocab", synth.spec.vocabulary, "Filler vocabulary size")->capture_default_str();
  s->add_option("--span-types", synth.spec.span_types)->capture_default_str();
  s->add_option("--span-prob", synth.spec.span_probability, "Probability a bracket is gold")->capture_default_str();
  s->add_option("--noise", synth.spec.noise, "Probability a filler is a random trigger")->capture_default_str();
  s->add_option("--repeat-prob", synth.spec.repeat_probability)->capture_default_str();
  s->add_flag("--no-singletons", synth.no_singletons, "Drop one-member clusters");
  s->add_option("--prefix", synth.spec.id_prefix, "doc_id prefix")->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the selector jointly with the task head");
  t->add_option("--corpus", tr.corpus)->required();
  t->add_option("--dev", tr.dev, "Held-out corpus for per-epoch recall");
  t->add_option("--out", tr.out, "Model file")->required();
  t->add_option("--task", tr.task, "coref, srl or spans-only (default: the corpus task)");
  t->add_option("--epochs", tr.config.epochs)->capture_default_str();
  t->add_option("--lr", tr.config.learning_rate)->capture_default_str();
  t->add_option("--lr-decay", tr.config.lr_decay)->capture_default_str();
  t->add_option("--batch", tr.config.batch_size)->capture_default_str();
  t->add_option("--seed", tr.config.seed)->capture_default_str();
  t->add_option("--l2-mode", tr.l2_mode, "full or sampled")->capture_default_str();
  t->add_option("--neg-rate", tr.config.objective.negative_rate)->capture_default_str();
  t->add_option("--window", tr.config.objective.window, "Antecedent candidates")->capture_default_str();
  t->add_option("--l1-scale", tr.config.objective.l1_scale)->capture_default_str();
  t->add_option("--l2-scale", tr.config.objective.l2_scale)->capture_default_str();
  t->add_option("--optimizer", tr.optimizer, "adagrad or sgd")->capture_default_str();
  t->add_option("--hash-dim", tr.config.hash_dim)->capture_default_str();
  t->add_option("--max-width", tr.config.max_width, "Span width cap of the dev greedy baseline");
  t->add_option("--greedy-ratio", tr.config.greedy_ratio)->capture_default_str();
  t->add_option("--threads", tr.config.threads)->capture_default_str();
  t->add_flag("!--fixed-pool", tr.config.refresh_pool, "Keep the coref candidate pool at the gold spans");
  t->add_flag("--deterministic", tr.deterministic, "Single-threaded, bit-reproducible run");
  t->add_option("--log", tr.log, "Append key=value epoch lines to this file");

  SelectArgs sel;
  auto* se = app.add_subcommand("select", "Select spans with a trained model");
  se->add_option("--corpus", sel.corpus)->required();
  se->add_option("--model", sel.model)->required();
  se->add_option("--out", sel.out, "Selection file (JSONL)")->required();
  se->add_option("--strategy", sel.strategy, "structured, greedy_sentence, greedy_document, sigmoid_threshold")
      ->capture_default_str();
  se->add_option("--k", sel.k, "Spans per sentence (greedy_sentence)");
  se->add_option("--ratio", sel.ratio, "Spans per token (greedy_document, default 0.4)");
  se->add_option("--threshold", sel.threshold, "Probability cut (sigmoid_threshold)");
  se->add_option("--max-width", sel.max_width, "Widest span the baselines consider");

  SelectArgs marg;
  auto* ma = app.add_subcommand("marginals", "Write p(span | sentence) for every span");
  ma->add_option("--corpus", marg.corpus)->required();
  ma->add_option("--model", marg.model)->required();
  ma->add_option("--out", marg.out)->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a selection file against gold spans");
  e->add_option("--pred", ev.pred, "Selection file")->required();
  e->add_option("--gold", ev.gold, "Gold corpus")->required();
  e->add_option("--out", ev.out, "Report (JSON)");
  e->add_option("--table", ev.table, "Plain-text table");
  e->add_option("--csv", ev.csv, "Recall-ratio curve");

  OracleArgs orc;
  auto* o = app.add_subcommand("oracle", "Cross-check inference against brute-force enumeration (n <= 6)");
  o->add_option("--corpus", orc.corpus, "Corpus whose sentences are checked (default: random sentences)");
  o->add_option("--model", orc.model, "Model file (default: random weights)");
  o->add_option("--seed", orc.seed)->capture_default_str();
  o->add_option("--sentences", orc.sentences, "Random sentences when no corpus is given")->capture_default_str();
  o->add_option("--tolerance", orc.tolerance)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  }

  try {
    if (*s) return run_synth(synth);
    if (*t) return run_train(tr);
    if (*se) return run_select(sel);
    if (*ma) return run_marginals(marg);
    if (*e) return run_eval(ev);
    if (*o) return run_oracle(orc);
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 1;
}
