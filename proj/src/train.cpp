#include "spansel/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "spansel/errors.hpp"
#include "spansel/eval.hpp"
#include "spansel/selection.hpp"

namespace spansel {

std::string_view to_string(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adagrad"; }

Optimizer parse_optimizer(std::string_view name) {
  if (name == "sgd") return Optimizer::Sgd;
  if (name == "adagrad") return Optimizer::Adagrad;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected sgd or adagrad)");
}

std::string_view to_string(L2Mode m) { return m == L2Mode::Full ? "full" : "sampled"; }

L2Mode parse_l2_mode(std::string_view name) {
  if (name == "full") return L2Mode::Full;
  if (name == "sampled") return L2Mode::Sampled;
  throw ConfigError("unknown l2 mode '" + std::string(name) + "' (expected full or sampled)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(objective.negative_rate > 0.0 && objective.negative_rate <= 1.0))
    throw ConfigError("negative sample rate must lie in (0, 1]");
  if (objective.window < 1) throw ConfigError("candidate window must be at least 1");
  if (!(lr_decay >= 0.0)) throw ConfigError("lr decay must be >= 0");
  if (!(greedy_ratio > 0.0)) throw ConfigError("greedy ratio must be > 0");
  if (hash_dim < 1) throw ConfigError("hash dimension must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

std::string format_metrics(const EpochMetrics& m) {
  char buf[128];
  std::string line;
  auto put = [&](const char* key, const char* fmt, auto value) {
    std::snprintf(buf, sizeof buf, fmt, value);
    if (!line.empty()) line += ' ';
    line += key;
    line += '=';
    line += buf;
  };
  put("epoch", "%zu", m.epoch);
  put("objective", "%.10g", m.objective);
  put("l1", "%.10g", m.l1);
  put("l2", "%.10g", m.l2);
  put("train_selected_ratio", "%.6f", m.train_selected_ratio);
  if (m.dev_recall) put("dev_recall", "%.6f", *m.dev_recall);
  if (m.dev_precision) put("dev_precision", "%.6f", *m.dev_precision);
  if (m.dev_selected_ratio) put("dev_selected_ratio", "%.6f", *m.dev_selected_ratio);
  if (m.dev_greedy_recall) put("dev_greedy_recall", "%.6f", *m.dev_greedy_recall);
  put("whole_sentence_gold", "%zu", m.diagnostics.whole_sentence_gold);
  put("short_sentences", "%zu", m.diagnostics.short_sentences);
  put("far_antecedents", "%zu", m.diagnostics.far_antecedents);
  put("seconds", "%.3f", m.seconds);
  return line;
}

DocumentObjective document_objective(const Document& doc, const DocumentFeatures& features,
                                     const ModelParams& params, Task task, std::span<const Span> pool,
                                     const ObjectiveConfig& config, std::mt19937_64& rng) {
  ad::Tape tape;
  DocumentGraph graph(tape, doc, features, params);
  DocumentObjective out;
  ad::Var l1, l2;
  switch (task) {
    case Task::Coref:
      l1 = coref_l1(graph, pool, config.window, out.diagnostics);
      l2 = coref_l2(graph, pool, config, rng, out.diagnostics);
      break;
    case Task::Srl: {
      const RoleLabelSpace labels(params);
      l1 = srl_l1(graph, labels, out.diagnostics);
      l2 = srl_l2(graph, labels, config, rng, out.diagnostics);
      break;
    }
    case Task::SpansOnly:
      l1 = span_l1(graph, out.diagnostics);
      l2 = span_l2(graph, config, rng);
      break;
  }
  const ad::Var total = tape.add(tape.scale(l1, config.l1_scale), tape.scale(l2, config.l2_scale));
  out.l1 = tape.value(l1);
  out.l2 = tape.value(l2);
  if (!std::isfinite(tape.value(total)))
    throw NumericError("document '" + doc.doc_id + "': objective is not finite");
  const std::vector<double> adjoints = tape.backward(total);
  const std::vector<std::uint32_t> touched = tape.parameter_indices();
  // Dense scatter over the touched indices only.
  std::vector<double> dense(params.weights().size(), 0.0);
  tape.accumulate_parameter_gradient(adjoints, dense);
  out.gradient.reserve(touched.size());
  for (std::uint32_t i : touched)
    if (dense[i] != 0.0) out.gradient.emplace_back(i, dense[i]);
  return out;
}

namespace {

struct Evaluation {
  double recall = 0.0, precision = 0.0, selected_ratio = 0.0, greedy_recall = 0.0;
};

Evaluation evaluate_dev(const Corpus& dev, const ModelParams& params, const TrainConfig& config) {
  std::size_t gold = 0, selected = 0, matched = 0, greedy_matched = 0;
  for (const Document& doc : dev.documents) {
    const std::vector<ScoreTable> tables = document_scores(doc, params);
    std::vector<Span> pred;
    const StructuredSelection sel = structured_select(tables);
    for (const auto& s : sel.sentences) pred.insert(pred.end(), s.begin(), s.end());
    const std::vector<Span> truth = doc.gold_spans();
    const PRF prf = span_prf(pred, truth);
    gold += prf.gold;
    selected += prf.predicted;
    matched += prf.matched;
    greedy_matched += span_prf(greedy_select_document(tables, config.greedy_ratio, config.max_width), truth).matched;
  }
  Evaluation e;
  const double tokens = static_cast<double>(dev.token_count());
  e.recall = gold ? static_cast<double>(matched) / static_cast<double>(gold) : 0.0;
  e.precision = selected ? static_cast<double>(matched) / static_cast<double>(selected) : 0.0;
  e.selected_ratio = tokens > 0 ? static_cast<double>(selected) / tokens : 0.0;
  e.greedy_recall = gold ? static_cast<double>(greedy_matched) / static_cast<double>(gold) : 0.0;
  return e;
}

// Gold spans plus the current structured selection, sorted and de-duplicated.
std::vector<Span> candidate_pool(const Document& doc, const ModelParams& params, bool with_selection,
                                 std::size_t& selected) {
  std::vector<Span> pool = doc.gold_spans();
  const StructuredSelection sel = structured_select(doc, params);
  for (const auto& s : sel.sentences) {
    selected += s.size();
    if (with_selection) pool.insert(pool.end(), s.begin(), s.end());
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  return pool;
}

constexpr double kAdagradEpsilon = 1e-8;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

TrainResult train(const Corpus& corpus, const TrainConfig& config, const Corpus* dev, const EpochCallback& on_epoch) {
  config.validate();
  if (corpus.task != config.task)
    throw ConfigError("corpus task is " + std::string(to_string(corpus.task)) + " but training asks for " +
                      std::string(to_string(config.task)));
  std::vector<std::string> roles;
  if (config.task == Task::Srl) roles = corpus.role_labels();
  TrainResult result{ModelParams(config.hash_dim, config.seed, roles), {}};
  ModelParams& params = result.params;
  const std::size_t docs = corpus.documents.size();

  std::vector<DocumentFeatures> features;
  features.reserve(docs);
  for (const Document& d : corpus.documents) features.emplace_back(d.sentences, params);

  std::vector<double> accumulator(params.weights().size(), 0.0);
  std::vector<double> history(config.optimizer == Optimizer::Adagrad ? accumulator.size() : 0, 0.0);
  std::vector<std::vector<Span>> pools(docs);
  std::vector<DocumentObjective> slots;
  std::vector<std::size_t> order(docs);
  for (std::size_t d = 0; d < docs; ++d) order[d] = d;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    EpochMetrics m;
    m.epoch = epoch;
    std::size_t selected = 0;
    for (std::size_t d = 0; d < docs; ++d) pools[d] = candidate_pool(corpus.documents[d], params, config.refresh_pool, selected);
    const double tokens = static_cast<double>(corpus.token_count());
    m.train_selected_ratio = tokens > 0 ? static_cast<double>(selected) / tokens : 0.0;

    std::mt19937_64 shuffle_rng(mix(config.seed ^ mix(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const double lr = config.learning_rate / (1.0 + config.lr_decay * static_cast<double>(epoch - 1));

    for (std::size_t begin = 0; begin < docs; begin += config.batch_size) {
      const std::size_t end = std::min(docs, begin + config.batch_size);
      slots.assign(end - begin, {});
      auto work = [&](std::size_t slot) {
        const std::size_t d = order[begin + slot];
        std::mt19937_64 rng(mix(mix(config.seed) ^ mix(epoch * 0x100000001ULL + d)));
        slots[slot] = document_objective(corpus.documents[d], features[d], params, config.task, pools[d],
                                         config.objective, rng);
      };
      const std::size_t workers = std::min(config.threads, end - begin);
      if (workers <= 1) {
        for (std::size_t s = 0; s < end - begin; ++s) work(s);
      } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t t = 0; t < workers; ++t)
          pool.emplace_back([&, t] {
            try {
              for (std::size_t s = t; s < end - begin; s += workers) work(s);
            } catch (...) {
              errors[t] = std::current_exception();
            }
          });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
          if (e) std::rethrow_exception(e);
      }
      // Reduce in slot order.
      std::vector<std::uint32_t> touched;
      for (const DocumentObjective& o : slots) {
        m.l1 += o.l1;
        m.l2 += o.l2;
        m.diagnostics += o.diagnostics;
        for (const auto& [i, g] : o.gradient) {
          touched.push_back(i);
          accumulator[i] += g;
        }
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      std::span<double> w = params.weights();
      for (std::uint32_t i : touched) {
        const double g = accumulator[i];
        accumulator[i] = 0.0;
        if (config.optimizer == Optimizer::Sgd) {
          w[i] += lr * g;
        } else {
          history[i] += g * g;
          w[i] += lr * g / (std::sqrt(history[i]) + kAdagradEpsilon);
        }
      }
    }
    m.objective = config.objective.l1_scale * m.l1 + config.objective.l2_scale * m.l2;
    if (dev) {
      const Evaluation e = evaluate_dev(*dev, params, config);
      m.dev_recall = e.recall;
      m.dev_precision = e.precision;
      m.dev_selected_ratio = e.selected_ratio;
      m.dev_greedy_recall = e.greedy_recall;
    }
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (on_epoch) on_epoch(m);
    result.epochs.push_back(m);
  }
  return result;
}

}  // namespace spansel
