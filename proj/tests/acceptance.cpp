// Acceptance checks AC1-AC8, one PASS/FAIL line each. AC9 is an exclusion
// note. Exit status is 0 only when every check passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "spansel/eval.hpp"
#include "spansel/inference.hpp"
#include "spansel/models.hpp"
#include "spansel/numeric.hpp"
#include "spansel/scorer.hpp"
#include "spansel/selection.hpp"
#include "spansel/synthetic.hpp"
#include "spansel/train.hpp"

using namespace spansel;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const char* id, bool pass, const std::string& detail, Clock::time_point started) {
  const double secs = std::chrono::duration<double>(Clock::now() - started).count();
  std::printf("%s %s %s (%.1fs)\n", id, pass ? "PASS" : "FAIL", detail.c_str(), secs);
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ScoreTable random_table(std::size_t n, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ScoreTable t(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k <= n; ++k) t.set(i, k, u(rng));
  return t;
}

void ac1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double d_logz = 0, d_marg = 0, d_cky = 0;
  for (std::size_t n = 2; n <= 6; ++n) {
    for (int rep = 0; rep < 200; ++rep) {
      const ScoreTable s = random_table(n, rng);
      const BruteForceResult b = brute_force(s);
      const MarginalTable m = marginals(s);
      d_logz = std::max(d_logz, std::abs(inside(s).log_z() - b.log_z));
      for (std::size_t c = 0; c < s.span_count(); ++c) {
        d_marg = std::max(d_marg, std::abs(m.interest_values()[c] - b.marginals.interest_values()[c]));
        d_marg = std::max(d_marg, std::abs(m.non_interest_values()[c] - b.marginals.non_interest_values()[c]));
      }
      d_cky = std::max(d_cky, std::abs(cky(s).best_log_score - b.viterbi.best_log_score));
    }
  }
  const double tol = 1e-9;
  report("AC1", d_logz <= tol && d_marg <= tol && d_cky <= tol,
         fmt("oracle equivalence n=2..6 x200: max|logZ dev|=%.2e max|marginal dev|=%.2e max|CKY dev|=%.2e tol=%.0e",
             d_logz, d_marg, d_cky, tol),
         t0);
}

void ac2() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> len(2, 8);
  double d_marg = 0, d_fd = 0;
  const double h = 1e-6;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = len(rng);
    const ScoreTable s = random_table(n, rng);
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (double v : s.values()) vars.push_back(tape.variable(v));
    const ad::Var logz = tape_log_partition(tape, vars, n);
    const std::vector<double> adj = tape.backward(logz);
    const MarginalTable m = marginals(s);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = i + 1; k <= n; ++k) {
        const std::size_t c = s.index(i, k);
        const double g = adj[vars[c].id];
        d_marg = std::max(d_marg, std::abs(g - m(i, k)));
        ScoreTable up = s, down = s;
        up.set(i, k, s(i, k) + h);
        down.set(i, k, s(i, k) - h);
        const double fd = (inside(up).log_z() - inside(down).log_z()) / (2 * h);
        d_fd = std::max(d_fd, std::abs(g - fd));
      }
    }
  }
  report("AC2", d_marg <= 1e-9 && d_fd <= 1e-5,
         fmt("dlogZ/ds on 50 sentences n<=8: max|tape - marginal|=%.2e (tol 1e-9) max|tape - FD(h=1e-6)|=%.2e (tol 1e-5)",
             d_marg, d_fd),
         t0);
}

void ac3() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<std::size_t> len(2, 40);
  double d_leaf = 0, d_mass = 0;
  bool structure_ok = true;
  std::size_t worst_ratio_n = 0, max_selected = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = len(rng);
    const ScoreTable s = random_table(n, rng, -3.0, 3.0);
    const MarginalTable m = marginals(s);
    double mass = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d_leaf = std::max(d_leaf, std::abs(m.interest(i, i + 1) + m.non_interest(i, i + 1) - 1.0));
      for (std::size_t k = i + 1; k <= n; ++k) mass += m.constituent(i, k);
    }
    d_mass = std::max(d_mass, std::abs(mass - static_cast<double>(2 * n - 2)));
    const std::vector<ScoreTable> tables = {s};
    const StructuredSelection sel = structured_select(tables);
    const auto& spans = sel.sentences[0];
    if (spans.size() > 2 * n - 2 || !pairwise_nested_or_disjoint(spans)) structure_ok = false;
    if (spans.size() > max_selected) {
      max_selected = spans.size();
      worst_ratio_n = n;
    }
  }
  report("AC3", d_leaf <= 1e-9 && d_mass <= 1e-9 && structure_ok,
         fmt("200 tables n<=40: max|leaf sum - 1|=%.2e max|X mass - (2n-2)|=%.2e (tol 1e-9); "
             "selection <= 2n-2 and nested-or-disjoint: %s (largest %zu spans at n=%zu)",
             d_leaf, d_mass, structure_ok ? "yes" : "NO", max_selected, worst_ratio_n),
         t0);
}

void ac4() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<std::size_t> len(2, 12);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  double dev = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = len(rng);
    const ScoreTable s = random_table(n, rng);
    const LabeledTree tree = sample_tree(n, rng, p(rng));
    double product = 1.0;
    for (const AnchoredRule& r : tree.rules()) product *= std::exp(rule_log_weight(r, s));
    double sum = 0;
    for (const Span& sp : interest_spans(spans_of(tree))) sum += s(sp.start, sp.end);
    dev = std::max(dev, std::abs(std::log(product) - sum));
    dev = std::max(dev, std::abs(tree_log_score(tree, s) - sum));
  }
  report("AC4", dev <= 1e-12,
         fmt("1000 random trees: max|log prod rho(rule) - sum Interest scores|=%.2e tol=1e-12", dev), t0);
}

void ac5() {
  const auto t0 = Clock::now();
  double worst[6] = {0, 0, 0, 0, 0, 0};
  const char* names[6] = {"coref L1", "coref L2 full", "coref L2 sampled", "SRL L1", "SRL L2 full", "SRL L2 sampled"};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (Task task : {Task::Coref, Task::Srl}) {
      SyntheticSpec spec;
      spec.documents = 2;
      spec.sentences_per_doc = 3;
      spec.min_length = 3;
      spec.max_length = 8;
      spec.span_probability = 0.3;
      spec.task = task;
      spec.seed = seed;
      const Corpus corpus = generate_synthetic(spec);
      ModelParams params(1 << 12, seed, task == Task::Srl ? corpus.role_labels() : std::vector<std::string>{});
      params.randomize(seed + 10, 0.3);
      for (const Document& doc : corpus.documents) {
        std::vector<Span> pool = doc.gold_spans();
        for (const auto& s : structured_select(doc, params).sentences) pool.insert(pool.end(), s.begin(), s.end());
        std::sort(pool.begin(), pool.end());
        pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
        ObjectiveConfig full, sampled;
        sampled.l2_mode = L2Mode::Sampled;
        sampled.negative_rate = 0.5;
        auto check = [&](int slot, std::function<ad::Var(DocumentGraph&)> body) {
          const LossBuilder loss = [&doc, body](ad::Tape& tape, const ModelParams& p) {
            const DocumentFeatures f(doc.sentences, p);
            DocumentGraph g(tape, doc, f, p);
            return body(g);
          };
          worst[slot] = std::max(worst[slot], grad_check(loss, params, seed * 31 + slot).max_relative_error);
        };
        Diagnostics d;
        if (task == Task::Coref) {
          check(0, [&](DocumentGraph& g) { return coref_l1(g, pool, 50, d); });
          check(1, [&](DocumentGraph& g) {
            std::mt19937_64 r(9);
            return coref_l2(g, pool, full, r, d);
          });
          check(2, [&](DocumentGraph& g) {
            std::mt19937_64 r(9);
            return coref_l2(g, pool, sampled, r, d);
          });
        } else {
          const RoleLabelSpace labels(params);
          check(3, [&](DocumentGraph& g) { return srl_l1(g, labels, d); });
          check(4, [&](DocumentGraph& g) {
            std::mt19937_64 r(9);
            return srl_l2(g, labels, full, r, d);
          });
          check(5, [&](DocumentGraph& g) {
            std::mt19937_64 r(9);
            return srl_l2(g, labels, sampled, r, d);
          });
        }
      }
    }
  }
  std::string detail = "grad_check max rel. error (tol 1e-4):";
  bool pass = true;
  for (int i = 0; i < 6; ++i) {
    detail += fmt(" %s=%.1e", names[i], worst[i]);
    pass = pass && worst[i] <= 1e-4;
  }
  report("AC5", pass, detail, t0);
}

void ac6() {
  const auto t0 = Clock::now();
  SyntheticSpec spec;  // defaults
  spec.seed = 1;
  const Corpus train_corpus = generate_synthetic(spec);
  spec.documents = 20;
  spec.seed = 2;
  spec.id_prefix = "dev";
  const Corpus dev = generate_synthetic(spec);
  TrainConfig cfg;
  cfg.task = Task::Coref;
  cfg.epochs = 20;
  cfg.learning_rate = 0.5;
  cfg.objective.l2_mode = L2Mode::Sampled;
  cfg.objective.negative_rate = 1.0;
  cfg.greedy_ratio = 0.26;
  const TrainResult r = train(train_corpus, cfg, &dev);
  const EpochMetrics& last = r.epochs.back();
  const double recall = *last.dev_recall, ratio = *last.dev_selected_ratio, greedy = *last.dev_greedy_recall;
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  report("AC6", recall >= 0.90 && ratio <= 0.35 && greedy < recall && secs < 600,
         fmt("20 epochs coref, 100 train/20 dev: structured recall=%.4f (>=0.90) spans/token=%.4f (<=0.35) "
             "greedy@0.26 recall=%.4f (< structured) train time=%.1fs (<600)",
             recall, ratio, greedy, secs),
         t0);
}

void ac7() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(707);
  std::uniform_int_distribution<std::size_t> len(1, 25);
  bool topk_ok = true;
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = len(rng);
    // Coarse scores force ties.
    ScoreTable s(n);
    std::uniform_int_distribution<int> v(-4, 4);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = i + 1; k <= n; ++k) s.set(i, k, 0.5 * v(rng));
    std::vector<std::pair<double, Span>> all;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = i + 1; k <= n; ++k) all.push_back({s(i, k), Span{0, i, k}});
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, all.size() + 2)(rng);
    std::vector<Span> expect;
    for (std::size_t j = 0; j < std::min(k, all.size()); ++j) expect.push_back(all[j].second);
    if (greedy_select_sentence(s, k) != expect) topk_ok = false;
  }
  bool doc_ok = true;
  std::size_t docs = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    std::uniform_int_distribution<std::size_t> sents(1, 6);
    std::vector<ScoreTable> tables;
    std::size_t tokens = 0;
    for (std::size_t i = sents(rng); i > 0; --i) {
      tables.push_back(random_table(len(rng), rng));
      tokens += tables.back().length();
    }
    const std::size_t want = static_cast<std::size_t>(std::floor(0.4 * static_cast<double>(tokens) + 1e-9));
    if (greedy_select_document(tables, 0.4).size() != want) doc_ok = false;
    ++docs;
  }
  std::vector<ScoreTable> hundred;
  for (int i = 0; i < 10; ++i) hundred.push_back(random_table(10, rng));
  const std::size_t forty = greedy_select_document(hundred, 0.4).size();
  report("AC7", topk_ok && doc_ok && forty == 40,
         std::string("top-K = sort oracle on 500 tables: ") + (topk_ok ? "yes" : "NO") +
             "; document selection = floor(0.4|D|) on " + std::to_string(docs) + " docs: " + (doc_ok ? "yes" : "NO") +
             "; |D|=100 -> " + std::to_string(forty) + " spans",
         t0);
}

double median_inside_seconds(std::size_t n, std::mt19937_64& rng, int reps) {
  std::vector<double> times;
  double sink = 0;
  for (int r = 0; r < reps; ++r) {
    const ScoreTable s = random_table(n, rng);
    const auto t = Clock::now();
    sink += inside(s).log_z();
    times.push_back(std::chrono::duration<double>(Clock::now() - t).count());
  }
  if (!std::isfinite(sink)) std::printf("unexpected non-finite log Z\n");
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

void ac8() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(808);
  median_inside_seconds(64, rng, 3);  // warm-up
  const double t64 = median_inside_seconds(64, rng, 21);
  const double t128 = median_inside_seconds(128, rng, 21);
  const double ratio = t128 / t64;
  report("AC8", ratio >= 4.0 && ratio <= 16.0,
         fmt("inside median t(128)=%.4fs t(64)=%.4fs ratio=%.2f (in [4, 16])", t128, t64, ratio), t0);
}

}  // namespace

int main() {
  ac1();
  ac2();
  ac3();
  ac4();
  ac5();
  ac6();
  ac7();
  ac8();
  std::printf("AC9 EXCLUDED published F1, 97.0%% recall at ratio 0.26 and the depth/width/span-accuracy table values "
              "need the original encoder and licensed corpora; the eval module reproduces the analyses on synthetic "
              "data instead\n");
  std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
