#include "spansel/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "spansel/errors.hpp"
#include "spansel/numeric.hpp"

namespace spansel {

namespace {

// log(1 - exp(x)) for x <= 0.
ad::Var log1m_exp(ad::Tape& tape, ad::Var x) { return tape.log1p(tape.neg(tape.exp(x))); }

bool whole_sentence(const Document& doc, const Span& s) {
  return s.start == 0 && s.end == doc.sentences[s.sentence].size();
}

// Every span of every parseable sentence, except whole-sentence spans, in
// document order.
std::vector<Span> structural_spans(const Document& doc) {
  std::vector<Span> out;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const std::size_t n = doc.sentences[s].size();
    if (n < 2) continue;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = i + 1; k <= n; ++k)
        if (k - i < n) out.push_back({s, i, k});
  }
  return out;
}

std::vector<Span> sorted_unique(std::vector<Span> spans) {
  std::sort(spans.begin(), spans.end());
  spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
  return spans;
}

bool contains(std::span<const Span> sorted, const Span& s) { return std::binary_search(sorted.begin(), sorted.end(), s); }

void require_rate(double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) throw ConfigError("negative sample rate must lie in (0, 1]");
}

ad::Var sum_or_zero(ad::Tape& tape, const std::vector<ad::Var>& terms) {
  return terms.empty() ? tape.constant(0.0) : tape.sum(terms);
}

}  // namespace

Diagnostics& Diagnostics::operator+=(const Diagnostics& o) {
  whole_sentence_gold += o.whole_sentence_gold;
  short_sentences += o.short_sentences;
  far_antecedents += o.far_antecedents;
  return *this;
}

// --- Linker and role classifier -----------------------------------------------

std::vector<Antecedent> antecedent_candidates(const Span& mention, std::span<const Span> pool, std::size_t window) {
  std::vector<Antecedent> out{std::nullopt};
  const auto end = std::lower_bound(pool.begin(), pool.end(), mention);
  const auto begin = end - static_cast<std::ptrdiff_t>(std::min<std::size_t>(window, end - pool.begin()));
  out.insert(out.end(), begin, end);
  return out;
}

std::vector<double> null_softmax(std::span<const double> logits) {
  std::vector<double> all{0.0};
  all.insert(all.end(), logits.begin(), logits.end());
  const double z = log_sum_exp(all);
  for (double& v : all) v = std::exp(v - z);
  return all;
}

std::vector<double> antecedent_distribution(const DocumentFeatures& features, const ModelParams& params,
                                            const Span& mention, std::span<const Antecedent> candidates) {
  if (std::count(candidates.begin(), candidates.end(), std::nullopt) != 1)
    throw ContractViolation("antecedent candidates must contain the dummy antecedent exactly once");
  const std::size_t mention_offset = params.offset(Head::Mention);
  const double sm = dot(features.span(mention), params, mention_offset);
  std::vector<double> logits;
  std::size_t null_at = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!candidates[c]) {
      null_at = c;
      continue;
    }
    const Span& a = *candidates[c];
    if (!(a < mention)) throw ContractViolation("antecedent candidate does not precede the mention");
    logits.push_back(sm + dot(features.span(a), params, mention_offset) +
                     dot(features.pair(mention, a), params, params.offset(Head::AntecedentPair)));
  }
  const std::vector<double> p = null_softmax(logits);
  // Put the null probability back at its candidate position.
  std::vector<double> out;
  out.reserve(candidates.size());
  out.insert(out.end(), p.begin() + 1, p.begin() + 1 + static_cast<std::ptrdiff_t>(null_at));
  out.push_back(p[0]);
  out.insert(out.end(), p.begin() + 1 + static_cast<std::ptrdiff_t>(null_at), p.end());
  return out;
}

RoleLabelSpace::RoleLabelSpace(const ModelParams& params) {
  labels_.emplace_back(kNull);
  for (const std::string& l : params.role_labels()) {
    if (l == kNull) throw ConfigError("role label '" + l + "' is reserved");
    labels_.push_back(l);
  }
}

std::size_t RoleLabelSpace::index(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  throw DataError("role '" + std::string(label) + "' is not in the label space");
}

std::vector<double> role_distribution(const DocumentFeatures& features, const ModelParams& params,
                                      const Span& argument, std::size_t predicate, const RoleLabelSpace& labels) {
  if (labels.size() == 0) throw ContractViolation("empty role label space");
  const double sm = dot(features.span(argument), params, params.offset(Head::Mention));
  const auto rf = features.role(argument, predicate);
  std::vector<double> logits;
  for (std::size_t r = 1; r < labels.size(); ++r) logits.push_back(sm + dot(rf, params, params.offset(Head::Role, r - 1)));
  return null_softmax(logits);
}

// --- DocumentGraph ------------------------------------------------------------

DocumentGraph::DocumentGraph(ad::Tape& tape, const Document& doc, const DocumentFeatures& features,
                             const ModelParams& params)
    : tape_(tape), doc_(doc), features_(features), params_(params) {
  log_marginals_.resize(doc.sentences.size());
  mention_.resize(doc.sentences.size());
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const std::size_t n = doc.sentences[s].size();
    mention_[s].resize(ScoreTable::span_count(n));
    if (n < 2) continue;
    const auto scores = tape_score_spans(tape, features, s, params, Head::SpanGrammar);
    log_marginals_[s] = tape_log_marginals(tape, scores, n).log_interest;
  }
}

ad::Var DocumentGraph::log_marginal(const Span& span) {
  if (!doc_.in_bounds(span)) throw RangeError("span outside the document");
  if (!parseable(span.sentence)) throw ContractViolation("no marginals for a sentence shorter than 2 tokens");
  return log_marginals_[span.sentence][ScoreTable::index(doc_.sentences[span.sentence].size(), span.start, span.end)];
}

ad::Var DocumentGraph::mention_score(const Span& span) {
  if (!doc_.in_bounds(span)) throw RangeError("span outside the document");
  auto& slot = mention_[span.sentence][ScoreTable::index(doc_.sentences[span.sentence].size(), span.start, span.end)];
  if (!slot) slot = tape_dot(tape_, features_.span(span), params_, params_.offset(Head::Mention));
  return *slot;
}

ad::Var DocumentGraph::antecedent_logit(const Span& mention, const Span& antecedent) {
  const ad::Var pair =
      tape_dot(tape_, features_.pair(mention, antecedent), params_, params_.offset(Head::AntecedentPair));
  return tape_.add(tape_.add(mention_score(mention), mention_score(antecedent)), pair);
}

ad::Var DocumentGraph::role_logit(const Span& argument, std::size_t predicate, std::size_t role) {
  const ad::Var r =
      tape_dot(tape_, features_.role(argument, predicate), params_, params_.offset(Head::Role, role));
  return tape_.add(mention_score(argument), r);
}

// --- Objectives ---------------------------------------------------------------

std::vector<Span> sample_negative_spans(const Document& doc, std::span<const Span> gold, double rate,
                                        std::mt19937_64& rng) {
  require_rate(rate);
  const std::vector<Span> sorted_gold = sorted_unique({gold.begin(), gold.end()});
  std::vector<Span> pool;
  for (const Span& s : structural_spans(doc))
    if (!contains(sorted_gold, s)) pool.push_back(s);
  const auto want = static_cast<std::size_t>(std::floor(rate * static_cast<double>(doc.token_count()) + 1e-9));
  if (want >= pool.size()) return pool;
  std::vector<Span> out;
  out.reserve(want);
  std::sample(pool.begin(), pool.end(), std::back_inserter(out), want, rng);
  return out;
}

ad::Var coref_l1(DocumentGraph& graph, std::span<const Span> pool, std::size_t window, Diagnostics& diag) {
  const Document& doc = graph.document();
  if (!doc.clusters) throw ContractViolation("coreference objective needs gold clusters");
  ad::Tape& tape = graph.tape();
  std::vector<ad::Var> terms;
  for (const Cluster& cluster : *doc.clusters) {
    const std::vector<Span> members = sorted_unique(cluster);
    for (const Span& mention : members) {
      if (!doc.in_bounds(mention)) throw DataError("document '" + doc.doc_id + "': gold span out of bounds");
      if (!graph.parseable(mention.sentence)) {
        ++diag.short_sentences;
        continue;
      }
      if (whole_sentence(doc, mention)) {
        ++diag.whole_sentence_gold;
        continue;
      }
      const auto candidates = antecedent_candidates(mention, pool, window);
      std::vector<ad::Var> all{tape.constant(0.0)}, gold;
      for (std::size_t c = 1; c < candidates.size(); ++c) {
        const ad::Var logit = graph.antecedent_logit(mention, *candidates[c]);
        all.push_back(logit);
        if (contains(members, *candidates[c])) gold.push_back(logit);
      }
      if (gold.empty()) {
        if (members.front() < mention) ++diag.far_antecedents;
        gold.push_back(all.front());
      }
      const ad::Var log_link = tape.sub(tape.log_sum_exp(gold), tape.log_sum_exp(all));
      terms.push_back(tape.add(graph.log_marginal(mention), log_link));
    }
  }
  return sum_or_zero(tape, terms);
}

ad::Var coref_l2(DocumentGraph& graph, std::span<const Span> pool, const ObjectiveConfig& config,
                 std::mt19937_64& rng, Diagnostics&) {
  const Document& doc = graph.document();
  if (!doc.clusters) throw ContractViolation("coreference objective needs gold clusters");
  ad::Tape& tape = graph.tape();
  std::vector<Span> gold;
  for (const Cluster& c : *doc.clusters) gold.insert(gold.end(), c.begin(), c.end());
  gold = sorted_unique(std::move(gold));
  std::vector<ad::Var> terms;
  if (config.l2_mode == L2Mode::Sampled) {
    for (const Span& s : sample_negative_spans(doc, gold, config.negative_rate, rng))
      terms.push_back(log1m_exp(tape, graph.log_marginal(s)));
    return sum_or_zero(tape, terms);
  }
  for (const Span& s : structural_spans(doc)) {
    if (contains(gold, s)) continue;
    const auto candidates = antecedent_candidates(s, pool, config.window);
    // With only epsilon available the term is log(p + 1 - p) = 0.
    if (candidates.size() == 1) continue;
    std::vector<ad::Var> links;
    for (std::size_t c = 1; c < candidates.size(); ++c) links.push_back(graph.antecedent_logit(s, *candidates[c]));
    const ad::Var lse_links = tape.log_sum_exp(links);
    const ad::Var both[] = {tape.constant(0.0), lse_links};
    // log p(σ) + log(1 - p(ε | σ))
    const ad::Var x = tape.add(graph.log_marginal(s), tape.sub(lse_links, tape.log_sum_exp(both)));
    terms.push_back(log1m_exp(tape, x));
  }
  return sum_or_zero(tape, terms);
}

ad::Var srl_l1(DocumentGraph& graph, const RoleLabelSpace& labels, Diagnostics& diag) {
  const Document& doc = graph.document();
  if (!doc.frames) throw ContractViolation("role objective needs gold frames");
  ad::Tape& tape = graph.tape();
  std::vector<ad::Var> terms;
  for (const Frame& frame : *doc.frames) {
    for (const Argument& arg : frame.arguments) {
      const std::size_t gold = labels.index(arg.role);
      if (gold == 0) throw DataError("document '" + doc.doc_id + "': argument carries the null role");
      if (!doc.in_bounds(arg.span)) throw DataError("document '" + doc.doc_id + "': gold span out of bounds");
      if (!graph.parseable(arg.span.sentence)) {
        ++diag.short_sentences;
        continue;
      }
      if (whole_sentence(doc, arg.span)) {
        ++diag.whole_sentence_gold;
        continue;
      }
      std::vector<ad::Var> logits{tape.constant(0.0)};
      for (std::size_t r = 1; r < labels.size(); ++r) logits.push_back(graph.role_logit(arg.span, frame.predicate, r - 1));
      const ad::Var log_role = tape.sub(logits[gold], tape.log_sum_exp(logits));
      terms.push_back(tape.add(graph.log_marginal(arg.span), log_role));
    }
  }
  return sum_or_zero(tape, terms);
}

ad::Var srl_l2(DocumentGraph& graph, const RoleLabelSpace& labels, const ObjectiveConfig& config,
               std::mt19937_64& rng, Diagnostics&) {
  const Document& doc = graph.document();
  if (!doc.frames) throw ContractViolation("role objective needs gold frames");
  ad::Tape& tape = graph.tape();
  std::vector<Span> gold;
  for (const Frame& f : *doc.frames)
    for (const Argument& a : f.arguments) gold.push_back(a.span);
  gold = sorted_unique(std::move(gold));
  std::vector<ad::Var> terms;
  if (config.l2_mode == L2Mode::Sampled) {
    for (const Span& s : sample_negative_spans(doc, gold, config.negative_rate, rng))
      terms.push_back(log1m_exp(tape, graph.log_marginal(s)));
    return sum_or_zero(tape, terms);
  }
  if (labels.size() < 2) return tape.constant(0.0);
  for (const Frame& frame : *doc.frames) {
    if (!graph.parseable(frame.sentence)) continue;
    const std::size_t n = doc.sentences[frame.sentence].size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = i + 1; k <= n; ++k) {
        const Span s{frame.sentence, i, k};
        if (k - i == n || contains(gold, s)) continue;
        std::vector<ad::Var> roles;
        for (std::size_t r = 1; r < labels.size(); ++r) roles.push_back(graph.role_logit(s, frame.predicate, r - 1));
        const ad::Var lse_roles = tape.log_sum_exp(roles);
        const ad::Var both[] = {tape.constant(0.0), lse_roles};
        const ad::Var x = tape.add(graph.log_marginal(s), tape.sub(lse_roles, tape.log_sum_exp(both)));
        terms.push_back(log1m_exp(tape, x));
      }
    }
  }
  return sum_or_zero(tape, terms);
}

ad::Var span_l1(DocumentGraph& graph, Diagnostics& diag) {
  const Document& doc = graph.document();
  ad::Tape& tape = graph.tape();
  std::vector<ad::Var> terms;
  for (const Span& s : doc.gold_spans()) {
    if (!doc.in_bounds(s)) throw DataError("document '" + doc.doc_id + "': gold span out of bounds");
    if (!graph.parseable(s.sentence)) {
      ++diag.short_sentences;
      continue;
    }
    if (whole_sentence(doc, s)) {
      ++diag.whole_sentence_gold;
      continue;
    }
    terms.push_back(graph.log_marginal(s));
  }
  return sum_or_zero(tape, terms);
}

ad::Var span_l2(DocumentGraph& graph, const ObjectiveConfig& config, std::mt19937_64& rng) {
  const Document& doc = graph.document();
  ad::Tape& tape = graph.tape();
  const std::vector<Span> gold = doc.gold_spans();
  std::vector<Span> negatives;
  if (config.l2_mode == L2Mode::Sampled) {
    negatives = sample_negative_spans(doc, gold, config.negative_rate, rng);
  } else {
    for (const Span& s : structural_spans(doc))
      if (!contains(gold, s)) negatives.push_back(s);
  }
  std::vector<ad::Var> terms;
  for (const Span& s : negatives) terms.push_back(log1m_exp(tape, graph.log_marginal(s)));
  return sum_or_zero(tape, terms);
}

}  // namespace spansel
