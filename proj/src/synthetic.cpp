#include "spansel/synthetic.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "spansel/errors.hpp"

namespace spansel {

namespace {

struct Planted {
  Span span;
  std::size_t type = 0;
};

using Rng = std::mt19937_64;

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool coin(Rng& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

// Random binary bracketing of [start, end); appends every node, root included.
void bracket(Rng& rng, std::size_t start, std::size_t end, std::vector<std::pair<std::size_t, std::size_t>>& out) {
  out.emplace_back(start, end);
  if (end - start == 1) return;
  const std::size_t split = uniform(rng, start + 1, end - 1);
  bracket(rng, start, split, out);
  bracket(rng, split, end, out);
}

class Generator {
 public:
  explicit Generator(const SyntheticSpec& spec) : spec_(spec), rng_(spec.seed) {}

  Document document(std::size_t index) {
    Document doc;
    char id[32];
    std::snprintf(id, sizeof id, "-%04zu", index);
    doc.doc_id = spec_.id_prefix + id;
    std::vector<Planted> gold;
    std::vector<Frame> frames;
    leaves_.clear();
    for (std::size_t s = 0; s < spec_.sentences_per_doc; ++s) {
      const std::size_t n = uniform(rng_, spec_.min_length, spec_.max_length);
      Sentence tokens(n);
      for (std::string& t : tokens) t = coin(rng_, spec_.noise) ? random_trigger() : filler();
      std::vector<Planted> planted;
      std::optional<std::size_t> predicate;
      if (spec_.task == Task::Srl) {
        predicate = uniform(rng_, 0, n - 1);
        plant(s, 0, *predicate, planted);
        plant(s, *predicate + 1, n, planted);
        tokens[*predicate] = "v" + std::to_string(uniform(rng_, 0, 19));
      } else {
        plant(s, 0, n, planted);
      }
      // Outer spans first so nested boundaries win.
      std::stable_sort(planted.begin(), planted.end(),
                       [](const Planted& a, const Planted& b) { return a.span.width() > b.span.width(); });
      for (const Planted& p : planted) mark(tokens, p);
      if (spec_.task == Task::Coref) repeat(doc, tokens, planted);
      if (predicate) frames.push_back(frame(s, *predicate, planted));
      doc.sentences.push_back(std::move(tokens));
      gold.insert(gold.end(), planted.begin(), planted.end());
    }
    switch (spec_.task) {
      case Task::Coref:
        doc.clusters = clusters(doc, gold);
        break;
      case Task::Srl:
        doc.frames = std::move(frames);
        break;
      case Task::SpansOnly: {
        std::vector<Span> spans;
        for (const Planted& p : gold) spans.push_back(p.span);
        std::sort(spans.begin(), spans.end());
        doc.spans = std::move(spans);
        break;
      }
    }
    return doc;
  }

 private:
  std::string filler() { return "w" + std::to_string(uniform(rng_, 0, spec_.vocabulary - 1)); }
  std::string opener(std::size_t t) const { return "o" + std::to_string(t); }
  std::string closer(std::size_t t) const { return "c" + std::to_string(t); }
  std::string single() { return "p" + std::to_string(uniform(rng_, 0, spec_.single_tokens - 1)); }

  std::string random_trigger() {
    switch (uniform(rng_, 0, 2)) {
      case 0:
        return opener(uniform(rng_, 0, spec_.span_types - 1));
      case 1:
        return closer(uniform(rng_, 0, spec_.span_types - 1));
      default:
        return single();
    }
  }

  // Brackets [start, end) and keeps each node as gold with span_probability;
  // the sentence root (0, n) is never gold.
  void plant(std::size_t sentence, std::size_t start, std::size_t end, std::vector<Planted>& out) {
    if (start >= end) return;
    std::vector<std::pair<std::size_t, std::size_t>> nodes;
    bracket(rng_, start, end, nodes);
    const bool whole = spec_.task != Task::Srl;
    std::vector<bool> starts(end + 1, false), ends(end + 1, false);
    for (const auto& [i, k] : nodes) {
      const bool keep = coin(rng_, spec_.span_probability);
      const std::size_t type = uniform(rng_, 0, spec_.span_types - 1);
      if (whole && i == start && k == end) continue;
      // Nodes come in preorder, so an outer gold span claims its boundary
      // tokens before any nested span could overwrite them.
      if (!keep || starts[i] || ends[k]) continue;
      starts[i] = ends[k] = true;
      out.push_back({Span{sentence, i, k}, type});
    }
  }

  void mark(Sentence& tokens, const Planted& p) {
    if (p.span.width() == 1) {
      tokens[p.span.start] = single();
      return;
    }
    tokens[p.span.start] = opener(p.type);
    tokens[p.span.end - 1] = closer(p.type);
  }

  // Copies the tokens of an earlier innermost gold span of equal width into
  // innermost gold spans of this sentence.
  void repeat(const Document& doc, Sentence& tokens, const std::vector<Planted>& planted) {
    for (const Planted& p : planted) {
      const bool innermost = std::none_of(planted.begin(), planted.end(),
                                          [&](const Planted& q) { return p.span.strictly_contains(q.span); });
      if (!innermost) continue;
      auto& earlier = leaves_[p.span.width()];
      if (!earlier.empty() && coin(rng_, spec_.repeat_probability)) {
        const Span& src = earlier[uniform(rng_, 0, earlier.size() - 1)];
        const Sentence& from = src.sentence < doc.sentences.size() ? doc.sentences[src.sentence] : tokens;
        std::copy(from.begin() + static_cast<std::ptrdiff_t>(src.start), from.begin() + static_cast<std::ptrdiff_t>(src.end),
                  tokens.begin() + static_cast<std::ptrdiff_t>(p.span.start));
      }
    }
    // Registered after copying so a span never copies from its own sentence
    // (whose tokens may still change).
    for (const Planted& p : planted)
      if (std::none_of(planted.begin(), planted.end(), [&](const Planted& q) { return p.span.strictly_contains(q.span); }))
        leaves_[p.span.width()].push_back(p.span);
  }

  Frame frame(std::size_t sentence, std::size_t predicate, const std::vector<Planted>& planted) {
    Frame f{sentence, predicate, {}};
    for (const Planted& p : planted) {
      const std::string role = p.type == 0 ? "AM" : p.span.end <= predicate ? "A0" : "A1";
      f.arguments.push_back({p.span, role});
    }
    std::sort(f.arguments.begin(), f.arguments.end(),
              [](const Argument& a, const Argument& b) { return a.span < b.span; });
    return f;
  }

  std::vector<Cluster> clusters(const Document& doc, const std::vector<Planted>& gold) {
    std::map<std::vector<std::string>, Cluster> by_content;
    std::vector<Span> spans;
    for (const Planted& p : gold) spans.push_back(p.span);
    std::sort(spans.begin(), spans.end());
    std::vector<std::vector<std::string>> order;
    for (const Span& s : spans) {
      const Sentence& t = doc.sentences[s.sentence];
      std::vector<std::string> key(t.begin() + static_cast<std::ptrdiff_t>(s.start), t.begin() + static_cast<std::ptrdiff_t>(s.end));
      auto [it, fresh] = by_content.try_emplace(key);
      if (fresh) order.push_back(key);
      it->second.push_back(s);
    }
    std::vector<Cluster> out;
    for (const auto& key : order) {
      Cluster& c = by_content[key];
      if (c.size() > 1 || spec_.annotate_singletons) out.push_back(std::move(c));
    }
    return out;
  }

  const SyntheticSpec& spec_;
  Rng rng_;
  std::map<std::size_t, std::vector<Span>> leaves_;  // innermost gold spans by width, this document
};

}  // namespace

void SyntheticSpec::validate() const {
  if (min_length < 1 || min_length > max_length) throw ConfigError("sentence lengths need 1 <= min <= max");
  if (max_length > 1000) throw ConfigError("sentence length above 1000");
  if (sentences_per_doc == 0) throw ConfigError("documents need at least one sentence");
  if (vocabulary == 0 || span_types == 0 || single_tokens == 0) throw ConfigError("token classes must be non-empty");
  if (!(span_probability >= 0.0 && span_probability <= 1.0)) throw ConfigError("span probability must lie in [0, 1]");
  if (!(noise >= 0.0 && noise <= 1.0)) throw ConfigError("noise must lie in [0, 1]");
  if (!(repeat_probability >= 0.0 && repeat_probability <= 1.0))
    throw ConfigError("repeat probability must lie in [0, 1]");
  if (task != Task::Srl && min_length < 2 && span_probability > 0.0)
    throw ConfigError("one-token sentences cannot hold gold spans; raise the minimum length");
}

Corpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Generator gen(spec);
  Corpus corpus;
  corpus.task = spec.task;
  for (std::size_t d = 0; d < spec.documents; ++d) corpus.documents.push_back(gen.document(d));
  return corpus;
}

}  // namespace spansel
