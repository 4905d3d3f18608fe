#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "spansel/corpus.hpp"
#include "spansel/errors.hpp"
#include "spansel/synthetic.hpp"
#include "test_util.hpp"

using namespace spansel;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "spansel_test_corpus";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_corpus(in, "mem");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty input gives an empty corpus") {
  std::istringstream in("");
  const Corpus c = parse_corpus(in);
  CHECK(c.documents.empty());
  std::istringstream blank("\n\n  \n");
  CHECK(parse_corpus(blank).documents.empty());
}

TEST_CASE("end <= start names the span") {
  const std::string msg =
      error_of(R"({"doc_id": "d1", "sentences": [["a", "b", "c"]], "clusters": [[[0, 2, 2]]]})");
  CHECK(msg.find("d1") != std::string::npos);
  CHECK(msg.find("[0, 2, 2]") != std::string::npos);
}

TEST_CASE("out of range span and malformed lines") {
  CHECK(error_of(R"({"doc_id": "d", "sentences": [["a"]], "spans": [[0, 0, 2]]})").find("'d'") != std::string::npos);
  CHECK(error_of(R"({"doc_id": "d", "sentences": [["a"]], "spans": [[1, 0, 1]]})") != "");
  const std::string msg = error_of("{\"doc_id\": \"a\", \"sentences\": [[\"x\"]]}\n\n{not json\n");
  CHECK(msg.find("mem:3") != std::string::npos);
  CHECK(error_of(R"({"sentences": [["a"]]})").find("doc_id") != std::string::npos);
  CHECK(error_of(R"({"doc_id": "d", "sentences": [["a", "b"]], "clusters": [[[0, 0, 1], [0, 0, 1]]]})") != "");
  CHECK(error_of("{\"doc_id\": \"a\", \"sentences\": []}\n{\"doc_id\": \"a\", \"sentences\": []}").find("a") !=
        std::string::npos);
}

TEST_CASE("task inference") {
  std::vector<Document> docs(1);
  docs[0].sentences = {{"a", "b"}};
  CHECK(infer_task(docs) == Task::SpansOnly);
  docs[0].clusters = std::vector<Cluster>{};
  CHECK(infer_task(docs) == Task::Coref);
  docs[0].frames = std::vector<Frame>{};
  CHECK(infer_task(docs) == Task::Srl);
  CHECK(parse_task("spans-only") == Task::SpansOnly);
  CHECK_THROWS_AS(parse_task("ner"), ConfigError);
}

TEST_CASE("corpus round trip") {
  std::mt19937_64 rng(3);
  Corpus c;
  c.task = Task::Srl;
  for (int d = 0; d < 5; ++d) {
    Document doc = spansel::testing::random_document(rng, 4, 1, 7);
    doc.doc_id = "doc" + std::to_string(d);
    doc.sentences[0][0] = "quote\"and\\unicode é";
    c.documents.push_back(doc);
  }
  const auto path = scratch("round.jsonl");
  save_corpus(c, path);
  CHECK(load_corpus(path) == c);
}

TEST_CASE("selection and marginal files round trip") {
  std::vector<SelectionRecord> sel = {{"a", {{0, 0, 2}, {1, 1, 3}}, {{1, 1, 3}, {0, 0, 2}, {0, 0, 1}}}, {"b", {}, {}}};
  const auto sp = scratch("sel.jsonl");
  save_selection(sel, sp);
  CHECK(load_selection(sp) == sel);

  std::vector<MarginalRecord> marg = {{"a", {{{0, 0, 1}, 0.1234567890123456789}, {{0, 1, 2}, 1e-300}}}};
  const auto mp = scratch("marg.jsonl");
  save_marginals(marg, mp);
  CHECK(load_marginals(mp) == marg);
}

TEST_CASE("synthetic corpus is deterministic") {
  SyntheticSpec spec;
  spec.documents = 10;
  CHECK(generate_synthetic(spec) == generate_synthetic(spec));
  SyntheticSpec other = spec;
  other.seed = 2;
  CHECK_FALSE(generate_synthetic(other) == generate_synthetic(spec));
}

TEST_CASE("synthetic span probability 0 plants nothing") {
  for (Task task : {Task::Coref, Task::Srl, Task::SpansOnly}) {
    SyntheticSpec spec;
    spec.documents = 10;
    spec.span_probability = 0.0;
    spec.task = task;
    for (const Document& d : generate_synthetic(spec).documents) CHECK(d.gold_spans().empty());
  }
}

TEST_CASE("synthetic gold is nested or disjoint and valid") {
  for (Task task : {Task::Coref, Task::Srl, Task::SpansOnly}) {
    SyntheticSpec spec;
    spec.task = task;
    const Corpus c = generate_synthetic(spec);
    CHECK(c.documents.size() == 100);
    CHECK(infer_task(c.documents) == task);
    std::size_t gold = 0;
    for (const Document& d : c.documents) {
      CHECK_NOTHROW(validate(d));
      CHECK(d.sentences.size() == 5);
      for (const Sentence& s : d.sentences) CHECK((s.size() >= 5 && s.size() <= 15));
      const auto spans = d.gold_spans();
      gold += spans.size();
      for (std::size_t a = 0; a < spans.size(); ++a) {
        CHECK(spans[a].width() < d.sentences[spans[a].sentence].size());
        for (std::size_t b = a + 1; b < spans.size(); ++b) CHECK(nested_or_disjoint(spans[a], spans[b]));
      }
    }
    CHECK(gold > 0);
  }
}

TEST_CASE("synthetic coref clusters are token-identical") {
  SyntheticSpec spec;
  spec.documents = 20;
  std::size_t multi = 0;
  for (const Document& d : generate_synthetic(spec).documents) {
    for (const Cluster& c : *d.clusters) {
      multi += c.size() > 1;
      auto text = [&](const Span& s) {
        const Sentence& t = d.sentences[s.sentence];
        return Sentence(t.begin() + static_cast<long>(s.start), t.begin() + static_cast<long>(s.end));
      };
      for (const Span& s : c) CHECK(text(s) == text(c.front()));
    }
  }
  CHECK(multi > 0);
  spec.annotate_singletons = false;
  for (const Document& d : generate_synthetic(spec).documents)
    for (const Cluster& c : *d.clusters) CHECK(c.size() > 1);
}

TEST_CASE("synthetic srl frames keep the predicate outside its arguments") {
  SyntheticSpec spec;
  spec.task = Task::Srl;
  spec.documents = 20;
  for (const Document& d : generate_synthetic(spec).documents) {
    CHECK(d.frames->size() == d.sentences.size());
    for (const Frame& f : *d.frames) {
      for (const Argument& a : f.arguments) {
        CHECK((a.span.end <= f.predicate || a.span.start > f.predicate));
        if (a.role != "AM") CHECK(a.role == (a.span.end <= f.predicate ? "A0" : "A1"));
      }
    }
  }
}

TEST_CASE("infeasible synthetic specs") {
  SyntheticSpec spec;
  spec.span_probability = 1.5;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  spec.min_length = 9;
  spec.max_length = 4;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.min_length = 1;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.span_probability = 0.0;
  CHECK_NOTHROW(spec.validate());
}
