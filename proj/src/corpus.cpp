#include "spansel/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>

#include <json.hpp>

#include "spansel/errors.hpp"

namespace spansel {

using nlohmann::json;

namespace {

// Thrown inside record parsing; rethrown as DataError with the line number.
struct RecordError {
  std::string what;
};

std::size_t index_of(const json& j, const char* what) {
  if (!j.is_number_unsigned()) throw RecordError{std::string(what) + " must be a non-negative integer"};
  return j.get<std::size_t>();
}

Span span_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw RecordError{"a span must be [sentence, start, end]"};
  return {index_of(j[0], "sentence"), index_of(j[1], "start"), index_of(j[2], "end")};
}

json span_json(const Span& s) { return json::array({s.sentence, s.start, s.end}); }

Document document_from(const json& j) {
  if (!j.is_object()) throw RecordError{"record is not an object"};
  Document doc;
  if (!j.contains("doc_id") || !j["doc_id"].is_string()) throw RecordError{"missing string field 'doc_id'"};
  doc.doc_id = j["doc_id"].get<std::string>();
  if (!j.contains("sentences") || !j["sentences"].is_array()) throw RecordError{"missing array field 'sentences'"};
  for (const json& s : j["sentences"]) {
    if (!s.is_array()) throw RecordError{"a sentence must be an array of tokens"};
    Sentence sentence;
    for (const json& t : s) {
      if (!t.is_string()) throw RecordError{"tokens must be strings"};
      sentence.push_back(t.get<std::string>());
    }
    doc.sentences.push_back(std::move(sentence));
  }
  if (j.contains("clusters")) {
    if (!j["clusters"].is_array()) throw RecordError{"'clusters' must be an array"};
    std::vector<Cluster> clusters;
    for (const json& c : j["clusters"]) {
      if (!c.is_array()) throw RecordError{"a cluster must be an array of spans"};
      Cluster cluster;
      for (const json& s : c) cluster.push_back(span_from(s));
      clusters.push_back(std::move(cluster));
    }
    doc.clusters = std::move(clusters);
  }
  if (j.contains("frames")) {
    if (!j["frames"].is_array()) throw RecordError{"'frames' must be an array"};
    std::vector<Frame> frames;
    for (const json& f : j["frames"]) {
      if (!f.is_object() || !f.contains("sentence") || !f.contains("predicate") || !f.contains("arguments") ||
          !f["arguments"].is_array())
        throw RecordError{"a frame needs 'sentence', 'predicate' and 'arguments'"};
      Frame frame{index_of(f["sentence"], "sentence"), index_of(f["predicate"], "predicate"), {}};
      for (const json& a : f["arguments"]) {
        if (!a.is_array() || a.size() != 3 || !a[2].is_string())
          throw RecordError{"an argument must be [start, end, \"role\"]"};
        frame.arguments.push_back(
            {Span{frame.sentence, index_of(a[0], "start"), index_of(a[1], "end")}, a[2].get<std::string>()});
      }
      frames.push_back(std::move(frame));
    }
    doc.frames = std::move(frames);
  }
  if (j.contains("spans")) {
    if (!j["spans"].is_array()) throw RecordError{"'spans' must be an array"};
    std::vector<Span> spans;
    for (const json& s : j["spans"]) spans.push_back(span_from(s));
    doc.spans = std::move(spans);
  }
  return doc;
}

void for_each_record(std::istream& in, const std::string& source,
                     const std::function<void(const json&)>& visit) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      visit(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(source + ":" + std::to_string(number) + ": malformed record: " + e.what());
    } catch (const RecordError& e) {
      throw DataError(source + ":" + std::to_string(number) + ": " + e.what);
    }
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const std::string& l : lines) out << l << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::Coref:
      return "coref";
    case Task::Srl:
      return "srl";
    case Task::SpansOnly:
      return "spans-only";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  for (Task t : {Task::Coref, Task::Srl, Task::SpansOnly})
    if (to_string(t) == name) return t;
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const Document& d : documents) n += d.token_count();
  return n;
}

std::vector<std::string> Corpus::role_labels() const {
  std::set<std::string> roles;
  for (const Document& d : documents)
    if (d.frames)
      for (const Frame& f : *d.frames)
        for (const Argument& a : f.arguments) roles.insert(a.role);
  return {roles.begin(), roles.end()};
}

Task infer_task(const std::vector<Document>& docs) {
  const bool frames = std::any_of(docs.begin(), docs.end(), [](const Document& d) { return d.frames.has_value(); });
  const bool clusters = std::any_of(docs.begin(), docs.end(), [](const Document& d) { return d.clusters.has_value(); });
  return frames ? Task::Srl : clusters ? Task::Coref : Task::SpansOnly;
}

Corpus parse_corpus(std::istream& in, const std::string& source) {
  Corpus corpus;
  std::set<std::string> ids;
  for_each_record(in, source, [&](const json& j) {
    Document doc = document_from(j);
    validate(doc);
    if (!ids.insert(doc.doc_id).second) throw DataError(source + ": duplicate doc_id '" + doc.doc_id + "'");
    corpus.documents.push_back(std::move(doc));
  });
  corpus.task = infer_task(corpus.documents);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_corpus(in, path.string());
}

std::string document_to_json(const Document& doc) {
  json j = {{"doc_id", doc.doc_id}, {"sentences", doc.sentences}};
  if (doc.clusters) {
    json clusters = json::array();
    for (const Cluster& c : *doc.clusters) {
      json members = json::array();
      for (const Span& s : c) members.push_back(span_json(s));
      clusters.push_back(members);
    }
    j["clusters"] = clusters;
  }
  if (doc.frames) {
    json frames = json::array();
    for (const Frame& f : *doc.frames) {
      json args = json::array();
      for (const Argument& a : f.arguments) args.push_back(json::array({a.span.start, a.span.end, a.role}));
      frames.push_back({{"sentence", f.sentence}, {"predicate", f.predicate}, {"arguments", args}});
    }
    j["frames"] = frames;
  }
  if (doc.spans) {
    json spans = json::array();
    for (const Span& s : *doc.spans) spans.push_back(span_json(s));
    j["spans"] = spans;
  }
  return j.dump();
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::vector<std::string> lines;
  for (const Document& d : corpus.documents) lines.push_back(document_to_json(d));
  write_lines(path, lines);
}

// --- Selection and marginal files ---------------------------------------------

void save_selection(const std::vector<SelectionRecord>& records, const std::filesystem::path& path) {
  std::vector<std::string> lines;
  for (const SelectionRecord& r : records) {
    json spans = json::array(), ranked = json::array();
    for (const Span& s : r.spans) spans.push_back(span_json(s));
    for (const Span& s : r.ranked) ranked.push_back(span_json(s));
    lines.push_back(json({{"doc_id", r.doc_id}, {"spans", spans}, {"ranked", ranked}}).dump());
  }
  write_lines(path, lines);
}

std::vector<SelectionRecord> load_selection(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<SelectionRecord> out;
  for_each_record(in, path.string(), [&](const json& j) {
    if (!j.is_object() || !j.contains("doc_id") || !j.contains("spans")) throw RecordError{"need 'doc_id' and 'spans'"};
    SelectionRecord r;
    r.doc_id = j.at("doc_id").get<std::string>();
    for (const json& s : j.at("spans")) r.spans.push_back(span_from(s));
    if (j.contains("ranked"))
      for (const json& s : j.at("ranked")) r.ranked.push_back(span_from(s));
    out.push_back(std::move(r));
  });
  return out;
}

void save_marginals(const std::vector<MarginalRecord>& records, const std::filesystem::path& path) {
  std::vector<std::string> lines;
  for (const MarginalRecord& r : records) {
    json m = json::array();
    for (const auto& [s, p] : r.marginals) m.push_back(json::array({s.sentence, s.start, s.end, p}));
    lines.push_back(json({{"doc_id", r.doc_id}, {"marginals", m}}).dump());
  }
  write_lines(path, lines);
}

std::vector<MarginalRecord> load_marginals(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<MarginalRecord> out;
  for_each_record(in, path.string(), [&](const json& j) {
    if (!j.is_object() || !j.contains("doc_id") || !j.contains("marginals"))
      throw RecordError{"need 'doc_id' and 'marginals'"};
    MarginalRecord r;
    r.doc_id = j.at("doc_id").get<std::string>();
    for (const json& e : j.at("marginals")) {
      if (!e.is_array() || e.size() != 4 || !e[3].is_number()) throw RecordError{"a marginal must be [s, b, e, p]"};
      r.marginals.push_back({Span{index_of(e[0], "sentence"), index_of(e[1], "start"), index_of(e[2], "end")},
                             e[3].get<double>()});
    }
    out.push_back(std::move(r));
  });
  return out;
}

}  // namespace spansel
