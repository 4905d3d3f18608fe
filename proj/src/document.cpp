#include "spansel/document.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "spansel/errors.hpp"

namespace spansel {

namespace {

std::string describe(const Span& s) {
  return "[" + std::to_string(s.sentence) + ", " + std::to_string(s.start) + ", " + std::to_string(s.end) + "]";
}

}  // namespace

std::size_t Document::token_count() const {
  std::size_t total = 0;
  for (const Sentence& s : sentences) total += s.size();
  return total;
}

bool Document::in_bounds(const Span& span) const {
  return span.sentence < sentences.size() && span.start < span.end && span.end <= sentences[span.sentence].size();
}

std::vector<Span> Document::gold_spans() const {
  std::vector<Span> out;
  if (clusters)
    for (const Cluster& c : *clusters) out.insert(out.end(), c.begin(), c.end());
  if (frames)
    for (const Frame& f : *frames)
      for (const Argument& a : f.arguments) out.push_back(a.span);
  if (spans) out.insert(out.end(), spans->begin(), spans->end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void validate(const Document& doc) {
  auto fail = [&](const std::string& what) { throw DataError("document '" + doc.doc_id + "': " + what); };
  if (doc.clusters) {
    for (const Cluster& cluster : *doc.clusters) {
      std::set<Span> seen;
      for (const Span& s : cluster) {
        if (!doc.in_bounds(s)) fail("span " + describe(s) + " is out of bounds");
        if (!seen.insert(s).second) fail("span " + describe(s) + " repeated within a cluster");
      }
    }
  }
  if (doc.spans)
    for (const Span& s : *doc.spans)
      if (!doc.in_bounds(s)) fail("span " + describe(s) + " is out of bounds");
  if (doc.frames) {
    for (const Frame& f : *doc.frames) {
      if (f.sentence >= doc.sentences.size() || f.predicate >= doc.sentences[f.sentence].size())
        fail("predicate at sentence " + std::to_string(f.sentence) + " token " + std::to_string(f.predicate) +
             " is out of bounds");
      std::set<Span> seen;
      for (const Argument& a : f.arguments) {
        if (a.span.sentence != f.sentence) fail("argument " + describe(a.span) + " leaves its predicate's sentence");
        if (!doc.in_bounds(a.span)) fail("span " + describe(a.span) + " is out of bounds");
        if (!seen.insert(a.span).second) fail("argument " + describe(a.span) + " repeated within a frame");
      }
    }
  }
}

}  // namespace spansel
