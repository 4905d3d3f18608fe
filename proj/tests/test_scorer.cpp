#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "spansel/errors.hpp"
#include "spansel/inference.hpp"
#include "spansel/scorer.hpp"

using namespace spansel;

namespace {

const Sentence kSentence = {"the", "cat", "sat", "on", "the", "mat"};

}  // namespace

TEST_CASE("score_spans on simple weights") {
  ModelParams params(1024, 3);
  SUBCASE("zero weights") {
    const auto s = score_spans(kSentence, params, Head::SpanGrammar);
    for (double v : s.values()) CHECK(v == 0.0);
  }
  SUBCASE("bias only") {
    const DocumentFeatures f({kSentence}, params);
    params.weights()[params.offset(Head::SpanGrammar) + f.span_bias()] = 0.7;
    const auto s = score_spans(kSentence, params, Head::SpanGrammar);
    for (double v : s.values()) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
    // The mention head is a separate block.
    const auto m = score_spans(kSentence, params, Head::Mention);
    for (double v : m.values()) CHECK(v == 0.0);
  }
  SUBCASE("identical token lists score identically") {
    params.randomize(11, 1.0);
    const DocumentFeatures f({kSentence, {"a", "b"}, kSentence}, params);
    const auto a = score_spans(f, 0, params, Head::SpanGrammar);
    const auto b = score_spans(f, 2, params, Head::SpanGrammar);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin(), b.values().end()));
    const auto c = score_spans(kSentence, params, Head::SpanGrammar);
    CHECK(std::equal(a.values().begin(), a.values().end(), c.values().begin(), c.values().end()));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(score_spans(Sentence{}, params, Head::SpanGrammar), ContractViolation);
    CHECK_THROWS_AS(score_spans(kSentence, params, Head::AntecedentPair), ContractViolation);
  }
}

TEST_CASE("features are deterministic and within the hash dimension") {
  ModelParams params(97, 5);
  const DocumentFeatures a({kSentence}, params), b({kSentence}, params);
  for (std::size_t i = 0; i < kSentence.size(); ++i) {
    for (std::size_t k = i + 1; k <= kSentence.size(); ++k) {
      const auto fa = a.span({0, i, k});
      const auto fb = b.span({0, i, k});
      REQUIRE(fa.size() == fb.size());
      double count = 0.0;
      for (std::size_t t = 0; t < fa.size(); ++t) {
        CHECK(fa[t].index == fb[t].index);
        CHECK(fa[t].coefficient == fb[t].coefficient);
        CHECK(fa[t].index < 97);
        count += fa[t].coefficient;
      }
      CHECK(count == 6.0);
    }
  }
  // A different hash seed moves features.
  ModelParams other(97, 6);
  const DocumentFeatures c({kSentence}, other);
  bool differs = false;
  for (std::size_t t = 0; t < a.span({0, 0, 2}).size() && t < c.span({0, 0, 2}).size(); ++t)
    differs |= a.span({0, 0, 2})[t].index != c.span({0, 0, 2})[t].index;
  CHECK(differs);
  CHECK_THROWS_AS(a.span({0, 2, 7}), RangeError);
  CHECK_THROWS_AS(a.role({0, 0, 2}, 6), RangeError);
}

TEST_CASE("width buckets") {
  CHECK(width_bucket(1) == 0);
  CHECK(width_bucket(2) == 1);
  CHECK(width_bucket(3) == 2);
  CHECK(width_bucket(4) == 2);
  CHECK(width_bucket(5) == 3);
  CHECK(width_bucket(8) == 3);
  CHECK(width_bucket(9) == 4);
  CHECK(width_bucket(40) == 4);
}

TEST_CASE("sigmoid probabilities") {
  ScoreTable s(2);
  s.set(0, 1, 0.0);
  s.set(1, 2, std::log(3.0));
  s.set(0, 2, -20.0);
  const auto p = sigmoid_prob(s);
  CHECK(p(0, 1) == 0.5);
  CHECK(p(1, 2) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(p(0, 2) == doctest::Approx(2.0611536224385579e-9).epsilon(1e-12));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int t = 0; t < 200; ++t) {
    const double a = u(rng), b = u(rng);
    ScoreTable x(1);
    x.set(0, 1, std::min(a, b));
    ScoreTable y(1);
    y.set(0, 1, std::max(a, b));
    const double pa = sigmoid_prob(x)(0, 1), pb = sigmoid_prob(y)(0, 1);
    CHECK(pa > 0.0);
    CHECK(pb < 1.0);
    CHECK(pa <= pb);
  }
}

TEST_CASE("grad_check on an identity loss") {
  ModelParams params(64, 1);
  params.weights()[5] = 0.3;
  const LossBuilder loss = [](ad::Tape& tape, const ModelParams& p) {
    const ad::ParamRef ref[] = {{5, 1.0}};
    return tape.dot(ref, p.weights());
  };
  ad::Tape tape;
  const ad::Var out = loss(tape, params);
  std::vector<double> grad(params.weights().size(), 0.0);
  tape.accumulate_parameter_gradient(tape.backward(out), grad);
  CHECK(grad[5] == 1.0);
  const auto r = grad_check(loss, params, 1);
  CHECK(r.checked == 50);
  CHECK(r.max_relative_error <= 1e-8);
}

TEST_CASE("grad_check on log Z of a scored sentence") {
  ModelParams params(256, 9);
  params.randomize(4, 0.5);
  const Sentence sentence = {"w", "x", "y", "z"};
  const LossBuilder loss = [&](ad::Tape& tape, const ModelParams& p) {
    const DocumentFeatures f({sentence}, p);
    const auto scores = tape_score_spans(tape, f, 0, p, Head::SpanGrammar);
    return tape_log_partition(tape, scores, sentence.size());
  };
  const auto r = grad_check(loss, params, 2);
  CHECK(r.checked == 50);
  CHECK(r.max_relative_error <= 1e-4);
  CHECK(r.loss == doctest::Approx(inside(score_spans(sentence, params, Head::SpanGrammar)).log_z()).epsilon(1e-14));

  const LossBuilder bad = [](ad::Tape& tape, const ModelParams&) { return tape.log(tape.constant(-1.0)); };
  CHECK_THROWS_AS(grad_check(bad, params, 2), NumericError);
}

TEST_CASE("model files round-trip bit-exactly") {
  ModelParams params(128, 77, {"A0", "A1", "AM"});
  params.randomize(5, 3.0);
  params.weights()[3] = 0.0;
  params.weights()[4] = -0.0;
  params.weights()[7] = 1e-300;
  const ModelParams back = model_from_json(model_to_json(params));
  CHECK(back.hash_dim() == 128);
  CHECK(back.seed() == 77);
  CHECK(back.role_labels() == params.role_labels());
  REQUIRE(back.weights().size() == params.weights().size());
  for (std::size_t i = 0; i < params.weights().size(); ++i) {
    CHECK(back.weights()[i] == params.weights()[i]);
    CHECK(std::signbit(back.weights()[i]) == std::signbit(params.weights()[i]));
  }
  CHECK(model_to_json(back) == model_to_json(params));

  const auto path = std::filesystem::temp_directory_path() / "spansel_test_model.json";
  save_model(params, path);
  CHECK(load_model(path) == params);
  std::filesystem::remove(path);
}

TEST_CASE("model file errors") {
  CHECK_THROWS_AS(model_from_json("{"), DataError);
  CHECK_THROWS_AS(model_from_json(R"({"format":"other"})"), DataError);
  CHECK_THROWS_AS(
      model_from_json(R"({"format":"spansel-model/1","hash_dim":4,"seed":0,"role_labels":[],"heads":{"span_grammar":[[9,1.0]],"mention":[],"antecedent_pair":[],"role":{}}})"),
      DataError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), DataError);
  CHECK_THROWS_AS(ModelParams(16, 0, {"A", "A"}), ConfigError);
}
