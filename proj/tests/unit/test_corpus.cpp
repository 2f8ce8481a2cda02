#include <doctest.h>

#include <numeric>
#include <sstream>
#include <string>

#include "lyricmatch/corpus.hpp"
#include "lyricmatch/errors.hpp"
#include "lyricmatch/reference.hpp"
#include "lyricmatch/rng.hpp"

#include "../support/synthetic.hpp"

using namespace lyricmatch;

namespace {

Corpus from_jsonl(const std::string& text) {
  std::istringstream in(text);
  return ingest_stream(in, CorpusFormat::JsonLines);
}

std::string round_trip(const Corpus& c, CorpusFormat f) {
  std::ostringstream out;
  serialize(c, out, f);
  return out.str();
}

const char* kSmallJsonl =
    R"({"id":"o1","title":"t","artist":"a","lyrics":"some words here","role":"original"}
{"id":"c1","title":"t","artist":"b","lyrics":"some words","role":"cover","original_id":"o1"}
{"id":"c2","title":"t","artist":"c","lyrics":"other words here","role":"cover","original_id":"o1","language":"en"}
)";

}  // namespace

TEST_CASE("jsonl ingest builds groups") {
  const Corpus c = from_jsonl(kSmallJsonl);
  CHECK(c.records.size() == 3);
  CHECK(c.n_originals() == 1);
  CHECK(c.n_covers() == 2);
  REQUIRE(c.groups.count("o1") == 1);
  CHECK(c.groups.at("o1").size() == 2);
  CHECK(c.records[2].language == std::optional<std::string>("en"));
}

TEST_CASE("empty input gives an empty corpus") {
  const Corpus c = from_jsonl("");
  CHECK(c.records.empty());
  CHECK(c.groups.empty());
}

TEST_CASE("integrity errors name the offending record") {
  const std::string dangling =
      R"({"id":"c1","title":"t","artist":"a","lyrics":"x y","role":"cover","original_id":"missing"})";
  CHECK_THROWS_WITH_AS(from_jsonl(dangling),
                       doctest::Contains("missing"), IntegrityError);

  const std::string dup =
      R"({"id":"o1","title":"t","artist":"a","lyrics":"x","role":"original"}
{"id":"o1","title":"t","artist":"a","lyrics":"y","role":"original"})";
  CHECK_THROWS_WITH_AS(from_jsonl(dup), doctest::Contains("o1"), IntegrityError);

  const std::string blank =
      R"({"id":"o2","title":"t","artist":"a","lyrics":"   ","role":"original"})";
  CHECK_THROWS_WITH_AS(from_jsonl(blank), doctest::Contains("o2"), IntegrityError);

  const std::string cover_no_ref =
      R"({"id":"c9","title":"t","artist":"a","lyrics":"x","role":"cover"})";
  CHECK_THROWS_WITH_AS(from_jsonl(cover_no_ref), doctest::Contains("c9"),
                       IntegrityError);

  const std::string orig_with_ref =
      R"({"id":"o3","title":"t","artist":"a","lyrics":"x","role":"original","original_id":"o1"})";
  CHECK_THROWS_WITH_AS(from_jsonl(orig_with_ref), doctest::Contains("o3"),
                       IntegrityError);
}

TEST_CASE("parse errors carry line numbers") {
  const std::string bad = "{\"id\":\"o1\"\nnot json\n";
  try {
    from_jsonl(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() >= 1);
  }
}

TEST_CASE("jsonl serialize-ingest round trip is byte stable") {
  const Corpus c = from_jsonl(kSmallJsonl);
  const std::string once = round_trip(c, CorpusFormat::JsonLines);
  std::istringstream in(once);
  const Corpus again = ingest_stream(in, CorpusFormat::JsonLines);
  CHECK(again.records == c.records);
  CHECK(round_trip(again, CorpusFormat::JsonLines) == once);
}

TEST_CASE("csv round trip preserves embedded newlines and quotes") {
  Corpus c;
  {
    std::vector<SongRecord> recs;
    SongRecord o;
    o.id = "o1";
    o.title = "a, \"quoted\" title";
    o.artist = "band";
    o.lyrics = "line one\nline two, with comma\n\"and quotes\"";
    o.role = Role::Original;
    recs.push_back(o);
    SongRecord v;
    v.id = "c1";
    v.title = "cover";
    v.artist = "other";
    v.lyrics = "line one\nline two";
    v.role = Role::Cover;
    v.original_id = "o1";
    v.language = "en";
    recs.push_back(v);
    c = finalize_corpus(std::move(recs));
  }
  const std::string csv = round_trip(c, CorpusFormat::Csv);
  std::istringstream in(csv);
  const Corpus back = ingest_stream(in, CorpusFormat::Csv);
  CHECK(back.records == c.records);
  CHECK(round_trip(back, CorpusFormat::Csv) == csv);
}

TEST_CASE("csv header may reorder columns") {
  const std::string csv =
      "role,id,lyrics,artist,title,original_id,language\n"
      "original,o1,\"a b\",art,ttl,,\n"
      "cover,c1,\"a b c\",art2,ttl,o1,en\n";
  std::istringstream in(csv);
  const Corpus c = ingest_stream(in, CorpusFormat::Csv);
  CHECK(c.records.size() == 2);
  CHECK(c.records[1].original_id == std::optional<std::string>("o1"));
}

TEST_CASE("synthetic corpus round trips through both formats") {
  testsupport::SyntheticSpec spec;
  spec.n_groups = 12;
  const Corpus c = testsupport::make_synthetic_corpus(spec);
  for (const CorpusFormat f : {CorpusFormat::JsonLines, CorpusFormat::Csv}) {
    const std::string once = round_trip(c, f);
    std::istringstream in(once);
    const Corpus back = ingest_stream(in, f);
    REQUIRE(back.records == c.records);
    REQUIRE(round_trip(back, f) == once);
  }
}

TEST_CASE("corpus_stats on identity covers") {
  const std::string jsonl =
      R"({"id":"o1","title":"t","artist":"a","lyrics":"alpha beta gamma","role":"original"}
{"id":"o2","title":"t","artist":"a","lyrics":"delta epsilon zeta","role":"original"}
{"id":"c1","title":"t","artist":"b","lyrics":"alpha beta gamma","role":"cover","original_id":"o1"})";
  const Corpus c = from_jsonl(jsonl);
  const CorpusStats s = corpus_stats(c, DistanceMetric::Levenshtein, {});
  CHECK(s.mean_matched == 0.0);
  CHECK(s.confusion_fraction == 0.0);
  CHECK(s.matched_pairs == 1);
  CHECK(s.unmatched_pairs == 1);

  const std::size_t expect = reference::levenshtein_dp(
      std::string_view("alpha beta gamma"), std::string_view("delta epsilon zeta"));
  CHECK(s.mean_unmatched == doctest::Approx(static_cast<double>(expect)));
}

TEST_CASE("corpus_stats two-original worked example") {
  const std::string jsonl =
      R"({"id":"o1","title":"t","artist":"a","lyrics":"a b","role":"original"}
{"id":"o2","title":"t","artist":"a","lyrics":"c d","role":"original"}
{"id":"c1","title":"t","artist":"b","lyrics":"a b","role":"cover","original_id":"o1"})";
  const CorpusStats s =
      corpus_stats(from_jsonl(jsonl), DistanceMetric::Levenshtein, {});
  CHECK(s.mean_matched == 0.0);
  CHECK(s.mean_unmatched ==
        doctest::Approx(static_cast<double>(reference::levenshtein_dp(
            std::string_view("a b"), std::string_view("c d")))));
  CHECK(s.confusion_fraction == 0.0);
  CHECK(s.min_unmatched_mean == s.mean_unmatched);
}

TEST_CASE("corpus_stats pair counts and histogram totals") {
  testsupport::SyntheticSpec spec;
  spec.n_groups = 8;
  const Corpus c = testsupport::make_synthetic_corpus(spec);
  const CorpusStats s = corpus_stats(c, DistanceMetric::Levenshtein, {});

  CHECK(s.matched_pairs == c.n_covers());
  CHECK(s.unmatched_pairs == c.n_covers() * (c.n_originals() - 1));
  CHECK(std::accumulate(s.matched_histogram.begin(), s.matched_histogram.end(),
                        std::uint64_t{0}) == s.matched_pairs);
  CHECK(std::accumulate(s.unmatched_histogram.begin(),
                        s.unmatched_histogram.end(),
                        std::uint64_t{0}) == s.unmatched_pairs);
  CHECK(s.matched_histogram.size() == kStatsBins);
  CHECK(s.unmatched_histogram.size() == kStatsBins);
  CHECK(s.confusion_fraction >= 0.0);
  CHECK(s.confusion_fraction <= 1.0);
}

TEST_CASE("corpus_stats skips degenerate wer references") {
  const std::string jsonl =
      R"({"id":"o1","title":"t","artist":"a","lyrics":"a b c","role":"original"}
{"id":"o2","title":"t","artist":"a","lyrics":"???","role":"original"}
{"id":"c1","title":"t","artist":"b","lyrics":"a b c","role":"cover","original_id":"o1"})";
  const CorpusStats s = corpus_stats(from_jsonl(jsonl), DistanceMetric::Wer, {});
  CHECK(s.matched_pairs == 1);
  CHECK(s.mean_matched == 0.0);
  CHECK(s.unmatched_pairs == 0);
  CHECK(s.skipped_pairs == 1);
}

TEST_CASE("corpus_stats preconditions") {
  const std::string no_covers =
      R"({"id":"o1","title":"t","artist":"a","lyrics":"x","role":"original"}
{"id":"o2","title":"t","artist":"a","lyrics":"y","role":"original"})";
  CHECK_THROWS_AS(corpus_stats(from_jsonl(no_covers), DistanceMetric::Levenshtein, {}),
                  InsufficientCorpus);

  const std::string one_original =
      R"({"id":"o1","title":"t","artist":"a","lyrics":"x","role":"original"}
{"id":"c1","title":"t","artist":"b","lyrics":"x","role":"cover","original_id":"o1"})";
  CHECK_THROWS_AS(corpus_stats(from_jsonl(one_original), DistanceMetric::Levenshtein, {}),
                  InsufficientCorpus);
}
