#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "meder/corpus.hpp"
#include "test_util.hpp"

namespace meder {
namespace {

using testing::record;

LoadedCorpus parse(const std::string& text, const LabelSet& labels = LabelSet::defaults()) {
  std::istringstream in(text);
  return read_corpus(in, labels);
}

TEST(Corpus, LineMapsToRecordWithLabelId) {
  const auto c = parse(R"({"id":"r1","text":"রোগীর জ্বর হয়েছে","entity":"জ্বর","label":"Disease"})" "\n");
  ASSERT_EQ(c.records.size(), 1u);
  EXPECT_EQ(c.records[0].id, "r1");
  EXPECT_EQ(c.records[0].entity, "জ্বর");
  EXPECT_EQ(c.records[0].label_id, 2);
  EXPECT_EQ(c.entity_not_in_text, 0u);
}

TEST(Corpus, UnknownLabelIsRejected) {
  EXPECT_THROW(parse(R"({"id":"r1","text":"t","entity":"e","label":"Diseases"})"), DataError);
}

TEST(Corpus, RejectsUnknownFieldMissingFieldAndDuplicates) {
  EXPECT_THROW(parse(R"({"id":"r1","text":"t","entity":"e","label":"Organ","x":"1"})"), DataError);
  EXPECT_THROW(parse(R"({"id":"r1","text":"t","label":"Organ"})"), DataError);
  EXPECT_THROW(parse(R"({"id":"r1","text":"t","entity":"e","label":3})"), DataError);
  EXPECT_THROW(parse(R"({"id":"r1","text":"","entity":"e","label":"Organ"})"), DataError);
  EXPECT_THROW(parse("{not json"), DataError);
  const std::string line = R"({"id":"r1","text":"t e","entity":"e","label":"Organ"})";
  EXPECT_THROW(parse(line + "\n" + line + "\n"), DataError);
}

TEST(Corpus, ErrorsNameTheLine) {
  try {
    parse(R"({"id":"a","text":"t","entity":"t","label":"Organ"})" "\n\n" R"({"id":"b","text":"t"})");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Corpus, EntityOutsideTextIsCountedNotFatal) {
  const auto c = parse(R"({"id":"a","text":"abc","entity":"zz","label":"Organ"})");
  EXPECT_EQ(c.records.size(), 1u);
  EXPECT_EQ(c.entity_not_in_text, 1u);
}

TEST(Corpus, TextIsNfcNormalized) {
  const auto c = parse("{\"id\":\"a\",\"text\":\"ো x\",\"entity\":\"x\",\"label\":\"Organ\"}");
  EXPECT_EQ(c.records[0].text, "ো x");
}

TEST(Corpus, WriteThenReadRoundTrips) {
  const auto sample = load_corpus(testing::repo_path("sample/corpus.jsonl"), LabelSet::defaults());
  std::ostringstream out;
  write_corpus(out, sample.records);
  EXPECT_EQ(parse(out.str()).records, sample.records);
}

TEST(Corpus, LabelFileMatchesDefaults) {
  EXPECT_EQ(LabelSet::load(testing::repo_path("labels.txt")), LabelSet::defaults());
  EXPECT_THROW(LabelSet({"a", "a"}), DataError);
}

TEST(Split, TenRecordsGiveEightOneOne) {
  std::vector<RawRecord> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(record("r" + std::to_string(i), i % 6));
  SplitSpec spec;
  spec.stratified = false;
  const Splits a = split(rs, spec), b = split(rs, spec);
  EXPECT_EQ(a.train.size(), 8u);
  EXPECT_EQ(a.val.size(), 1u);
  EXPECT_EQ(a.test.size(), 1u);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
}

TEST(Split, EmptyTrainIsAnError) {
  std::vector<RawRecord> rs{record("a", 0), record("b", 1)};
  SplitSpec spec{Fraction(0), Fraction(1, 2), Fraction(1, 2), 42, true};
  EXPECT_THROW(split(rs, spec), UsageError);
  EXPECT_THROW(split({}, SplitSpec{}), DataError);
  EXPECT_THROW(split(rs, SplitSpec{Fraction(1, 2), Fraction(1, 2), Fraction(1, 2), 42, true}), UsageError);
}

TEST(Split, StratifiedSixtyRecords) {
  std::vector<RawRecord> rs;
  for (int label = 0; label < 6; ++label)
    for (int k = 0; k < 10; ++k) rs.push_back(record("l" + std::to_string(label) + "_" + std::to_string(k), label));
  const Splits s = split(rs, SplitSpec{Fraction(1, 2), Fraction(1, 4), Fraction(1, 4), 42, true});
  for (int label = 0; label < 6; ++label) {
    auto count = [&](const std::vector<RawRecord>& part) {
      return std::count_if(part.begin(), part.end(), [&](const RawRecord& r) { return r.label_id == label; });
    };
    EXPECT_EQ(count(s.train), 5);
    EXPECT_GE(count(s.val), 2);
    EXPECT_LE(count(s.val), 3);
    EXPECT_GE(count(s.test), 2);
    EXPECT_LE(count(s.test), 3);
  }
}

TEST(Split, FrozenFingerprintsOfTheSampleCorpus) {
  const auto c = load_corpus(testing::repo_path("sample/corpus.jsonl"), LabelSet::defaults());
  const Splits s = split(c.records, SplitSpec{});
  EXPECT_EQ(s.train.size(), 96u);
  EXPECT_EQ(s.val.size(), 12u);
  EXPECT_EQ(s.test.size(), 12u);
  EXPECT_EQ(fingerprint_hex(fingerprint(s.train)), "7d68f3c95fbdd917");
  EXPECT_EQ(fingerprint_hex(fingerprint(s.val)), "d9f12eeec522d370");
  EXPECT_EQ(fingerprint_hex(fingerprint(s.test)), "0328f5832829e085");
}

// Random corpora up to 500 records and 8 labels: partition, coverage and the
// one-record proportion bound.
TEST(SplitProperty, StratifiedPartitionAndProportionBound) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_labels = 1 + rng.below(8);
    const std::size_t n = 1 + rng.below(500);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n_labels; ++i) names.push_back("L" + std::to_string(i));
    const LabelSet labels(names);
    std::vector<RawRecord> rs;
    for (std::size_t i = 0; i < n; ++i)
      rs.push_back(record("r" + std::to_string(i), static_cast<int>(rng.below(n_labels)), labels));
    const std::int64_t val_pct = static_cast<std::int64_t>(rng.below(30));
    const std::int64_t test_pct = static_cast<std::int64_t>(rng.below(30));
    const SplitSpec spec{Fraction(100 - val_pct - test_pct, 100), Fraction(val_pct, 100), Fraction(test_pct, 100),
                         rng.next(), true};
    Splits s;
    try {
      s = split(rs, spec);
    } catch (const UsageError&) {
      continue;
    }
    std::map<std::string, int> seen;
    for (const auto* part : {&s.train, &s.val, &s.test})
      for (const auto& r : *part) ++seen[r.id];
    ASSERT_EQ(seen.size(), n);
    for (const auto& [id, k] : seen) ASSERT_EQ(k, 1) << id;

    const std::array<Fraction, 3> fracs{spec.train_frac, spec.val_frac, spec.test_frac};
    const std::array<const std::vector<RawRecord>*, 3> parts{&s.train, &s.val, &s.test};
    for (std::size_t label = 0; label < n_labels; ++label) {
      const auto total = std::count_if(rs.begin(), rs.end(), [&](const RawRecord& r) {
        return r.label_id == static_cast<int>(label);
      });
      for (int p = 0; p < 3; ++p) {
        const auto got = std::count_if(parts[p]->begin(), parts[p]->end(), [&](const RawRecord& r) {
          return r.label_id == static_cast<int>(label);
        });
        const Fraction diff = Fraction(got) - fracs[p] * Fraction(total);
        ASSERT_LT(boost::abs(diff), Fraction(1)) << "trial " << trial << " label " << label << " split " << p;
      }
    }
  }
}

TEST(SplitProperty, RepeatedRunsAreIdentical) {
  const auto c = load_corpus(testing::repo_path("sample/corpus.jsonl"), LabelSet::defaults());
  for (bool stratified : {true, false}) {
    SplitSpec spec;
    spec.stratified = stratified;
    spec.seed = 7;
    const Splits a = split(c.records, spec), b = split(c.records, spec);
    EXPECT_EQ(fingerprint(a.train), fingerprint(b.train));
    EXPECT_EQ(fingerprint(a.test), fingerprint(b.test));
  }
}

TEST(ClassStats, EmptyListIsAllZero) {
  const auto s = class_stats({}, 6);
  EXPECT_EQ(s.counts, std::vector<std::size_t>(6, 0));
  EXPECT_EQ(s.total, 0u);
}

TEST(ClassStats, SampleCorpusCounts) {
  const auto c = load_corpus(testing::repo_path("sample/corpus.jsonl"), LabelSet::defaults());
  const auto s = class_stats(c.records, 6);
  EXPECT_EQ(s.counts, (std::vector<std::size_t>{30, 22, 20, 18, 16, 14}));
  EXPECT_EQ(s.total, 120u);
  EXPECT_EQ(c.entity_not_in_text, 0u);
}

TEST(ClassStats, PublishedCountsSumAndDiscrepancyWarning) {
  std::size_t sum = 0;
  for (auto v : kPublishedCounts) sum += v;
  EXPECT_EQ(sum, 6913u);

  ClassStats s{{kPublishedCounts.begin(), kPublishedCounts.end()}, sum};
  const auto w = stats_warnings(s, LabelSet::defaults(), std::nullopt);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].find("6913"), std::string::npos);
  EXPECT_NE(w[0].find("6895"), std::string::npos);
  EXPECT_TRUE(stats_warnings(s, LabelSet::defaults(), 6913).empty());
}

TEST(Fraction, ParsesDecimalAndRatio) {
  EXPECT_EQ(parse_fraction("0.8"), Fraction(4, 5));
  EXPECT_EQ(parse_fraction("1/10"), Fraction(1, 10));
  EXPECT_EQ(parse_fraction("1"), Fraction(1));
  EXPECT_THROW(parse_fraction("-0.1"), UsageError);
  EXPECT_THROW(parse_fraction("1/0"), UsageError);
  EXPECT_THROW(parse_fraction("abc"), UsageError);
}

}  // namespace
}  // namespace meder
