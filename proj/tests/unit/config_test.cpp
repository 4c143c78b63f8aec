#include <gtest/gtest.h>

#include "meder/config.hpp"
#include "test_util.hpp"

namespace meder {
namespace {

TEST(RunConfig, TextRoundTripOfDefaults) {
  const RunConfig c;
  EXPECT_EQ(RunConfig::parse(c.to_text()), c);
  EXPECT_EQ(RunConfig::parse(c.to_text()).to_text(), c.to_text());
}

TEST(RunConfig, TextRoundTripAfterEdits) {
  RunConfig c;
  c.corpus = "some dir/corpus.jsonl";
  c.train_frac = Fraction(7, 10);
  c.val_frac = Fraction(3, 20);
  c.test_frac = Fraction(3, 20);
  c.model.dropout = 0.125;
  c.train.learning_rate = 2e-4;
  c.train.stop_on_perfect_train = true;
  c.declared_total = 6895;
  c.order = "entity-first";
  const RunConfig back = RunConfig::parse(c.to_text());
  EXPECT_EQ(back, c);
  EXPECT_EQ(back.train.learning_rate, 2e-4);
  EXPECT_EQ(back.declared_total, 6895u);
  EXPECT_EQ(back.val_frac, Fraction(3, 20));
}

TEST(RunConfig, EveryKeyIsWritten) {
  const std::string text = RunConfig().to_text();
  for (const auto& k : RunConfig::keys()) EXPECT_NE(text.find(k + " = "), std::string::npos) << k;
}

TEST(RunConfig, CommentsBlankLinesAndSpacing) {
  const auto c = RunConfig::parse("# comment\n\n  epochs=7  \r\nlr = 0.5\n");
  EXPECT_EQ(c.train.epochs, 7u);
  EXPECT_EQ(c.train.learning_rate, 0.5);
}

TEST(RunConfig, ErrorsNameTheLine) {
  try {
    RunConfig::parse("epochs = 3\nbogus = 1\n");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(RunConfig::parse("epochs\n"), UsageError);
  EXPECT_THROW(RunConfig::parse("epochs = -1\n"), UsageError);
  EXPECT_THROW(RunConfig::parse("stratified = maybe\n"), UsageError);
  EXPECT_THROW(RunConfig::parse("lr = fast\n"), UsageError);
}

TEST(RunConfig, ValidateRejectsBadChoices) {
  RunConfig c;
  c.order = "sideways";
  EXPECT_THROW(c.validate(), UsageError);
  c = RunConfig();
  c.eval_split = "dev";
  EXPECT_THROW(c.validate(), UsageError);
  c = RunConfig();
  c.train_frac = Fraction(9, 10);
  EXPECT_THROW(c.validate(), UsageError);
  EXPECT_NO_THROW(RunConfig().validate());
}

TEST(RunConfig, SampleConfigLoads) {
  const auto c = RunConfig::load(testing::repo_path("sample/sample.conf"));
  EXPECT_EQ(c.model.d_model, 32u);
  EXPECT_EQ(c.model.n_heads, 4u);
  EXPECT_EQ(c.vocab_size, 300u);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_THROW(RunConfig::load("/nonexistent/x.conf"), DataError);
}

}  // namespace
}  // namespace meder
