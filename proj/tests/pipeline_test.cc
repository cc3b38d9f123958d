#include "rqa/pipeline.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "rqa/error.h"
#include "test_util.h"

namespace rqa {
namespace {

namespace fs = std::filesystem;
using testing::ReadFile;

const std::string kReviews = std::string(RQA_DATA_DIR) + "/toy/reviews.jsonl";

TrainConfig SmallConfig() {
  TrainConfig c;
  c.hidden_dim = c.embedding_dim = c.attention_dim = 8;
  c.classifier_hidden = c.classifier_embedding = 8;
  c.classifier_epochs = 1;
  c.epochs = 2;
  c.max_steps = 6;
  c.batch_size = 4;
  c.learning_rate = 0.01;
  c.beam = 2;
  c.max_decode_len = 5;
  c.seed = 3;
  return c;
}

// Snapshot of every file under `dir`: relative path -> bytes.
std::map<std::string, std::string> Snapshot(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = ReadFile(e.path());
  }
  return out;
}

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = std::make_unique<testing::TempDir>();
    std::ostringstream log;
    summary_ = RunPreprocess(kReviews, Data(), SmallConfig(), PosLexicon::Default(), log);
    RunPretrain(Data(), Classifier(), SmallConfig(), log);
    RunTrain(Data(), Run(), SmallConfig(), Classifier(), log);
  }
  static void TearDownTestSuite() { dir_.reset(); }

  static std::string Data() { return dir_->File("data"); }
  static std::string Run() { return dir_->File("run"); }
  static std::string Classifier() { return dir_->File("classifier.ckpt"); }
  static std::string FirstItem() {
    std::istringstream in(ReadFile(DataPaths{Data()}.items()));
    std::string line;
    std::getline(in, line);
    return nlohmann::json::parse(line).at("item").get<std::string>();
  }

  static std::unique_ptr<testing::TempDir> dir_;
  static PreprocessSummary summary_;
};

std::unique_ptr<testing::TempDir> PipelineTest::dir_;
PreprocessSummary PipelineTest::summary_;

TEST_F(PipelineTest, PreprocessOutputs) {
  EXPECT_EQ(summary_.items, 50u);
  EXPECT_GT(summary_.vocab_size, 20u);
  EXPECT_GT(summary_.train_examples, summary_.test_examples);
  EXPECT_GT(summary_.test_examples, 0u);
  const DataPaths p{Data()};
  for (const std::string& f : {p.vocab(), p.items(), p.config(), p.shard("train"),
                               p.shard("valid"), p.shard("test")}) {
    EXPECT_TRUE(fs::exists(f)) << f;
  }
  for (const char* f : {"model.ckpt", "last.ckpt", "train_log.jsonl"}) {
    EXPECT_TRUE(fs::exists(Run() + "/" + f)) << f;
  }
  const Checkpoint cls = ReadCheckpoint(Classifier());
  EXPECT_EQ(cls.metadata.at("kind"), "classifier");
}

TEST_F(PipelineTest, PreprocessIsByteDeterministic) {
  testing::TempDir other;
  std::ostringstream log;
  RunPreprocess(kReviews, other.path(), SmallConfig(), PosLexicon::Default(), log);
  EXPECT_EQ(Snapshot(other.path()), Snapshot(Data()));
}

TEST_F(PipelineTest, TrainingIsByteDeterministic) {
  testing::TempDir other;
  std::ostringstream log;
  RunTrain(Data(), other.path(), SmallConfig(), Classifier(), log);
  EXPECT_EQ(Snapshot(other.path()), Snapshot(Run()));
}

TEST_F(PipelineTest, TrainNeedsClassifierUnlessDisabled) {
  testing::TempDir other;
  std::ostringstream log;
  EXPECT_THROW(RunTrain(Data(), other.path(), SmallConfig(), "", log), ContractViolation);
  TrainConfig gen_only = SmallConfig();
  gen_only.lambda = 1.0;
  gen_only.max_steps = 1;
  EXPECT_NO_THROW(RunTrain(Data(), other.path(), gen_only, "", log));
}

TEST_F(PipelineTest, GenerateIsDeterministicAndReadOnly) {
  const auto before = Snapshot(dir_->path());
  GenerateRequest req;
  req.model_path = Run() + "/model.ckpt";
  req.data_dir = Data();
  req.item_id = FirstItem();
  req.question = "How is the fabric quality of this dress?";
  req.rating = 5;
  const GenerateResult a = RunGenerate(req, PosLexicon::Default());
  const GenerateResult b = RunGenerate(req, PosLexicon::Default());
  EXPECT_EQ(a.answer, b.answer);
  EXPECT_EQ(a.token_ids, b.token_ids);
  EXPECT_FALSE(a.snippets.empty());
  EXPECT_TRUE(a.warnings.empty());
  EXPECT_LE(a.token_ids.size(), 5u);
  EXPECT_NE(a.config.find("beam=2"), std::string::npos);

  req.rating.reset();  // PAD path
  EXPECT_NO_THROW(RunGenerate(req, PosLexicon::Default()));
  req.question = "is it ok ?";
  const GenerateResult bare = RunGenerate(req, PosLexicon::Default());
  EXPECT_TRUE(bare.snippets.empty());
  EXPECT_EQ(bare.warnings.size(), 1u);
  req.beam = 3;
  req.seed = 99;
  EXPECT_NE(RunGenerate(req, PosLexicon::Default()).config.find("seed=99"), std::string::npos);
  EXPECT_EQ(Snapshot(dir_->path()), before);
}

TEST_F(PipelineTest, GenerateErrors) {
  GenerateRequest req;
  req.model_path = Run() + "/model.ckpt";
  req.data_dir = Data();
  req.item_id = FirstItem() + "x";
  req.question = "does it fit?";
  try {
    RunGenerate(req, PosLexicon::Default());
    FAIL() << "expected an unknown-item error";
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find(FirstItem()), std::string::npos) << e.what();
  }

  // A data directory with a different vocabulary is refused.
  testing::TempDir other;
  TrainConfig c = SmallConfig();
  c.min_freq = 50;
  std::ostringstream log;
  RunPreprocess(kReviews, other.path(), c, PosLexicon::Default(), log);
  req.item_id = FirstItem();
  req.data_dir = other.path();
  EXPECT_THROW(RunGenerate(req, PosLexicon::Default()), FormatError);
}

TEST_F(PipelineTest, EvaluateBaselinesAndModels) {
  std::ostringstream log;
  const EvalReport base =
      RunEvaluate(Data(), {"random", "nn-rating"}, {}, SmallConfig(), "test", log);
  ASSERT_EQ(base.systems.size(), 2u);
  EXPECT_EQ(base.systems[0].name, "Random");
  EXPECT_EQ(base.systems[1].name, "NN-rating");
  EXPECT_GT(base.systems[0].scores[0], 0.0);

  const std::map<std::string, std::string> models{{"ours", Run() + "/model.ckpt"}};
  const EvalReport full =
      RunEvaluate(Data(), {"ours", "random"}, models, SmallConfig(), "test", log);
  ASSERT_EQ(full.systems.size(), 2u);
  EXPECT_EQ(full.systems[1].name, "Ours");
  EXPECT_EQ(full.systems[1].failures, 0u);

  EXPECT_THROW(RunEvaluate(Data(), {"ours"}, {}, SmallConfig(), "test", log),
               ContractViolation);
  const std::map<std::string, std::string> wrong{{"seq2seq", Run() + "/model.ckpt"}};
  EXPECT_THROW(RunEvaluate(Data(), {"seq2seq"}, wrong, SmallConfig(), "test", log),
               FormatError);
  EXPECT_THROW(RunEvaluate(Data(), {"gpt"}, {}, SmallConfig(), "test", log), ContractViolation);
}

TEST(NearestKeysTest, OrdersByEditDistance) {
  const std::vector<std::string> keys{"B00X1", "B00X2", "C99", "B00Y1", "ZZZZZZ"};
  const std::vector<std::string> near = NearestKeys(keys, "B00X9", 3);
  EXPECT_EQ(near, (std::vector<std::string>{"B00X1", "B00X2", "B00Y1"}));
  EXPECT_EQ(NearestKeys(keys, "q", 10).size(), keys.size());
}

// ---- the command-line binary ----

int RunCli(const std::string& args, const std::string& out_file) {
  const std::string cmd = std::string(RQA_CLI_PATH) + " " + args + " >" + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(PipelineTest, CliExitCodes) {
  testing::TempDir t;
  const std::string out = t.File("out.txt");
  EXPECT_EQ(RunCli("--help", out), 0);
  EXPECT_EQ(RunCli("", out), 2);
  EXPECT_EQ(RunCli("preprocess --out " + t.path(), out), 2);
  EXPECT_NE(ReadFile(out).find("--data"), std::string::npos);
  EXPECT_EQ(RunCli("evaluate --data " + Data() + " --bogus 1", out), 2);
  EXPECT_EQ(RunCli("generate --model x --data " + Data() + " --item i --question q --rating 7",
                   out),
            2);
  EXPECT_EQ(RunCli("evaluate --data " + Data() + " --set nonsense=1", out), 5);
  EXPECT_EQ(RunCli("evaluate --data " + t.File("missing"), out), 4);
  EXPECT_EQ(RunCli("generate --model " + Run() + "/model.ckpt --data " + Data() +
                       " --item nope --question 'does it fit?'",
                   out),
            3);
  EXPECT_NE(ReadFile(out).find("nearest"), std::string::npos);
}

TEST_F(PipelineTest, CliEvaluateWithoutCheckpoint) {
  testing::TempDir t;
  const std::string out = t.File("out.txt");
  ASSERT_EQ(RunCli("evaluate --data " + Data() + " --systems random,nn-rating --seed 3 --out " +
                       t.File("eval"),
                   out),
            0)
      << ReadFile(out);
  const std::string text = ReadFile(out);
  EXPECT_NE(text.find("resolved config"), std::string::npos);
  EXPECT_NE(text.find("NN-rating"), std::string::npos);
  EXPECT_TRUE(fs::exists(t.File("eval/table.txt")));
  EXPECT_TRUE(fs::exists(t.File("eval/metrics.jsonl")));
}

TEST_F(PipelineTest, CliGenerateTwiceIsIdentical) {
  testing::TempDir t;
  const std::string args = "generate --model " + Run() + "/model.ckpt --data " + Data() +
                           " --item " + FirstItem() +
                           " --question 'How does the zipper hold up?' --rating 4";
  ASSERT_EQ(RunCli(args, t.File("a.txt")), 0) << ReadFile(t.File("a.txt"));
  ASSERT_EQ(RunCli(args, t.File("b.txt")), 0);
  EXPECT_EQ(ReadFile(t.File("a.txt")), ReadFile(t.File("b.txt")));
  EXPECT_NE(ReadFile(t.File("a.txt")).find("answer:"), std::string::npos);
}

}  // namespace
}  // namespace rqa
