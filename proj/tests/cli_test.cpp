// End-to-end tests against the built command-line binary: exit codes, the
// staged training pipeline, output formats, config files, and determinism.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty()) out.push_back(line);
    return out;
}

class CliTest : public ::testing::Test {
protected:
    static fs::path dir;

    static CmdResult run(const std::string& args, const std::string& stdin_text = "") {
        fs::path out = dir / "cmd_out.txt";
        fs::path err = dir / "cmd_err.txt";
        std::string cmd = std::string(DVERG_CLI_PATH) + " " + args;
        if (!stdin_text.empty()) {
            fs::path in = dir / "cmd_in.txt";
            std::ofstream(in) << stdin_text;
            cmd += " < " + in.string();
        } else {
            cmd += " < /dev/null";
        }
        cmd += " > " + out.string() + " 2> " + err.string();
        int rc = std::system(cmd.c_str());
        return {WEXITSTATUS(rc), slurp(out), slurp(err)};
    }

    static std::string path(const std::string& name) { return (dir / name).string(); }

    // Shared artifacts built once: a finetuned checkpoint over a 4-template ×
    // 4-emotion corpus, plus an untouched stage-1 copy.
    static void SetUpTestSuite() {
        dir = fs::temp_directory_path() / "dverg_cli_test";
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream(dir / "tax4.txt") << "non-emotional\nsatisfied\naggrieved\nregretful\n";
        ASSERT_EQ(run("synth --templates 4 --emotions 4 --taxonomy " + path("tax4.txt") +
                      " --out " + path("corpus.jsonl"))
                      .exit_code,
                  0);
        ASSERT_EQ(run("train-s2s --corpus " + path("corpus.jsonl") + " --out " + path("ckpt") +
                      " --taxonomy " + path("tax4.txt") +
                      " --hidden 24 --embedding-dim 16 --emotion-dim 8 --epochs 40 --lr 0.05 "
                      "--seed 7")
                      .exit_code,
                  0);
        fs::copy(dir / "ckpt", dir / "ckpt_s2s",
                 fs::copy_options::recursive | fs::copy_options::overwrite_existing);
        ASSERT_EQ(run("train-classifier --checkpoint " + path("ckpt") + " --corpus " +
                      path("corpus.jsonl") + " --epochs 40 --lr 0.05")
                      .exit_code,
                  0);
        ASSERT_EQ(run("train-vocab --checkpoint " + path("ckpt") + " --corpus " +
                      path("corpus.jsonl") + " --epochs 60 --lr 0.02")
                      .exit_code,
                  0);
        fs::copy(dir / "ckpt", dir / "ckpt_vocab",
                 fs::copy_options::recursive | fs::copy_options::overwrite_existing);
        ASSERT_EQ(run("finetune --checkpoint " + path("ckpt") + " --corpus " +
                      path("corpus.jsonl") + " --mode ft-both --epochs 2 --lr 0.002")
                      .exit_code,
                  0);
        std::ofstream(dir / "questions.txt")
            << "q0a q0b q0c cue0 ?\nq1a q1b q1c cue1 ?\nq2a q2b q2c cue2 ?\n";
    }

    static void TearDownTestSuite() { fs::remove_all(dir); }
};

fs::path CliTest::dir;

TEST_F(CliTest, HelpAndVersionExitZero) {
    EXPECT_EQ(run("--help").exit_code, 0);
    auto v = run("--version");
    EXPECT_EQ(v.exit_code, 0);
    EXPECT_NE(v.out.find("dverg"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").exit_code, 2);                  // missing subcommand
    EXPECT_EQ(run("generate --bogus").exit_code, 2);  // unknown flag
    EXPECT_EQ(run("no-such-command").exit_code, 2);
    auto r = run("generate --checkpoint " + path("nowhere") + " --questions " +
                 path("questions.txt"));
    EXPECT_EQ(r.exit_code, 2);  // missing path is a config error
    EXPECT_NE(r.err.find("nowhere"), std::string::npos);
}

TEST_F(CliTest, MalformedCorpusExitsThree) {
    std::ofstream(dir / "bad.jsonl") << "not json\n";
    auto r = run("train-s2s --corpus " + path("bad.jsonl") + " --out " + path("ck_bad"));
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_NE(r.err.find("line 1"), std::string::npos);
}

TEST_F(CliTest, PipelineRecordsStages) {
    auto meta_stage = [&](const std::string& ck) {
        return nlohmann::json::parse(slurp(dir / ck / "meta.json")).at("stage").get<std::string>();
    };
    EXPECT_EQ(meta_stage("ckpt_s2s"), "s2s");
    EXPECT_EQ(meta_stage("ckpt_vocab"), "vocab");
    EXPECT_EQ(meta_stage("ckpt"), "finetuned");
}

TEST_F(CliTest, StagePrerequisiteNamesRequiredStage) {
    auto ft = run("finetune --checkpoint " + path("ckpt_s2s") + " --corpus " +
                  path("corpus.jsonl") + " --mode ft-both");
    EXPECT_EQ(ft.exit_code, 3);
    EXPECT_NE(ft.err.find("'vocab'"), std::string::npos);

    auto gen = run("generate --checkpoint " + path("ckpt_s2s") + " --questions " +
                   path("questions.txt"));
    EXPECT_EQ(gen.exit_code, 3);
    EXPECT_NE(gen.err.find("'vocab'"), std::string::npos);

    // static decoding never needs the predictor stage
    EXPECT_EQ(run("generate --checkpoint " + path("ckpt_s2s") + " --questions " +
                  path("questions.txt") + " --static --out " + path("static_gen.jsonl"))
                  .exit_code,
              0);
}

TEST_F(CliTest, FinetuneNoFtKeepsParametersByteIdentical) {
    auto r = run("finetune --checkpoint " + path("ckpt_vocab") + " --corpus " +
                 path("corpus.jsonl") + " --mode no-ft --out " + path("ckpt_noft"));
    ASSERT_EQ(r.exit_code, 0);
    EXPECT_EQ(slurp(dir / "ckpt_noft" / "params.bin"), slurp(dir / "ckpt_vocab" / "params.bin"));
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "ckpt_noft" / "meta.json")).at("stage"),
              "finetuned");
}

TEST_F(CliTest, GenerateEmitsJsonlWithAllFields) {
    auto r = run("generate --checkpoint " + path("ckpt") + " --questions " +
                 path("questions.txt") + " --seed 5 --out -");
    ASSERT_EQ(r.exit_code, 0);
    auto out_lines = lines_of(r.out);
    ASSERT_EQ(out_lines.size(), 3u);
    for (const auto& line : out_lines) {
        auto j = nlohmann::json::parse(line);
        for (const char* key :
             {"question", "question_emotion", "chosen_emotion", "response", "voc_size"})
            EXPECT_TRUE(j.contains(key)) << key;
        EXPECT_GT(j.at("voc_size").get<int>(), 0);
    }
    // distinct cue words land on distinct classified emotions
    EXPECT_EQ(nlohmann::json::parse(out_lines[0]).at("question_emotion"), "non-emotional");
    EXPECT_EQ(nlohmann::json::parse(out_lines[1]).at("question_emotion"), "satisfied");
}

TEST_F(CliTest, EmotionOverrideForcesChosenEmotion) {
    auto r = run("generate --checkpoint " + path("ckpt") + " --questions " +
                 path("questions.txt") + " --emotion-override regretful --out -");
    ASSERT_EQ(r.exit_code, 0);
    for (const auto& line : lines_of(r.out))
        EXPECT_EQ(nlohmann::json::parse(line).at("chosen_emotion"), "regretful");
}

TEST_F(CliTest, GenerateRerunIsByteIdentical) {
    std::string cmd = "generate --checkpoint " + path("ckpt") + " --questions " +
                      path("questions.txt") + " --seed 9 --out ";
    ASSERT_EQ(run(cmd + path("g1.jsonl")).exit_code, 0);
    ASSERT_EQ(run(cmd + path("g2.jsonl")).exit_code, 0);
    std::string a = slurp(dir / "g1.jsonl");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir / "g2.jsonl"));
}

TEST_F(CliTest, TrainRerunProducesByteIdenticalCheckpoint) {
    std::string base = "train-s2s --corpus " + path("corpus.jsonl") + " --taxonomy " +
                       path("tax4.txt") +
                       " --hidden 8 --embedding-dim 8 --emotion-dim 4 --epochs 3 --seed 11 "
                       "--out ";
    ASSERT_EQ(run(base + path("ck_r1")).exit_code, 0);
    ASSERT_EQ(run(base + path("ck_r2")).exit_code, 0);
    EXPECT_EQ(slurp(dir / "ck_r1" / "params.bin"), slurp(dir / "ck_r2" / "params.bin"));
    EXPECT_EQ(slurp(dir / "ck_r1" / "meta.json"), slurp(dir / "ck_r2" / "meta.json"));
}

TEST_F(CliTest, EvalWithCandidatesEqualToReferencesScoresPerfectBleu) {
    std::ofstream cands(dir / "cands.txt");
    auto corpus = slurp(dir / "corpus.jsonl");
    for (const auto& line : lines_of(corpus))
        cands << nlohmann::json::parse(line).at("response").get<std::string>() << "\n";
    cands.close();
    auto r = run("eval --checkpoint " + path("ckpt") + " --corpus " + path("corpus.jsonl") +
                 " --candidates " + path("cands.txt") + " --out -");
    ASSERT_EQ(r.exit_code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_DOUBLE_EQ(j.at("bleu2").get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(j.at("recall").get<double>(), 1.0);
    EXPECT_NE(r.err.find("BLEU-2"), std::string::npos);  // table goes to stderr
}

TEST_F(CliTest, EvalCandidateLineCountMustMatchCorpus) {
    std::ofstream(dir / "short.txt") << "one line\n";
    auto r = run("eval --checkpoint " + path("ckpt") + " --corpus " + path("corpus.jsonl") +
                 " --candidates " + path("short.txt"));
    EXPECT_EQ(r.exit_code, 3);
}

TEST_F(CliTest, ChatAnswersEachPromptSkipsBlanksAndExitsCleanly) {
    auto r = run("chat --checkpoint " + path("ckpt") + " --seed 5",
                 "q0a q0b q0c cue0 ?\n\nq1a q1b q1c cue1 ?\n");
    ASSERT_EQ(r.exit_code, 0);
    auto out_lines = lines_of(r.out);
    ASSERT_EQ(out_lines.size(), 2u);  // blank input line answered nothing
    for (const auto& line : out_lines) {
        EXPECT_EQ(line.front(), '[');
        EXPECT_NE(line.find("→"), std::string::npos);
        EXPECT_NE(line.find("] "), std::string::npos);
    }
    EXPECT_NE(r.err.find(">"), std::string::npos);  // prompt on stderr
}

TEST_F(CliTest, ConfigFileAppliesAndFlagsOverride) {
    std::ofstream(dir / "gen.cfg") << "[generate]\ntau=0.0\n";
    auto from_cfg = run("generate --checkpoint " + path("ckpt") + " --questions " +
                        path("questions.txt") + " --config " + path("gen.cfg") + " --out -");
    ASSERT_EQ(from_cfg.exit_code, 0);
    int voc_cfg = nlohmann::json::parse(lines_of(from_cfg.out)[0]).at("voc_size");

    auto overridden = run("generate --checkpoint " + path("ckpt") + " --questions " +
                          path("questions.txt") + " --config " + path("gen.cfg") +
                          " --tau 0.99 --out -");
    ASSERT_EQ(overridden.exit_code, 0);
    int voc_flag = nlohmann::json::parse(lines_of(overridden.out)[0]).at("voc_size");

    EXPECT_GT(voc_cfg, voc_flag);  // tau=0 activates every content word
}

TEST_F(CliTest, UnknownConfigKeyExitsTwo) {
    std::ofstream(dir / "bad.cfg") << "[generate]\nbogus-key=1\n";
    EXPECT_EQ(run("generate --checkpoint " + path("ckpt") + " --questions " +
                  path("questions.txt") + " --config " + path("bad.cfg"))
                  .exit_code,
              2);
}

TEST_F(CliTest, SweepWritesSortedCsv) {
    auto r = run("sweep --checkpoint " + path("ckpt") + " --questions " + path("questions.txt") +
                 " --taus 0,0.5,0.9 --out -");
    ASSERT_EQ(r.exit_code, 0);
    auto rows = lines_of(r.out);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], "voc_size,decode_ms,si_qps");
    std::vector<int> sizes;
    for (size_t i = 1; i < rows.size(); ++i)
        sizes.push_back(std::stoi(rows[i].substr(0, rows[i].find(','))));
    EXPECT_TRUE(std::is_sorted(sizes.begin(), sizes.end()));
    EXPECT_EQ(run("sweep --checkpoint " + path("ckpt") + " --questions " + path("questions.txt"))
                  .exit_code,
              2);  // neither --taus nor --caps
}

TEST_F(CliTest, BenchReportsThroughput) {
    auto r = run("bench --checkpoint " + path("ckpt") + " --questions " + path("questions.txt") +
                 " --duration 0.4 --concurrency 2 --out -");
    ASSERT_EQ(r.exit_code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_GT(j.at("si_qps").get<double>(), 0.0);
    EXPECT_GT(j.at("total_queries").get<long>(), 0);
    EXPECT_EQ(j.at("concurrency").get<int>(), 2);
}

}  // namespace
