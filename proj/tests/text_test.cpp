#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "dverg/corpus.hpp"
#include "dverg/embeddings.hpp"
#include "dverg/emotion.hpp"
#include "dverg/vocab.hpp"

using namespace dverg;

namespace {

std::vector<std::string> toks(std::initializer_list<const char*> xs) {
    return std::vector<std::string>(xs.begin(), xs.end());
}

Vocabulary small_vocab() {
    // counts: a=2, b=1
    return Vocabulary::build({toks({"a", "b"}), toks({"a"})}, 100, 1, {"a"});
}

}  // namespace

TEST(Tokenize, WhitespaceAndLowercase) {
    EXPECT_EQ(tokenize("Sing a song"), toks({"sing", "a", "song"}));
}

TEST(Tokenize, PunctuationStandsAlone) {
    EXPECT_EQ(tokenize("Bullshit!"), toks({"bullshit", "!"}));
    EXPECT_EQ(tokenize("well, yes... no?"), toks({"well", ",", "yes", ".", ".", ".", "no", "?"}));
}

TEST(Tokenize, EmptyText) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, IdempotentOnJoinedOutput) {
    for (const char* text : {"Sing a song", "Bullshit!", "A-B c_d 'quote'", "tabs\tand\nnewlines",
                             "\xe4\xbd\xa0\xe5\xa5\xbd world!"}) {
        auto once = tokenize(text);
        EXPECT_EQ(tokenize(join_tokens(once)), once) << text;
    }
}

TEST(Vocab, FunctionContentPartitionFromList) {
    auto v = small_vocab();
    ASSERT_EQ(v.size(), 6);  // 4 reserved + a + b
    int a = v.id_of("a"), b = v.id_of("b");
    EXPECT_EQ(a, 4);  // higher count wins the smaller id
    EXPECT_EQ(b, 5);
    EXPECT_TRUE(v.is_function(a));
    EXPECT_FALSE(v.is_content(a));
    EXPECT_TRUE(v.is_content(b));
    EXPECT_EQ(v.content_ids(), std::vector<int>({b}));
    EXPECT_EQ(v.function_ids(), std::vector<int>({0, 1, 2, 3, a}));  // reserved are function words
}

TEST(Vocab, CapLeavesOnlyReserved) {
    auto v = Vocabulary::build({toks({"a", "b"})}, 4, 1, {});
    ASSERT_EQ(v.size(), 4);
    EXPECT_EQ(v.token_of(0), "<pad>");
    EXPECT_EQ(v.token_of(1), "<unk>");
    EXPECT_EQ(v.token_of(2), "<bos>");
    EXPECT_EQ(v.token_of(3), "<eos>");
}

TEST(Vocab, LexicographicTieBreak) {
    auto v = Vocabulary::build({toks({"c", "b"})}, 100, 1, {});
    EXPECT_EQ(v.id_of("b"), 4);
    EXPECT_EQ(v.id_of("c"), 5);
}

TEST(Vocab, MinCountFiltersRareTokens) {
    auto v = Vocabulary::build({toks({"a", "a", "b"})}, 100, 2, {});
    EXPECT_TRUE(v.contains("a"));
    EXPECT_FALSE(v.contains("b"));
}

TEST(Vocab, EmptyCorpusRejected) {
    EXPECT_THROW(Vocabulary::build({}, 100, 1, {}), std::invalid_argument);
    EXPECT_THROW(Vocabulary::build({{}}, 100, 1, {}), std::invalid_argument);
}

TEST(Vocab, RoundTripAndPartitionInvariants) {
    auto v = Vocabulary::build({toks({"the", "cat", "sat", "!", "the"})}, 100, 1, {"the"});
    for (int id = 0; id < v.size(); ++id) {
        EXPECT_EQ(v.id_of(v.token_of(id)), id);
        if (Vocabulary::is_reserved(id)) {
            EXPECT_TRUE(v.is_function(id));
            EXPECT_FALSE(v.is_content(id));
        } else {
            EXPECT_NE(v.is_function(id), v.is_content(id));
        }
    }
    EXPECT_TRUE(v.is_function(v.id_of("!")));
    EXPECT_TRUE(v.is_content(v.id_of("cat")));
}

TEST(Vocab, EncodeMapsOovToUnk) {
    auto v = small_vocab();
    EXPECT_EQ(v.encode(toks({"a", "zebra"})),
              std::vector<int>({v.id_of("a"), Vocabulary::kUnk}));
}

TEST(Vocab, ContentIndexIsDenseOverContentIds) {
    auto v = Vocabulary::build({toks({"x", "y", "z", "of"})}, 100, 1, {"of"});
    int next = 0;
    for (int id : v.content_ids()) EXPECT_EQ(v.content_index_of(id), next++);
    EXPECT_EQ(v.content_index_of(v.id_of("of")), -1);
    EXPECT_EQ(v.content_index_of(Vocabulary::kPad), -1);
}

TEST(Vocab, FromPartsRebuildsPartition) {
    auto v = small_vocab();
    std::vector<std::string> tokens;
    for (int id = 0; id < v.size(); ++id) tokens.push_back(v.token_of(id));
    auto w = Vocabulary::from_parts(tokens, v.function_ids());
    ASSERT_EQ(w.size(), v.size());
    for (int id = 0; id < v.size(); ++id) {
        EXPECT_EQ(w.token_of(id), v.token_of(id));
        EXPECT_EQ(w.is_function(id), v.is_function(id));
    }
    EXPECT_EQ(w.content_ids(), v.content_ids());
}

TEST(Corpus, LoadsExamplesInOrder) {
    auto tax = EmotionTaxonomy::defaults();
    std::istringstream in(
        R"({"question":"hi","response":"hello","response_emotion":"non-emotional"})"
        "\n"
        R"({"question":"You fool!","response":"so sad","response_emotion":"aggrieved","question_emotion":"abusing"})"
        "\n");
    auto raw = load_corpus(in, tax);
    ASSERT_EQ(raw.size(), 2u);
    EXPECT_EQ(raw[0].question, toks({"hi"}));
    EXPECT_EQ(raw[0].response, toks({"hello"}));
    EXPECT_EQ(raw[0].response_emotion, tax.id_of("non-emotional"));
    EXPECT_FALSE(raw[0].question_emotion.has_value());
    EXPECT_EQ(raw[1].question, toks({"you", "fool", "!"}));
    ASSERT_TRUE(raw[1].question_emotion.has_value());
    EXPECT_EQ(*raw[1].question_emotion, tax.id_of("abusing"));
}

TEST(Corpus, MalformedLineNamesLineNumber) {
    auto tax = EmotionTaxonomy::defaults();
    std::istringstream in(
        R"({"question":"a","response":"b","response_emotion":"satisfied"})"
        "\n"
        R"({"question":"a","response":"b","response_emotion":"satisfied"})"
        "\nnot json\n");
    try {
        load_corpus(in, tax);
        FAIL() << "expected parse failure";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(Corpus, UnknownEmotionNamesTheLabel) {
    auto tax = EmotionTaxonomy::defaults();
    std::istringstream in(R"({"question":"a","response":"b","response_emotion":"joyful"})");
    try {
        load_corpus(in, tax);
        FAIL() << "expected unknown-label failure";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("joyful"), std::string::npos) << e.what();
    }
}

TEST(Corpus, EncodeAgainstVocabulary) {
    auto tax = EmotionTaxonomy::defaults();
    std::istringstream in(R"({"question":"a b","response":"a zebra","response_emotion":"grateful"})");
    auto raw = load_corpus(in, tax);
    auto v = small_vocab();
    auto enc = encode_corpus(raw, v);
    ASSERT_EQ(enc.size(), 1u);
    EXPECT_EQ(enc[0].question, std::vector<int>({v.id_of("a"), v.id_of("b")}));
    EXPECT_EQ(enc[0].response, std::vector<int>({v.id_of("a"), Vocabulary::kUnk}));
    EXPECT_EQ(enc[0].response_emotion, tax.id_of("grateful"));
}

TEST(Embeddings, CopiesRowsForKnownTokens) {
    auto v = Vocabulary::build({toks({"cat", "dog"})}, 100, 1, {});
    std::istringstream in("1 2\ncat 1.0 0.0\n");
    auto e = load_embeddings<float>(in, v, 2, 7);
    int cat = v.id_of("cat");
    EXPECT_FLOAT_EQ(e.data()[cat * 2 + 0], 1.0f);
    EXPECT_FLOAT_EQ(e.data()[cat * 2 + 1], 0.0f);
}

TEST(Embeddings, MissingTokenGetsSeededUniformRow) {
    auto v = Vocabulary::build({toks({"cat", "dog"})}, 100, 1, {});
    std::istringstream in1("1 2\ncat 1.0 0.0\n");
    std::istringstream in2("1 2\ncat 1.0 0.0\n");
    auto e1 = load_embeddings<float>(in1, v, 2, 7);
    auto e2 = load_embeddings<float>(in2, v, 2, 7);
    int dog = v.id_of("dog");
    for (int d = 0; d < 2; ++d) {
        float x = e1.data()[dog * 2 + d];
        EXPECT_GE(x, -0.1f);
        EXPECT_LE(x, 0.1f);
        EXPECT_EQ(x, e2.data()[dog * 2 + d]);  // same seed, same row
    }
}

TEST(Embeddings, ReservedRowsZeroExceptUnk) {
    auto v = small_vocab();
    std::istringstream in("0 4\n");
    auto e = load_embeddings<float>(in, v, 4, 11);
    for (int id : {Vocabulary::kPad, Vocabulary::kBos, Vocabulary::kEos})
        for (int d = 0; d < 4; ++d) EXPECT_EQ(e.data()[id * 4 + d], 0.0f);
    double unk_norm = 0;
    for (int d = 0; d < 4; ++d) unk_norm += std::abs(e.data()[Vocabulary::kUnk * 4 + d]);
    EXPECT_GT(unk_norm, 0.0);
}

TEST(Embeddings, HeaderDimMismatchRejected) {
    auto v = small_vocab();
    std::istringstream in("5 300\n");
    EXPECT_THROW(load_embeddings<float>(in, v, 128, 1), std::runtime_error);
}

TEST(Embeddings, NonNumericEntryRejected) {
    auto v = Vocabulary::build({toks({"cat"})}, 100, 1, {});
    std::istringstream in("1 2\ncat 1.0 oops\n");
    EXPECT_THROW(load_embeddings<float>(in, v, 2, 1), std::runtime_error);
}

TEST(Embeddings, RandomMatrixMatchesVocabShape) {
    auto v = small_vocab();
    auto e = random_embeddings<float>(v, 3, 5);
    EXPECT_EQ(e.shape(), std::vector<int>({v.size(), 3}));
    for (int d = 0; d < 3; ++d) EXPECT_EQ(e.data()[Vocabulary::kPad * 3 + d], 0.0f);
}

TEST(Taxonomy, DefaultsContainRequiredLabels) {
    auto tax = EmotionTaxonomy::defaults();
    EXPECT_EQ(tax.size(), 6);
    for (const char* l : {"non-emotional", "satisfied", "aggrieved", "regretful", "abusing",
                          "grateful"})
        EXPECT_TRUE(tax.find(l).has_value()) << l;
}

TEST(Taxonomy, RejectsDuplicatesAndMissingNeutral) {
    EXPECT_THROW(EmotionTaxonomy({"non-emotional", "x", "x"}), std::invalid_argument);
    EXPECT_THROW(EmotionTaxonomy({"happy", "sad"}), std::invalid_argument);
}

TEST(Taxonomy, ParseSkipsBlanksAndComments) {
    std::istringstream in("# labels\nnon-emotional\n\n  satisfied  \n");
    auto tax = EmotionTaxonomy::parse(in);
    EXPECT_EQ(tax.size(), 2);
    EXPECT_EQ(tax.label(1), "satisfied");
}

TEST(EmotionMapping, DefaultsRouteAbusingToHurtResponses) {
    auto tax = EmotionTaxonomy::defaults();
    auto map = EmotionMap::defaults(tax);
    auto abusing = map.candidates(tax.id_of("abusing"));
    EXPECT_EQ(abusing, std::vector<int>({tax.id_of("aggrieved"), tax.id_of("regretful")}));
    EXPECT_EQ(map.candidates(tax.id_of("satisfied")),
              std::vector<int>({tax.id_of("satisfied")}));
}

TEST(EmotionMapping, ParseRequiresTotalCoverage) {
    auto tax = EmotionTaxonomy::defaults();
    std::ostringstream full;
    full << "abusing -> aggrieved, regretful\n";
    for (const char* l : {"non-emotional", "satisfied", "aggrieved", "regretful", "grateful"})
        full << l << " -> " << l << "\n";
    std::istringstream ok(full.str());
    auto map = EmotionMap::parse(ok, tax);
    EXPECT_EQ(map.candidates(tax.id_of("abusing")).size(), 2u);

    std::istringstream partial("abusing -> aggrieved\n");
    try {
        EmotionMap::parse(partial, tax);
        FAIL() << "expected missing-entry failure";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("non-emotional"), std::string::npos);
    }
}

TEST(EmotionMapping, UnknownLabelRejected) {
    auto tax = EmotionTaxonomy::defaults();
    std::istringstream in("abusing -> joyful\n");
    EXPECT_THROW(EmotionMap::parse(in, tax), std::invalid_argument);
}

TEST(EmotionSampling, SingletonAndDeterminism) {
    EXPECT_EQ(sample_response_emotion({3}, uint64_t(42)), 3);
    int a = sample_response_emotion({1, 2, 3}, uint64_t(9));
    int b = sample_response_emotion({1, 2, 3}, uint64_t(9));
    EXPECT_EQ(a, b);
    EXPECT_THROW(sample_response_emotion({}, uint64_t(1)), std::invalid_argument);
}

TEST(EmotionSampling, UniformOverTwoCandidates) {
    std::map<int, int> freq;
    const int n = 10000;
    for (int s = 0; s < n; ++s) ++freq[sample_response_emotion({7, 9}, uint64_t(s))];
    EXPECT_NEAR(freq[7] / double(n), 0.5, 0.02);
    EXPECT_NEAR(freq[9] / double(n), 0.5, 0.02);
}
