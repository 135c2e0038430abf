// JSONL corpus loading and id-encoding of question/response pairs.

#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dverg/emotion.hpp"
#include "dverg/vocab.hpp"

namespace dverg {

// A tokenized pair before vocabulary encoding.
struct RawExample {
    std::vector<std::string> question;
    std::vector<std::string> response;
    int response_emotion = 0;
    std::optional<int> question_emotion;
};

// An id-encoded pair ready for training (no BOS/EOS; those are added by the
// decoder loop).
struct TrainingExample {
    std::vector<int> question;
    std::vector<int> response;
    int response_emotion = 0;
    std::optional<int> question_emotion;
};

// One JSON object per line with fields: question, response, response_emotion,
// optional question_emotion. Parse and validation errors carry the 1-based
// line number.
inline std::vector<RawExample> load_corpus(std::istream& in, const EmotionTaxonomy& tax) {
    std::vector<RawExample> out;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw std::runtime_error("corpus: line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (trim_copy(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) fail("expected a JSON object");
        auto str_field = [&](const char* name) -> std::string {
            if (!j.contains(name) || !j[name].is_string())
                fail(std::string("missing or non-string field '") + name + "'");
            return j[name].get<std::string>();
        };
        RawExample ex;
        ex.question = tokenize(str_field("question"));
        ex.response = tokenize(str_field("response"));
        if (ex.question.empty()) fail("question tokenizes to nothing");
        if (ex.response.empty()) fail("response tokenizes to nothing");
        std::string remo = str_field("response_emotion");
        auto rid = tax.find(remo);
        if (!rid) fail("unknown emotion label '" + remo + "'");
        ex.response_emotion = *rid;
        if (j.contains("question_emotion")) {
            if (!j["question_emotion"].is_string()) fail("non-string field 'question_emotion'");
            std::string qemo = j["question_emotion"].get<std::string>();
            auto qid = tax.find(qemo);
            if (!qid) fail("unknown emotion label '" + qemo + "'");
            ex.question_emotion = *qid;
        }
        out.push_back(std::move(ex));
    }
    return out;
}

inline std::vector<RawExample> load_corpus_file(const std::string& path,
                                                const EmotionTaxonomy& tax) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("corpus: cannot open " + path);
    return load_corpus(in, tax);
}

inline TrainingExample encode_example(const RawExample& raw, const Vocabulary& vocab) {
    TrainingExample ex;
    ex.question = vocab.encode(raw.question);
    ex.response = vocab.encode(raw.response);
    ex.response_emotion = raw.response_emotion;
    ex.question_emotion = raw.question_emotion;
    return ex;
}

inline std::vector<TrainingExample> encode_corpus(const std::vector<RawExample>& raw,
                                                  const Vocabulary& vocab) {
    std::vector<TrainingExample> out;
    out.reserve(raw.size());
    for (const auto& r : raw) out.push_back(encode_example(r, vocab));
    return out;
}

// Token streams (questions then responses) feeding vocabulary construction.
inline std::vector<std::vector<std::string>> corpus_token_streams(
    const std::vector<RawExample>& raw) {
    std::vector<std::vector<std::string>> out;
    out.reserve(raw.size() * 2);
    for (const auto& r : raw) {
        out.push_back(r.question);
        out.push_back(r.response);
    }
    return out;
}

// One token per line; blank lines and '#' comments skipped.
inline std::set<std::string> load_function_words(std::istream& in) {
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim_copy(line);
        if (t.empty() || t[0] == '#') continue;
        out.insert(t);
    }
    return out;
}

inline std::set<std::string> load_function_words_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("function words: cannot open " + path);
    return load_function_words(in);
}

}  // namespace dverg
