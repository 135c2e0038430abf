// Deterministic synthetic dialog corpus: K question templates × L emotions,
// identical question text across the emotion sweep, response uniquely
// determined by (template, emotion). A per-template cue token makes the
// question emotion learnable by the classifier.

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dverg/corpus.hpp"
#include "dverg/emotion.hpp"
#include "dverg/vocab.hpp"

namespace dverg {

struct SynthConfig {
    int templates = 50;
    int emotions = 4;  // uses the first `emotions` labels of the taxonomy
};

inline std::vector<RawExample> synth_corpus(const EmotionTaxonomy& tax, const SynthConfig& cfg) {
    if (cfg.templates < 1) throw std::invalid_argument("synth: templates must be >= 1");
    if (cfg.emotions < 1 || cfg.emotions > tax.size())
        throw std::invalid_argument("synth: emotion count outside taxonomy");
    std::vector<RawExample> out;
    out.reserve(static_cast<size_t>(cfg.templates) * cfg.emotions);
    for (int i = 0; i < cfg.templates; ++i) {
        std::string t = std::to_string(i);
        int qe = i % cfg.emotions;
        std::vector<std::string> question = {"q" + t + "a", "q" + t + "b", "q" + t + "c",
                                             "cue" + std::to_string(qe), "?"};
        for (int e = 0; e < cfg.emotions; ++e) {
            RawExample ex;
            ex.question = question;
            ex.response = {"emo" + std::to_string(e), "r" + t,
                           "u" + t + "x" + std::to_string(e),
                           "v" + t + "x" + std::to_string(e), "."};
            ex.response_emotion = e;
            ex.question_emotion = qe;
            out.push_back(std::move(ex));
        }
    }
    return out;
}

// JSONL form loadable by the corpus reader.
inline void write_corpus_jsonl(std::ostream& out, const std::vector<RawExample>& corpus,
                               const EmotionTaxonomy& tax) {
    for (const auto& ex : corpus) {
        nlohmann::json j;
        j["question"] = join_tokens(ex.question);
        j["response"] = join_tokens(ex.response);
        j["response_emotion"] = tax.label(ex.response_emotion);
        if (ex.question_emotion) j["question_emotion"] = tax.label(*ex.question_emotion);
        out << j.dump() << "\n";
    }
}

// Vocabulary of `content_words` generated tokens plus the reserved ids and
// two punctuation function words; used by the latency sweeps.
inline Vocabulary synthetic_vocabulary(int content_words) {
    std::vector<std::string> tokens = {"?", "."};
    for (int i = 0; i < content_words; ++i) tokens.push_back("w" + std::to_string(i));
    return Vocabulary::build({tokens}, content_words + 16, 1, {});
}

}  // namespace dverg
