// Checkpoint directory: params.bin (flat binary parameter store) plus
// meta.json (vocabulary, taxonomy, config echo, pipeline stage tag).

#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "dverg/classifier.hpp"
#include "dverg/dynvocab.hpp"
#include "dverg/emotion.hpp"
#include "dverg/optim.hpp"
#include "dverg/seq2seq.hpp"
#include "dverg/vocab.hpp"

namespace dverg {

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"learning_rate", c.learning_rate},
                       {"epochs", c.epochs},
                       {"batch_size", c.batch_size},
                       {"seed", c.seed},
                       {"hidden_size", c.hidden_size},
                       {"embedding_dim", c.embedding_dim},
                       {"emotion_dim", c.emotion_dim},
                       {"adam_beta1", c.adam_beta1},
                       {"adam_beta2", c.adam_beta2},
                       {"adam_eps", c.adam_eps},
                       {"finetune_mode", to_string(c.finetune_mode)},
                       {"joint_loss_weight", c.joint_loss_weight},
                       {"grad_clip_norm", c.grad_clip_norm},
                       {"neg_ratio", c.neg_ratio},
                       {"tau", c.tau},
                       {"cap", c.cap}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
    j.at("learning_rate").get_to(c.learning_rate);
    j.at("epochs").get_to(c.epochs);
    j.at("batch_size").get_to(c.batch_size);
    j.at("seed").get_to(c.seed);
    j.at("hidden_size").get_to(c.hidden_size);
    j.at("embedding_dim").get_to(c.embedding_dim);
    j.at("emotion_dim").get_to(c.emotion_dim);
    j.at("adam_beta1").get_to(c.adam_beta1);
    j.at("adam_beta2").get_to(c.adam_beta2);
    j.at("adam_eps").get_to(c.adam_eps);
    c.finetune_mode = parse_finetune_mode(j.at("finetune_mode").get<std::string>());
    j.at("joint_loss_weight").get_to(c.joint_loss_weight);
    j.at("grad_clip_norm").get_to(c.grad_clip_norm);
    j.at("neg_ratio").get_to(c.neg_ratio);
    j.at("tau").get_to(c.tau);
    j.at("cap").get_to(c.cap);
}

inline const std::string kStageS2s = "s2s";
inline const std::string kStageVocab = "vocab";
inline const std::string kStageFinetuned = "finetuned";

template <class T>
struct Checkpoint {
    Seq2SeqParams<T> s2s;
    VocabPredictorParams<T> vocab_predictor;
    ClassifierParams<T> classifier;
    Vocabulary vocab;
    EmotionTaxonomy taxonomy;
    TrainConfig config;
    std::string stage;

    ParameterStore<T> store() const {
        ParameterStore<T> st;
        s2s.attach(st, "s2s.");
        vocab_predictor.attach(st, "vocab.");
        classifier.attach(st, "cls.");
        return st;
    }

    void save(const std::string& dir) const {
        namespace fs = std::filesystem;
        fs::create_directories(dir);
        store().save_file((fs::path(dir) / "params.bin").string());
        nlohmann::json meta;
        meta["format"] = 1;
        meta["stage"] = stage;
        meta["taxonomy"] = taxonomy.labels();
        std::vector<std::string> tokens;
        tokens.reserve(vocab.size());
        for (int id = 0; id < vocab.size(); ++id) tokens.push_back(vocab.token_of(id));
        meta["vocab"] = {{"tokens", tokens}, {"function_ids", vocab.function_ids()}};
        meta["config"] = config;
        std::ofstream out(fs::path(dir) / "meta.json");
        if (!out) throw std::runtime_error("checkpoint: cannot write meta.json in " + dir);
        out << meta.dump(2) << "\n";
    }

    static Checkpoint load(const std::string& dir) {
        namespace fs = std::filesystem;
        std::ifstream meta_in(fs::path(dir) / "meta.json");
        if (!meta_in) throw std::runtime_error("checkpoint: cannot open " + dir + "/meta.json");
        nlohmann::json meta = nlohmann::json::parse(meta_in);

        auto vocab = Vocabulary::from_parts(
            meta.at("vocab").at("tokens").get<std::vector<std::string>>(),
            meta.at("vocab").at("function_ids").get<std::vector<int>>());
        EmotionTaxonomy taxonomy(meta.at("taxonomy").get<std::vector<std::string>>());
        TrainConfig config = meta.at("config").get<TrainConfig>();
        std::string stage = meta.at("stage").get<std::string>();

        ParameterStore<T> st = ParameterStore<T>::load_file(
            (fs::path(dir) / "params.bin").string());
        return Checkpoint{Seq2SeqParams<T>::from_store(st, "s2s."),
                          VocabPredictorParams<T>::from_store(st, "vocab."),
                          ClassifierParams<T>::from_store(st, "cls."),
                          std::move(vocab),
                          std::move(taxonomy),
                          config,
                          std::move(stage)};
    }
};

}  // namespace dverg
