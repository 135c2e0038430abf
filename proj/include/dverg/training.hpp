// Three-stage training pipeline: emotion-conditioned seq2seq training over
// the full vocabulary, vocabulary-predictor training with the encoder
// frozen, and joint fine-tuning under NO-ft / ft-target / ft-both masks.

#pragma once

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>

#include "dverg/checkpoint.hpp"
#include "dverg/corpus.hpp"
#include "dverg/dynvocab.hpp"
#include "dverg/generate.hpp"
#include "dverg/seq2seq.hpp"

namespace dverg {

// NLL of a full-vocabulary target id against logits laid out over active_ids.
template <class T>
Tensor<T> nll_loss(const Tensor<T>& logits, const std::vector<int>& active_ids, int target_id) {
    auto it = std::find(active_ids.begin(), active_ids.end(), target_id);
    if (it == active_ids.end())
        throw std::invalid_argument("nll_loss: target id " + std::to_string(target_id) +
                                    " not in the active vocabulary");
    return nll(logits, static_cast<int>(it - active_ids.begin()));
}

inline std::vector<int> full_active_ids(int vocab_size) {
    std::vector<int> ids(vocab_size);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

// Teacher-forced per-token loss of one example over the given active set;
// the response is terminated by EOS.
template <class T>
Tensor<T> example_generation_loss(const TrainingExample& ex, const Seq2SeqParams<T>& params,
                                  const std::vector<int>& active_ids,
                                  const EncoderOutput<T>& enc) {
    AttentionContext<T> actx(enc.annotations, params);
    Tensor<T> state = decoder_init_state(enc.h, params);
    std::vector<int> targets = ex.response;
    targets.push_back(Vocabulary::kEos);
    Tensor<T> total = Tensor<T>::scalar(T(0));
    int prev = Vocabulary::kBos;
    for (int target : targets) {
        auto att = attend(state, actx, params);
        auto step = decode_step(prev, state, att.context, ex.response_emotion, params,
                                active_ids);
        total = add(total, nll_loss(step.logits, active_ids, target));
        state = step.state;
        prev = target;
    }
    return scale(total, T(1.0 / targets.size()));
}

template <class T>
Tensor<T> example_generation_loss(const TrainingExample& ex, const Seq2SeqParams<T>& params,
                                  const std::vector<int>& active_ids) {
    return example_generation_loss(ex, params, active_ids, encode(ex.question, params));
}

namespace detail {

// mean per-example loss over deterministic minibatches, one optimizer step
// per batch; returns the epoch mean. `loss_fn(example) -> scalar tensor`.
template <class T, class LossFn>
double run_epoch(const std::vector<TrainingExample>& corpus, std::vector<size_t>& order,
                 std::mt19937& rng, Adam<T>& opt, const TrainConfig& cfg, LossFn&& loss_fn) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0;
    size_t done = 0;
    while (done < order.size()) {
        size_t take = std::min<size_t>(cfg.batch_size, order.size() - done);
        opt.zero_grads();
        Tensor<T> batch = Tensor<T>::scalar(T(0));
        for (size_t k = 0; k < take; ++k) batch = add(batch, loss_fn(corpus[order[done + k]]));
        batch = scale(batch, T(1.0 / take));
        backward(batch);
        clip_global_norm(opt.params(), cfg.grad_clip_norm);
        opt.step();
        epoch_sum += double(batch.value()) * take;
        done += take;
    }
    return epoch_sum / order.size();
}

template <class T, class LossFn>
double eval_mean(const std::vector<TrainingExample>& corpus, LossFn&& loss_fn) {
    double s = 0;
    for (const auto& ex : corpus) s += double(loss_fn(ex).value());
    return s / corpus.size();
}

inline int effective_neg_ratio(const TrainConfig& cfg, int content_count) {
    if (cfg.neg_ratio >= 0) return cfg.neg_ratio;
    return content_count < 10000 ? 0 : 5;  // exact BCE at desk scale
}

}  // namespace detail

// Stage 1: teacher-forced training over the full static vocabulary, with e
// taken from each example's response emotion.
template <class T>
Checkpoint<T> train_seq2seq(const std::vector<TrainingExample>& corpus, const Vocabulary& vocab,
                            const EmotionTaxonomy& taxonomy, Tensor<T> word_emb,
                            const TrainConfig& cfg, std::ostream* log = nullptr) {
    cfg.validate();
    if (corpus.empty()) throw std::invalid_argument("train_seq2seq: empty corpus");
    for (const auto& ex : corpus)
        if (ex.response_emotion < 0 || ex.response_emotion >= taxonomy.size())
            throw std::invalid_argument("train_seq2seq: response emotion outside taxonomy");
    if (word_emb.dim(0) != vocab.size() || word_emb.dim(1) != cfg.embedding_dim)
        throw std::invalid_argument("train_seq2seq: embedding shape mismatch");

    std::mt19937 rng(static_cast<uint32_t>(cfg.seed));
    auto s2s = Seq2SeqParams<T>::init(std::move(word_emb), taxonomy.size(), cfg.hidden_size,
                                      cfg.emotion_dim, rng);
    auto predictor = VocabPredictorParams<T>::init(vocab.content_count(), 2 * cfg.hidden_size,
                                                   cfg.emotion_dim, cfg.hidden_size, rng);
    auto classifier =
        ClassifierParams<T>::init(taxonomy.size(), cfg.embedding_dim, cfg.hidden_size, rng);

    auto active = full_active_ids(vocab.size());
    auto loss_fn = [&](const TrainingExample& ex) {
        return example_generation_loss(ex, s2s, active);
    };

    if (log) *log << "epoch 0 loss " << detail::eval_mean<T>(corpus, loss_fn) << "\n";

    s2s.set_requires_grad(true);
    Adam<T> opt(s2s.all(), cfg);
    std::vector<size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), size_t(0));
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double loss = detail::run_epoch(corpus, order, rng, opt, cfg, loss_fn);
        if (log) *log << "epoch " << epoch << " loss " << loss << "\n";
    }
    s2s.set_requires_grad(false);

    return Checkpoint<T>{std::move(s2s), std::move(predictor), std::move(classifier),
                         vocab,          taxonomy,             cfg,
                         kStageS2s};
}

// Stage 2: the encoder (and all other seq2seq parameters) frozen; only the
// vocabulary predictor is optimized against the selection BCE.
template <class T>
Checkpoint<T> train_vocab_model(const std::vector<TrainingExample>& corpus, Checkpoint<T> ckpt,
                                const TrainConfig& cfg, std::ostream* log = nullptr) {
    cfg.validate();
    if (ckpt.stage != kStageS2s)
        throw std::runtime_error("train_vocab_model: checkpoint stage '" + ckpt.stage +
                                 "', requires stage '" + kStageS2s + "'");
    if (corpus.empty()) throw std::invalid_argument("train_vocab_model: empty corpus");

    const int neg_ratio = detail::effective_neg_ratio(cfg, ckpt.vocab.content_count());
    std::mt19937 rng(static_cast<uint32_t>(cfg.seed));
    uint64_t sample_seed = cfg.seed;

    ckpt.s2s.set_requires_grad(false);
    auto loss_fn = [&](const TrainingExample& ex) {
        auto enc = encode(ex.question, ckpt.s2s);
        auto P = predict_vocab_probs(enc.h, ex.response_emotion, ckpt.s2s.emotion_emb,
                                     ckpt.vocab_predictor);
        return vocab_loss(P, ex.response, ckpt.vocab, neg_ratio, sample_seed++);
    };

    {
        uint64_t saved = sample_seed;
        if (log) *log << "epoch 0 loss " << detail::eval_mean<T>(corpus, loss_fn) << "\n";
        sample_seed = saved;
    }

    ckpt.vocab_predictor.set_requires_grad(true);
    Adam<T> opt(ckpt.vocab_predictor.all(), cfg);
    std::vector<size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), size_t(0));
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double loss = detail::run_epoch(corpus, order, rng, opt, cfg, loss_fn);
        if (log) *log << "epoch " << epoch << " loss " << loss << "\n";
    }
    ckpt.vocab_predictor.set_requires_grad(false);

    ckpt.stage = kStageVocab;
    ckpt.config = cfg;
    return ckpt;
}

// Stage 3: joint loss L_gen + λ·L_vocab with the generation NLL computed
// over the per-example dynamic vocabulary (reference words force-included).
// NO-ft: nothing trains. ft-target: only the predictor updates. ft-both:
// everything updates.
template <class T>
Checkpoint<T> finetune(const std::vector<TrainingExample>& corpus, Checkpoint<T> ckpt,
                       const TrainConfig& cfg, std::ostream* log = nullptr) {
    cfg.validate();
    if (ckpt.stage != kStageVocab)
        throw std::runtime_error("finetune: checkpoint stage '" + ckpt.stage +
                                 "', requires stage '" + kStageVocab + "'");
    if (corpus.empty()) throw std::invalid_argument("finetune: empty corpus");

    ckpt.stage = kStageFinetuned;
    ckpt.config = cfg;
    if (cfg.finetune_mode == FinetuneMode::kNone) return ckpt;

    const int neg_ratio = detail::effective_neg_ratio(cfg, ckpt.vocab.content_count());
    std::mt19937 rng(static_cast<uint32_t>(cfg.seed));
    uint64_t sample_seed = cfg.seed;

    const bool update_s2s = cfg.finetune_mode == FinetuneMode::kBoth;
    ckpt.s2s.set_requires_grad(update_s2s);
    ckpt.vocab_predictor.set_requires_grad(true);

    auto loss_fn = [&](const TrainingExample& ex) {
        auto enc = encode(ex.question, ckpt.s2s);
        auto P = predict_vocab_probs(enc.h, ex.response_emotion, ckpt.s2s.emotion_emb,
                                     ckpt.vocab_predictor);
        auto dv = build_dynamic_vocab(P, ckpt.vocab, ex.question, cfg.tau, cfg.cap, ex.response);
        Tensor<T> gen = example_generation_loss(ex, ckpt.s2s, dv.active, enc);
        Tensor<T> voc = vocab_loss(P, ex.response, ckpt.vocab, neg_ratio, sample_seed++);
        return add(gen, scale(voc, T(cfg.joint_loss_weight)));
    };

    std::vector<Tensor<T>> trainable = ckpt.vocab_predictor.all();
    if (update_s2s)
        for (auto& t : ckpt.s2s.all()) trainable.push_back(t);
    Adam<T> opt(std::move(trainable), cfg);

    {
        uint64_t saved = sample_seed;
        if (log) *log << "epoch 0 loss " << detail::eval_mean<T>(corpus, loss_fn) << "\n";
        sample_seed = saved;
    }

    std::vector<size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), size_t(0));
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double loss = detail::run_epoch(corpus, order, rng, opt, cfg, loss_fn);
        if (log) *log << "epoch " << epoch << " loss " << loss << "\n";
    }
    ckpt.s2s.set_requires_grad(false);
    ckpt.vocab_predictor.set_requires_grad(false);
    return ckpt;
}

}  // namespace dverg
