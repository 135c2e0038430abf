// Response generation: per-input dynamic vocabulary construction followed by
// greedy or beam decoding (length-normalized scores; the greedy sequence is
// always kept as a candidate, so beam never scores below it).

#pragma once

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "dverg/dynvocab.hpp"
#include "dverg/seq2seq.hpp"

namespace dverg {

struct GenerationConfig {
    enum class Mode { kGreedy, kBeam };
    Mode mode = Mode::kGreedy;
    int beam_width = 4;
    int max_length = 30;
    bool dynamic_vocab = true;  // false = full static vocabulary baseline
    double tau = 0.5;
    int cap = 0;  // 0 = no cap
    uint64_t seed = 0;

    void validate() const {
        if (beam_width < 1) throw std::invalid_argument("generation: beam width must be >= 1");
        if (max_length < 1) throw std::invalid_argument("generation: max length must be >= 1");
        if (tau < 0 || tau > 1) throw std::invalid_argument("generation: tau outside [0,1]");
        if (cap < 0) throw std::invalid_argument("generation: negative cap");
    }
};

struct StageTimings {
    double encode_ms = 0;
    double vocab_ms = 0;   // predictor + active-set construction
    double decode_ms = 0;  // attention + decoder steps + projection
    int decode_steps = 0;

    double total_ms() const { return encode_ms + vocab_ms + decode_ms; }
};

struct GenerationResult {
    std::vector<int> tokens;  // response ids; EOS not included
    DynamicVocab vocab_used;
    double score = 0;  // length-normalized log-probability
    StageTimings timings;
};

namespace detail {

template <class T>
std::vector<double> log_softmax_values(const Tensor<T>& logits) {
    const auto& x = logits.data();
    double m = -std::numeric_limits<double>::infinity();
    for (T v : x) m = std::max(m, double(v));
    double lse = 0;
    for (T v : x) lse += std::exp(double(v) - m);
    lse = m + std::log(lse);
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = double(x[i]) - lse;
    return out;
}

inline double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct Scored {
    std::vector<int> tokens;
    double sum_lp = 0;
    int decisions = 0;  // emitted tokens plus the EOS decision if taken

    double normalized() const { return decisions > 0 ? sum_lp / decisions : 0; }
};

// deterministic preference: normalized score, then raw sum, then shorter,
// then lexicographically smaller
inline bool better(const Scored& a, const Scored& b) {
    if (a.normalized() != b.normalized()) return a.normalized() > b.normalized();
    if (a.sum_lp != b.sum_lp) return a.sum_lp > b.sum_lp;
    if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
    return a.tokens < b.tokens;
}

template <class T>
Scored greedy_decode(const EncoderOutput<T>& enc, const AttentionContext<T>& actx, int e,
                     const Seq2SeqParams<T>& p, const std::vector<int>& active,
                     const GenerationConfig& cfg, int* steps = nullptr) {
    Scored out;
    Tensor<T> state = decoder_init_state(enc.h, p);
    int prev = Vocabulary::kBos;
    for (int t = 0; t < cfg.max_length; ++t) {
        auto att = attend(state, actx, p);
        auto step = decode_step(prev, state, att.context, e, p, active);
        if (steps) ++*steps;
        auto lp = log_softmax_values(step.logits);
        size_t best = 0;
        for (size_t i = 1; i < lp.size(); ++i)
            if (lp[i] > lp[best]) best = i;
        out.sum_lp += lp[best];
        ++out.decisions;
        int token = active[best];
        if (token == Vocabulary::kEos) return out;
        out.tokens.push_back(token);
        state = step.state;
        prev = token;
    }
    return out;
}

template <class T>
Scored beam_decode(const EncoderOutput<T>& enc, const AttentionContext<T>& actx, int e,
                   const Seq2SeqParams<T>& p, const std::vector<int>& active,
                   const GenerationConfig& cfg, int* steps) {
    struct Hyp {
        std::vector<int> tokens;
        Tensor<T> state;
        int prev = Vocabulary::kBos;
        double sum_lp = 0;
    };
    const int width = cfg.beam_width;
    std::vector<Hyp> live;
    live.push_back({{}, decoder_init_state(enc.h, p), Vocabulary::kBos, 0});
    std::vector<Scored> finished;

    for (int t = 0; t < cfg.max_length && !live.empty(); ++t) {
        struct Cand {
            size_t parent;
            size_t idx;  // into active
            double sum_lp;
        };
        std::vector<Cand> cands;
        std::vector<Tensor<T>> states(live.size());
        for (size_t hi = 0; hi < live.size(); ++hi) {
            auto att = attend(live[hi].state, actx, p);
            auto step = decode_step(live[hi].prev, live[hi].state, att.context, e, p, active);
            if (steps) ++*steps;
            states[hi] = step.state;
            auto lp = log_softmax_values(step.logits);
            // only the top `width` continuations of one hypothesis can survive
            std::vector<size_t> order(lp.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = i;
            size_t keep = std::min<size_t>(width, order.size());
            std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                              [&](size_t a, size_t b) {
                                  if (lp[a] != lp[b]) return lp[a] > lp[b];
                                  return a < b;
                              });
            for (size_t k = 0; k < keep; ++k)
                cands.push_back({hi, order[k], live[hi].sum_lp + lp[order[k]]});
        }
        std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.sum_lp != b.sum_lp) return a.sum_lp > b.sum_lp;
            if (a.parent != b.parent) return a.parent < b.parent;
            return a.idx < b.idx;
        });
        std::vector<Hyp> next;
        for (const Cand& c : cands) {
            if (static_cast<int>(next.size()) >= width) break;
            const Hyp& parent = live[c.parent];
            int token = active[c.idx];
            if (token == Vocabulary::kEos) {
                finished.push_back({parent.tokens, c.sum_lp,
                                    static_cast<int>(parent.tokens.size()) + 1});
            } else {
                Hyp h{parent.tokens, states[c.parent], token, c.sum_lp};
                h.tokens.push_back(token);
                next.push_back(std::move(h));
            }
        }
        live = std::move(next);
    }
    for (const Hyp& h : live)
        if (!h.tokens.empty())
            finished.push_back({h.tokens, h.sum_lp, static_cast<int>(h.tokens.size())});

    Scored best;
    bool have = false;
    for (const Scored& s : finished) {
        if (!have || better(s, best)) {
            best = s;
            have = true;
        }
    }
    if (!have) best = Scored{};  // degenerate: empty response
    return best;
}

}  // namespace detail

inline DynamicVocab full_vocab_active(const Vocabulary& vocab) {
    DynamicVocab dv;
    dv.active.resize(vocab.size());
    dv.why.resize(vocab.size());
    for (int id = 0; id < vocab.size(); ++id) {
        dv.active[id] = id;
        dv.why[id] = vocab.is_content(id) ? ActiveWhy::kThreshold : ActiveWhy::kForcedFunction;
    }
    return dv;
}

// Builds the active vocabulary once from ⟨h, e⟩ (or uses the full static
// vocabulary), then decodes. Pure given (params, inputs, config).
template <class T>
GenerationResult generate(const std::vector<int>& question, int e, const Seq2SeqParams<T>& params,
                          std::type_identity_t<const VocabPredictorParams<T>*> predictor,
                          const Vocabulary& vocab, const GenerationConfig& cfg) {
    cfg.validate();
    if (cfg.dynamic_vocab && predictor == nullptr)
        throw std::invalid_argument("generate: dynamic vocabulary requested without a predictor");

    GenerationResult out;
    double t0 = detail::now_ms();
    auto enc = encode(question, params);
    double t1 = detail::now_ms();
    if (cfg.dynamic_vocab) {
        auto P = predict_vocab_probs(enc.h, e, params.emotion_emb, *predictor);
        out.vocab_used = build_dynamic_vocab(P, vocab, question, cfg.tau, cfg.cap);
    } else {
        out.vocab_used = full_vocab_active(vocab);
    }
    double t2 = detail::now_ms();

    AttentionContext<T> actx(enc.annotations, params);
    detail::Scored chosen =
        detail::greedy_decode(enc, actx, e, params, out.vocab_used.active, cfg,
                              &out.timings.decode_steps);
    if (cfg.mode == GenerationConfig::Mode::kBeam) {
        detail::Scored beam = detail::beam_decode(enc, actx, e, params, out.vocab_used.active,
                                                  cfg, &out.timings.decode_steps);
        if (beam.decisions > 0 && detail::better(beam, chosen)) chosen = beam;
    }
    double t3 = detail::now_ms();

    out.tokens = std::move(chosen.tokens);
    out.score = chosen.normalized();
    out.timings.encode_ms = t1 - t0;
    out.timings.vocab_ms = t2 - t1;
    out.timings.decode_ms = t3 - t2;
    return out;
}

}  // namespace dverg
