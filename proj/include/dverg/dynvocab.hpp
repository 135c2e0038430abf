// Per-input dynamic vocabulary: an MLP maps the encoder summary and the
// target emotion to an independent selection probability per content word;
// the active set is those above threshold (capped), plus every function and
// reserved id and any forced words.

#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dverg/param_store.hpp"
#include "dverg/tensor.hpp"
#include "dverg/vocab.hpp"

namespace dverg {

template <class T>
struct VocabPredictorParams {
    Tensor<T> hidden_w;  // [d_hid, 2H + d_e]
    Tensor<T> hidden_b;  // [d_hid]
    Tensor<T> out_w;     // [|content|, d_hid], row i scores content index i
    Tensor<T> out_b;     // [|content|]

    static VocabPredictorParams init(int content_count, int enc_dim, int emotion_dim,
                                     int hidden, std::mt19937& rng) {
        return VocabPredictorParams{Tensor<T>::xavier({hidden, enc_dim + emotion_dim}, rng),
                                    Tensor<T>::zeros({hidden}),
                                    Tensor<T>::xavier({content_count, hidden}, rng),
                                    Tensor<T>::zeros({content_count})};
    }

    int content_count() const { return out_w.dim(0); }

    std::vector<Tensor<T>> all() const { return {hidden_w, hidden_b, out_w, out_b}; }

    void set_requires_grad(bool on) {
        for (auto& t : all()) t.set_requires_grad(on);
    }

    void attach(ParameterStore<T>& store, const std::string& prefix) const {
        store.add(prefix + "hidden_w", hidden_w);
        store.add(prefix + "hidden_b", hidden_b);
        store.add(prefix + "out_w", out_w);
        store.add(prefix + "out_b", out_b);
    }

    static VocabPredictorParams from_store(const ParameterStore<T>& s,
                                           const std::string& prefix) {
        return VocabPredictorParams{s.at(prefix + "hidden_w"), s.at(prefix + "hidden_b"),
                                    s.at(prefix + "out_w"), s.at(prefix + "out_b")};
    }
};

// P_c = σ(out_c · relu(W [h ‖ emotion_emb(e)] + b) + b_c); independent per
// content word, indexed by content position.
template <class T>
Tensor<T> predict_vocab_probs(const Tensor<T>& h, int e, const Tensor<T>& emotion_emb,
                              const VocabPredictorParams<T>& params) {
    if (e < 0 || e >= emotion_emb.dim(0))
        throw std::invalid_argument("predict_vocab_probs: emotion id outside taxonomy");
    if (h.rank() != 1 ||
        static_cast<int>(h.size()) + emotion_emb.dim(1) != params.hidden_w.dim(1))
        throw std::invalid_argument("predict_vocab_probs: encoder state dim mismatch");
    Tensor<T> input = concat<T>({h, row(emotion_emb, e)});
    Tensor<T> z = relu(add(matvec(params.hidden_w, input), params.hidden_b));
    return sigmoid(add(matvec(params.out_w, z), params.out_b));
}

enum class ActiveWhy : uint8_t {
    kForcedFunction = 0,   // reserved or function word, always active
    kThreshold = 1,        // P_c >= tau and survived the cap
    kForcedQuestion = 2,   // content word of the question
    kForcedReference = 3,  // content word of a training reference
};

struct DynamicVocab {
    std::vector<int> active;        // sorted ascending
    std::vector<float> probs;       // P per content index (size |content|)
    std::vector<ActiveWhy> why;     // parallel to active

    bool contains(int id) const {
        return std::binary_search(active.begin(), active.end(), id);
    }
    int size() const { return static_cast<int>(active.size()); }
};

// active = reserved ∪ function ∪ question content ∪ {c : P_c ≥ tau}; the
// threshold portion is truncated to the cap highest-P words (cap 0 = no
// cap); forced words are exempt from the cap.
template <class T>
DynamicVocab build_dynamic_vocab(const Tensor<T>& P, const Vocabulary& vocab,
                                 const std::vector<int>& question, double tau, int cap,
                                 const std::vector<int>& forced_reference = {}) {
    if (tau < 0 || tau > 1) throw std::invalid_argument("build_dynamic_vocab: tau outside [0,1]");
    if (cap < 0) throw std::invalid_argument("build_dynamic_vocab: negative cap");
    if (static_cast<int>(P.size()) != vocab.content_count())
        throw std::invalid_argument("build_dynamic_vocab: P size != content count");

    std::vector<ActiveWhy> why_of(vocab.size(), ActiveWhy::kForcedFunction);
    std::vector<char> in(vocab.size(), 0);
    for (int id = 0; id < vocab.size(); ++id)
        if (Vocabulary::is_reserved(id) || vocab.is_function(id)) in[id] = 1;

    auto force = [&](const std::vector<int>& ids, ActiveWhy why) {
        for (int id : ids) {
            if (id < 0 || id >= vocab.size() || !vocab.is_content(id)) continue;
            if (!in[id]) {
                in[id] = 1;
                why_of[id] = why;
            }
        }
    };
    force(question, ActiveWhy::kForcedQuestion);
    force(forced_reference, ActiveWhy::kForcedReference);

    // content ids passing the threshold, by descending P (ties: smaller id)
    const auto& content = vocab.content_ids();
    std::vector<int> passing;  // content indices
    for (int ci = 0; ci < static_cast<int>(content.size()); ++ci)
        if (static_cast<double>(P.data()[ci]) >= tau) passing.push_back(ci);
    std::stable_sort(passing.begin(), passing.end(), [&](int a, int b) {
        if (P.data()[a] != P.data()[b]) return P.data()[a] > P.data()[b];
        return a < b;
    });
    // truncate the threshold set itself to its cap highest-P members;
    // forced words are added above regardless and keep their provenance
    int taken = 0;
    for (int ci : passing) {
        if (cap > 0 && taken >= cap) break;
        ++taken;
        int id = content[ci];
        if (!in[id]) {
            in[id] = 1;
            why_of[id] = ActiveWhy::kThreshold;
        }
    }

    DynamicVocab dv;
    dv.probs.resize(content.size());
    for (size_t ci = 0; ci < content.size(); ++ci)
        dv.probs[ci] = static_cast<float>(P.data()[ci]);
    for (int id = 0; id < vocab.size(); ++id) {
        if (!in[id]) continue;
        dv.active.push_back(id);
        dv.why.push_back(why_of[id]);
    }
    return dv;
}

// Binary cross-entropy over content-word selection: targets are 1 for
// content words present in the reference and 0 for sampled negatives
// (neg_ratio per positive, without replacement; neg_ratio 0 = all
// negatives). Mean over the selected terms.
template <class T>
Tensor<T> vocab_loss(const Tensor<T>& P, const std::vector<int>& reference,
                     const Vocabulary& vocab, int neg_ratio, uint64_t seed) {
    if (reference.empty()) throw std::invalid_argument("vocab_loss: empty reference");
    if (static_cast<int>(P.size()) != vocab.content_count())
        throw std::invalid_argument("vocab_loss: P size != content count");

    std::set<int> pos_set;
    for (int id : reference) {
        int ci = vocab.content_index_of(id);
        if (ci >= 0) pos_set.insert(ci);
    }
    std::vector<int> positives(pos_set.begin(), pos_set.end());

    std::vector<int> negatives;
    std::vector<int> pool;
    for (int ci = 0; ci < vocab.content_count(); ++ci)
        if (!pos_set.count(ci)) pool.push_back(ci);
    size_t want = neg_ratio <= 0 || positives.empty()
                      ? pool.size()
                      : std::min(pool.size(), positives.size() * static_cast<size_t>(neg_ratio));
    if (want >= pool.size()) {
        negatives = pool;
    } else {
        std::mt19937 rng(static_cast<uint32_t>(seed));
        for (size_t i = 0; i < want; ++i) {  // partial Fisher-Yates, no replacement
            std::uniform_int_distribution<size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
            negatives.push_back(pool[i]);
        }
    }

    std::vector<int> indices = positives;
    std::vector<uint8_t> targets(positives.size(), uint8_t(1));
    indices.insert(indices.end(), negatives.begin(), negatives.end());
    targets.insert(targets.end(), negatives.size(), uint8_t(0));
    if (indices.empty())
        throw std::invalid_argument("vocab_loss: no content words to score");
    return bce_indexed(P, indices, targets);
}

}  // namespace dverg
