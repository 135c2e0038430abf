// Emotion-conditioned sequence-to-sequence network: Bi-GRU encoder,
// additive attention, GRU decoder with an emotion embedding concatenated to
// every decoder input, and an output projection restricted to an active
// vocabulary (gathered rows, so cost scales with the active size).

#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "dverg/optim.hpp"
#include "dverg/param_store.hpp"
#include "dverg/tensor.hpp"
#include "dverg/vocab.hpp"

namespace dverg {

template <class T>
struct GruGates {
    Tensor<T> Wz, Uz, bz;  // update gate
    Tensor<T> Wr, Ur, br;  // reset gate
    Tensor<T> Wh, Uh, bh;  // candidate state

    static GruGates init(int in_dim, int hidden, std::mt19937& rng) {
        auto W = [&] { return Tensor<T>::xavier({hidden, in_dim}, rng); };
        auto U = [&] { return Tensor<T>::xavier({hidden, hidden}, rng); };
        auto b = [&] { return Tensor<T>::zeros({hidden}); };
        return GruGates{W(), U(), b(), W(), U(), b(), W(), U(), b()};
    }

    int hidden() const { return Wz.dim(0); }
    int input_dim() const { return Wz.dim(1); }

    std::vector<Tensor<T>> all() const { return {Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh}; }

    void attach(ParameterStore<T>& store, const std::string& prefix) const {
        store.add(prefix + "Wz", Wz);
        store.add(prefix + "Uz", Uz);
        store.add(prefix + "bz", bz);
        store.add(prefix + "Wr", Wr);
        store.add(prefix + "Ur", Ur);
        store.add(prefix + "br", br);
        store.add(prefix + "Wh", Wh);
        store.add(prefix + "Uh", Uh);
        store.add(prefix + "bh", bh);
    }

    static GruGates from_store(const ParameterStore<T>& s, const std::string& prefix) {
        return GruGates{s.at(prefix + "Wz"), s.at(prefix + "Uz"), s.at(prefix + "bz"),
                        s.at(prefix + "Wr"), s.at(prefix + "Ur"), s.at(prefix + "br"),
                        s.at(prefix + "Wh"), s.at(prefix + "Uh"), s.at(prefix + "bh")};
    }
};

// z = σ(Wz x + Uz h), r = σ(Wr x + Ur h), h̃ = tanh(Wh x + Uh (r⊙h)),
// h' = (1−z)⊙h + z⊙h̃
template <class T>
Tensor<T> gru_cell(const Tensor<T>& x, const Tensor<T>& h_prev, const GruGates<T>& g) {
    if (x.rank() != 1 || static_cast<int>(x.size()) != g.input_dim())
        throw std::invalid_argument("gru_cell: input dim mismatch");
    if (h_prev.rank() != 1 || static_cast<int>(h_prev.size()) != g.hidden())
        throw std::invalid_argument("gru_cell: state dim mismatch");
    Tensor<T> z = sigmoid(add(add(matvec(g.Wz, x), matvec(g.Uz, h_prev)), g.bz));
    Tensor<T> r = sigmoid(add(add(matvec(g.Wr, x), matvec(g.Ur, h_prev)), g.br));
    Tensor<T> cand = tanh(add(add(matvec(g.Wh, x), matvec(g.Uh, mul(r, h_prev))), g.bh));
    return add(mul(one_minus(z), h_prev), mul(z, cand));
}

template <class T>
struct Seq2SeqParams {
    Tensor<T> word_emb;     // [|V|, emb]
    Tensor<T> emotion_emb;  // [L, d_e]
    GruGates<T> enc_fwd;    // input emb, hidden H
    GruGates<T> enc_bwd;
    GruGates<T> dec;        // input emb + d_e + 2H, hidden H
    Tensor<T> attn_w;       // [H, H]  applied to the decoder state
    Tensor<T> attn_u;       // [H, 2H] applied to each annotation
    Tensor<T> attn_v;       // [H]
    Tensor<T> init_w;       // [H, 2H] encoder-final -> decoder-init
    Tensor<T> init_b;       // [H]
    Tensor<T> out_proj;     // [|V|, H]

    int hidden() const { return enc_fwd.hidden(); }
    int emb_dim() const { return word_emb.dim(1); }
    int emotion_dim() const { return emotion_emb.dim(1); }
    int vocab_size() const { return word_emb.dim(0); }
    int label_count() const { return emotion_emb.dim(0); }

    static Seq2SeqParams init(Tensor<T> word_emb, int labels, int hidden, int emotion_dim,
                              std::mt19937& rng) {
        int emb = word_emb.dim(1);
        int v = word_emb.dim(0);
        return Seq2SeqParams{
            std::move(word_emb),
            Tensor<T>::uniform({labels, emotion_dim}, T(-0.1), T(0.1), rng),
            GruGates<T>::init(emb, hidden, rng),
            GruGates<T>::init(emb, hidden, rng),
            GruGates<T>::init(emb + emotion_dim + 2 * hidden, hidden, rng),
            Tensor<T>::xavier({hidden, hidden}, rng),
            Tensor<T>::xavier({hidden, 2 * hidden}, rng),
            Tensor<T>::xavier({hidden}, rng),
            Tensor<T>::xavier({hidden, 2 * hidden}, rng),
            Tensor<T>::zeros({hidden}),
            Tensor<T>::xavier({v, hidden}, rng),
        };
    }

    std::vector<Tensor<T>> all() const {
        std::vector<Tensor<T>> out = {word_emb, emotion_emb};
        for (auto& t : enc_fwd.all()) out.push_back(t);
        for (auto& t : enc_bwd.all()) out.push_back(t);
        for (auto& t : dec.all()) out.push_back(t);
        for (auto& t : {attn_w, attn_u, attn_v, init_w, init_b, out_proj}) out.push_back(t);
        return out;
    }

    void set_requires_grad(bool on) {
        for (auto& t : all()) t.set_requires_grad(on);
    }

    void attach(ParameterStore<T>& store, const std::string& prefix) const {
        store.add(prefix + "word_emb", word_emb);
        store.add(prefix + "emotion_emb", emotion_emb);
        enc_fwd.attach(store, prefix + "enc_fwd.");
        enc_bwd.attach(store, prefix + "enc_bwd.");
        dec.attach(store, prefix + "dec.");
        store.add(prefix + "attn_w", attn_w);
        store.add(prefix + "attn_u", attn_u);
        store.add(prefix + "attn_v", attn_v);
        store.add(prefix + "init_w", init_w);
        store.add(prefix + "init_b", init_b);
        store.add(prefix + "out_proj", out_proj);
    }

    static Seq2SeqParams from_store(const ParameterStore<T>& s, const std::string& prefix) {
        return Seq2SeqParams{s.at(prefix + "word_emb"),
                             s.at(prefix + "emotion_emb"),
                             GruGates<T>::from_store(s, prefix + "enc_fwd."),
                             GruGates<T>::from_store(s, prefix + "enc_bwd."),
                             GruGates<T>::from_store(s, prefix + "dec."),
                             s.at(prefix + "attn_w"),
                             s.at(prefix + "attn_u"),
                             s.at(prefix + "attn_v"),
                             s.at(prefix + "init_w"),
                             s.at(prefix + "init_b"),
                             s.at(prefix + "out_proj")};
    }
};

template <class T>
struct EncoderOutput {
    Tensor<T> annotations;  // [T, 2H] forward‖backward per position
    Tensor<T> h;            // [2H] final forward ‖ final backward
};

// forward states left->right, backward states right->left, concatenated per
// position; h = [fwd_T ‖ bwd_1]
template <class T>
EncoderOutput<T> encode(const std::vector<int>& question, const Seq2SeqParams<T>& p) {
    if (question.empty()) throw std::invalid_argument("encode: empty input");
    const int n = static_cast<int>(question.size());
    Tensor<T> X = gather_rows(p.word_emb, question);  // [T, emb]
    std::vector<Tensor<T>> fwd(n), bwd(n);
    Tensor<T> h = Tensor<T>::zeros({p.hidden()});
    for (int t = 0; t < n; ++t) {
        h = gru_cell(row(X, t), h, p.enc_fwd);
        fwd[t] = h;
    }
    Tensor<T> hb = Tensor<T>::zeros({p.hidden()});
    for (int t = n - 1; t >= 0; --t) {
        hb = gru_cell(row(X, t), hb, p.enc_bwd);
        bwd[t] = hb;
    }
    std::vector<Tensor<T>> rows(n);
    for (int t = 0; t < n; ++t) rows[t] = concat<T>({fwd[t], bwd[t]});
    return {stack_rows(rows), concat<T>({fwd[n - 1], bwd[0]})};
}

// s0 = tanh(W h + b)
template <class T>
Tensor<T> decoder_init_state(const Tensor<T>& h, const Seq2SeqParams<T>& p) {
    return tanh(add(matvec(p.init_w, h), p.init_b));
}

template <class T>
struct Attention {
    Tensor<T> context;  // [2H]
    Tensor<T> weights;  // [T]
};

// Per-sequence precomputation of Ua·a_t for every annotation row.
template <class T>
struct AttentionContext {
    Tensor<T> annotations;  // [T, 2H]
    Tensor<T> projected;    // [T, H] = annotations · Uaᵀ

    AttentionContext(const Tensor<T>& ann, const Seq2SeqParams<T>& p)
        : annotations(ann), projected(matmul_nt(ann, p.attn_u)) {}
};

// score_t = vᵀ tanh(Wa s + Ua a_t); weights = softmax; context = Σ w_t a_t
template <class T>
Attention<T> attend(const Tensor<T>& state, const AttentionContext<T>& ctx,
                    const Seq2SeqParams<T>& p) {
    const int n = ctx.annotations.dim(0);
    Tensor<T> ws = matvec(p.attn_w, state);  // [H]
    std::vector<Tensor<T>> scores(n);
    for (int t = 0; t < n; ++t)
        scores[t] = dot(p.attn_v, tanh(add(ws, row(ctx.projected, t))));
    Tensor<T> weights = softmax(concat(scores));         // [T]
    Tensor<T> context = matvec_t(ctx.annotations, weights);  // [2H]
    return {context, weights};
}

template <class T>
Attention<T> attend(const Tensor<T>& state, const Tensor<T>& annotations,
                    const Seq2SeqParams<T>& p) {
    if (annotations.rank() != 2 || annotations.dim(0) < 1)
        throw std::invalid_argument("attend: annotations must be a non-empty matrix");
    return attend(state, AttentionContext<T>(annotations, p), p);
}

template <class T>
struct DecodeStep {
    Tensor<T> logits;  // over active ids, in their given order
    Tensor<T> state;   // [H]
};

// decoder input = [word_emb(prev) ‖ emotion_emb(e) ‖ context]; logits are
// computed only for the given active ids (full projection when they cover
// the whole vocabulary).
template <class T>
DecodeStep<T> decode_step(int prev_token, const Tensor<T>& state, const Tensor<T>& context,
                          int e, const Seq2SeqParams<T>& p, const std::vector<int>& active_ids) {
    if (prev_token < 0 || prev_token >= p.vocab_size())
        throw std::invalid_argument("decode_step: previous token outside vocabulary");
    if (e < 0 || e >= p.label_count())
        throw std::invalid_argument("decode_step: emotion id outside taxonomy");
    if (active_ids.empty()) throw std::invalid_argument("decode_step: empty active vocabulary");
    if (std::find(active_ids.begin(), active_ids.end(), Vocabulary::kEos) == active_ids.end())
        throw std::invalid_argument("decode_step: active vocabulary must contain EOS");

    Tensor<T> input = concat<T>(
        {row(p.word_emb, prev_token), row(p.emotion_emb, e), context});
    Tensor<T> next = gru_cell(input, state, p.dec);
    Tensor<T> logits = static_cast<int>(active_ids.size()) == p.vocab_size()
                           ? matvec(p.out_proj, next)
                           : matvec(gather_rows(p.out_proj, active_ids), next);
    return {logits, next};
}

}  // namespace dverg
