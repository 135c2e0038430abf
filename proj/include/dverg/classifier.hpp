// Label-embedding-attentive question emotion classifier: cosine
// label/token compatibility, max-over-labels token attention, weighted
// token-embedding feature, small MLP head.

#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "dverg/emotion.hpp"
#include "dverg/optim.hpp"
#include "dverg/param_store.hpp"
#include "dverg/tensor.hpp"

namespace dverg {

template <class T>
struct ClassifierParams {
    Tensor<T> label_emb;  // [L, d] one embedding per taxonomy label
    Tensor<T> proj_w;     // [h, d]
    Tensor<T> proj_b;     // [h]
    Tensor<T> out_w;      // [L, h]
    Tensor<T> out_b;      // [L]

    static ClassifierParams init(int labels, int emb_dim, int hidden, std::mt19937& rng) {
        ClassifierParams p{
            Tensor<T>::xavier({labels, emb_dim}, rng),
            Tensor<T>::xavier({hidden, emb_dim}, rng),
            Tensor<T>::zeros({hidden}),
            Tensor<T>::xavier({labels, hidden}, rng),
            Tensor<T>::zeros({labels}),
        };
        return p;
    }

    std::vector<Tensor<T>> all() const { return {label_emb, proj_w, proj_b, out_w, out_b}; }

    void set_requires_grad(bool on) {
        for (auto& t : all()) t.set_requires_grad(on);
    }

    void attach(ParameterStore<T>& store, const std::string& prefix) const {
        store.add(prefix + "label_emb", label_emb);
        store.add(prefix + "proj_w", proj_w);
        store.add(prefix + "proj_b", proj_b);
        store.add(prefix + "out_w", out_w);
        store.add(prefix + "out_b", out_b);
    }

    static ClassifierParams from_store(const ParameterStore<T>& store, const std::string& prefix) {
        return ClassifierParams{store.at(prefix + "label_emb"), store.at(prefix + "proj_w"),
                                store.at(prefix + "proj_b"), store.at(prefix + "out_w"),
                                store.at(prefix + "out_b")};
    }
};

template <class T>
struct ClassifierTrace {
    Tensor<T> attention;  // [T] token attention weights (sum to 1)
    Tensor<T> probs;      // [L] label distribution
};

namespace detail {

template <class T>
struct ClassifierForward {
    Tensor<T> attention;
    Tensor<T> logits;
};

template <class T>
ClassifierForward<T> classifier_forward(const std::vector<int>& question,
                                        const ClassifierParams<T>& params,
                                        const Tensor<T>& embeddings) {
    if (question.empty()) throw std::invalid_argument("classify_emotion: empty question");
    Tensor<T> X = gather_rows(embeddings, question);        // [T, d]
    Tensor<T> G = matmul_nt(l2_normalize_rows(params.label_emb),
                            l2_normalize_rows(X));          // [L, T] cosine compatibility
    Tensor<T> attn = softmax(col_max(G));                   // [T]
    Tensor<T> feature = matvec_t(X, attn);                  // [d] weighted token mean
    Tensor<T> z = relu(add(matvec(params.proj_w, feature), params.proj_b));
    Tensor<T> logits = add(matvec(params.out_w, z), params.out_b);
    return {attn, logits};
}

}  // namespace detail

template <class T>
ClassifierTrace<T> classify_emotion_traced(const std::vector<int>& question,
                                           const ClassifierParams<T>& params,
                                           const Tensor<T>& embeddings) {
    auto fwd = detail::classifier_forward(question, params, embeddings);
    return {fwd.attention, softmax(fwd.logits)};
}

template <class T>
Tensor<T> classify_emotion(const std::vector<int>& question, const ClassifierParams<T>& params,
                           const Tensor<T>& embeddings) {
    return classify_emotion_traced(question, params, embeddings).probs;
}

template <class T>
Tensor<T> classifier_loss(const std::vector<int>& question, int label,
                          const ClassifierParams<T>& params, const Tensor<T>& embeddings) {
    return nll(detail::classifier_forward(question, params, embeddings).logits, label);
}

struct LabeledQuestion {
    std::vector<int> question;
    int label = 0;
};

struct ClassifierTrainResult {
    double final_loss = 0;
};

// Cross-entropy training with the shared Adam/clip settings. Every taxonomy
// label must be represented; epoch 0 logs the loss at initialization.
template <class T>
ClassifierTrainResult train_classifier(const std::vector<LabeledQuestion>& data,
                                       const EmotionTaxonomy& tax, ClassifierParams<T>& params,
                                       const Tensor<T>& embeddings, const TrainConfig& cfg,
                                       std::ostream* log = nullptr) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("train_classifier: empty dataset");
    std::vector<bool> seen(tax.size(), false);
    for (const auto& ex : data) {
        if (ex.label < 0 || ex.label >= tax.size())
            throw std::invalid_argument("train_classifier: label id " +
                                        std::to_string(ex.label) + " outside taxonomy");
        seen[ex.label] = true;
    }
    for (int l = 0; l < tax.size(); ++l)
        if (!seen[l])
            throw std::invalid_argument("train_classifier: label '" + tax.label(l) +
                                        "' has no training examples");

    params.set_requires_grad(true);
    Adam<T> opt(params.all(), cfg);
    std::mt19937 rng(static_cast<uint32_t>(cfg.seed));

    auto eval_mean = [&] {
        double s = 0;
        for (const auto& ex : data)
            s += double(classifier_loss(ex.question, ex.label, params, embeddings).value());
        return s / data.size();
    };

    double last = eval_mean();
    if (log) *log << "epoch 0 loss " << last << "\n";

    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t(0));
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_sum = 0;
        size_t done = 0;
        while (done < order.size()) {
            size_t take = std::min<size_t>(cfg.batch_size, order.size() - done);
            opt.zero_grads();
            Tensor<T> batch_loss = Tensor<T>::scalar(T(0));
            for (size_t k = 0; k < take; ++k) {
                const auto& ex = data[order[done + k]];
                batch_loss = add(batch_loss,
                                 classifier_loss(ex.question, ex.label, params, embeddings));
            }
            batch_loss = scale(batch_loss, T(1.0 / take));
            backward(batch_loss);
            clip_global_norm(opt.params(), cfg.grad_clip_norm);
            opt.step();
            epoch_sum += double(batch_loss.value()) * take;
            done += take;
        }
        last = epoch_sum / data.size();
        if (log) *log << "epoch " << epoch << " loss " << last << "\n";
    }
    params.set_requires_grad(false);
    return {last};
}

}  // namespace dverg
