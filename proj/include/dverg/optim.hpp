// Adam optimizer with global-gradient-norm clipping, plus the shared
// training configuration.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dverg/tensor.hpp"

namespace dverg {

enum class FinetuneMode { kNone, kTarget, kBoth };

inline FinetuneMode parse_finetune_mode(const std::string& s) {
    if (s == "NO-ft" || s == "no-ft") return FinetuneMode::kNone;
    if (s == "ft-target") return FinetuneMode::kTarget;
    if (s == "ft-both") return FinetuneMode::kBoth;
    throw std::invalid_argument("unknown fine-tune mode '" + s +
                                "' (expected NO-ft, ft-target, or ft-both)");
}

inline std::string to_string(FinetuneMode m) {
    switch (m) {
        case FinetuneMode::kNone: return "NO-ft";
        case FinetuneMode::kTarget: return "ft-target";
        default: return "ft-both";
    }
}

struct TrainConfig {
    double learning_rate = 0.001;
    int epochs = 10;
    int batch_size = 32;
    uint64_t seed = 1;
    int hidden_size = 128;
    int embedding_dim = 300;
    int emotion_dim = 32;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    FinetuneMode finetune_mode = FinetuneMode::kBoth;
    double joint_loss_weight = 1.0;  // λ on the vocabulary loss
    double grad_clip_norm = 5.0;
    int neg_ratio = -1;  // negatives per positive in the vocab loss; -1 = auto
    double tau = 0.5;    // selection threshold for the fine-tune-time vocabulary
    int cap = 0;         // active-size cap during fine-tune (0 = none)

    void validate() const {
        if (learning_rate <= 0) throw std::invalid_argument("config: learning rate must be > 0");
        if (epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
        if (batch_size <= 0) throw std::invalid_argument("config: batch size must be > 0");
        if (hidden_size <= 0 || embedding_dim <= 0 || emotion_dim <= 0)
            throw std::invalid_argument("config: model dims must be > 0");
        if (grad_clip_norm <= 0) throw std::invalid_argument("config: clip norm must be > 0");
        if (joint_loss_weight < 0)
            throw std::invalid_argument("config: joint-loss weight must be >= 0");
        if (tau < 0 || tau > 1) throw std::invalid_argument("config: tau outside [0,1]");
        if (cap < 0) throw std::invalid_argument("config: negative cap");
    }
};

// Scales gradients in place so their global L2 norm is at most max_norm;
// returns the pre-clip norm.
template <class T>
double clip_global_norm(const std::vector<Tensor<T>>& params, double max_norm) {
    double sq = 0;
    for (const auto& p : params) {
        const auto& g = p.node()->grad;
        for (T v : g) sq += double(v) * double(v);
    }
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0) {
        T s = static_cast<T>(max_norm / norm);
        for (const auto& p : params)
            for (T& v : p.node()->grad) v *= s;
    }
    return norm;
}

// First/second-moment state lives in double regardless of the parameter
// scalar type, so update order is the only source of rounding.
template <class T>
class Adam {
public:
    Adam(std::vector<Tensor<T>> params, const TrainConfig& cfg)
        : params_(std::move(params)),
          lr_(cfg.learning_rate),
          beta1_(cfg.adam_beta1),
          beta2_(cfg.adam_beta2),
          eps_(cfg.adam_eps) {
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (const auto& p : params_) {
            m_.emplace_back(p.size(), 0.0);
            v_.emplace_back(p.size(), 0.0);
        }
    }

    const std::vector<Tensor<T>>& params() const { return params_; }

    void zero_grads() {
        for (auto& p : params_) p.zero_grad();
    }

    void step() {
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, t_);
        double bc2 = 1.0 - std::pow(beta2_, t_);
        for (size_t i = 0; i < params_.size(); ++i) {
            auto node = params_[i].node();
            node->ensure_grad();
            auto& data = node->data;
            auto& grad = node->grad;
            auto& m = m_[i];
            auto& v = v_[i];
            for (size_t k = 0; k < data.size(); ++k) {
                double g = grad[k];
                m[k] = beta1_ * m[k] + (1.0 - beta1_) * g;
                v[k] = beta2_ * v[k] + (1.0 - beta2_) * g * g;
                double update = lr_ * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps_);
                data[k] = static_cast<T>(double(data[k]) - update);
            }
        }
    }

private:
    std::vector<Tensor<T>> params_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace dverg
