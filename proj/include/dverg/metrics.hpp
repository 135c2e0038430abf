// Evaluation metrics: sentence/corpus BLEU-2, distinct n-gram ratios,
// embedding-based similarity (greedy / average / extreme), reference-word
// recall against an active vocabulary, and mean active-vocabulary size.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dverg/dynvocab.hpp"
#include "dverg/tensor.hpp"
#include "dverg/vocab.hpp"

namespace dverg {

struct MetricsReport {
    double bleu2 = 0;
    double recall = 0;
    double voc_size_mean = 0;
    double distinct1 = 0;
    double distinct2 = 0;
    double greedy = 0;
    double average = 0;
    double extreme = 0;
    int pair_count = 0;            // pairs scored by bleu/recall/voc_size
    int embedding_pair_count = 0;  // pairs with known tokens on both sides
};

namespace detail {

inline std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& toks,
                                                            int n) {
    std::map<std::vector<std::string>, int> out;
    if (static_cast<int>(toks.size()) < n) return out;
    for (size_t i = 0; i + n <= toks.size(); ++i)
        ++out[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
    return out;
}

// modified precision: candidate counts clipped by the max reference count;
// a zero match count is add-1 smoothed
inline double modified_precision(const std::vector<std::string>& cand,
                                 const std::vector<std::vector<std::string>>& refs, int n) {
    auto cc = ngram_counts(cand, n);
    long total = 0, matched = 0;
    for (const auto& [gram, count] : cc) total += count;
    for (const auto& [gram, count] : cc) {
        int best = 0;
        for (const auto& ref : refs) {
            auto rc = ngram_counts(ref, n);
            auto it = rc.find(gram);
            if (it != rc.end()) best = std::max(best, it->second);
        }
        matched += std::min<long>(count, best);
    }
    if (matched == 0) return double(matched + 1) / double(total + 1);
    return double(matched) / double(total);
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        num += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    double denom = std::sqrt(na) * std::sqrt(nb);
    return denom > 0 ? num / denom : 0.0;
}

// embedding rows of the in-vocabulary tokens, as doubles
template <class T>
std::vector<std::vector<double>> known_rows(const std::vector<std::string>& tokens,
                                            const Vocabulary& vocab, const Tensor<T>& word_emb) {
    const int d = word_emb.dim(1);
    std::vector<std::vector<double>> out;
    for (const auto& tok : tokens) {
        if (!vocab.contains(tok)) continue;
        int id = vocab.id_of(tok);
        std::vector<double> row(d);
        for (int j = 0; j < d; ++j) row[j] = double(word_emb.data()[size_t(id) * d + j]);
        out.push_back(std::move(row));
    }
    return out;
}

inline std::vector<double> mean_vector(const std::vector<std::vector<double>>& rows) {
    std::vector<double> m(rows.front().size(), 0.0);
    for (const auto& r : rows)
        for (size_t j = 0; j < m.size(); ++j) m[j] += r[j];
    for (double& v : m) v /= double(rows.size());
    return m;
}

// per-dimension entry of largest magnitude, sign preserved
inline std::vector<double> extreme_vector(const std::vector<std::vector<double>>& rows) {
    std::vector<double> m(rows.front().size(), 0.0);
    for (const auto& r : rows)
        for (size_t j = 0; j < m.size(); ++j)
            if (std::abs(r[j]) > std::abs(m[j])) m[j] = r[j];
    return m;
}

inline double greedy_direction(const std::vector<std::vector<double>>& from,
                               const std::vector<std::vector<double>>& to) {
    double sum = 0;
    for (const auto& f : from) {
        double best = -1;
        for (const auto& t : to) best = std::max(best, cosine(f, t));
        sum += best;
    }
    return sum / double(from.size());
}

}  // namespace detail

// Geometric mean of modified 1- and 2-gram precisions times the brevity
// penalty against the closest reference length (shorter wins ties).
inline double bleu2(const std::vector<std::string>& candidate,
                    const std::vector<std::vector<std::string>>& references) {
    if (references.empty()) throw std::invalid_argument("bleu2: no references");
    if (candidate.empty()) return 0.0;
    double p1 = detail::modified_precision(candidate, references, 1);
    double p2 = detail::modified_precision(candidate, references, 2);
    long c = static_cast<long>(candidate.size());
    long r = static_cast<long>(references.front().size());
    for (const auto& ref : references) {
        long len = static_cast<long>(ref.size());
        if (std::labs(len - c) < std::labs(r - c) || (std::labs(len - c) == std::labs(r - c) &&
                                                      len < r))
            r = len;
    }
    double bp = c >= r ? 1.0 : std::exp(1.0 - double(r) / double(c));
    return std::sqrt(p1 * p2) * bp;
}

// mean sentence score
inline double corpus_bleu2(const std::vector<std::vector<std::string>>& candidates,
                           const std::vector<std::vector<std::vector<std::string>>>& references) {
    if (candidates.size() != references.size())
        throw std::invalid_argument("corpus_bleu2: candidate/reference count mismatch");
    if (candidates.empty()) throw std::invalid_argument("corpus_bleu2: no pairs");
    double s = 0;
    for (size_t i = 0; i < candidates.size(); ++i) s += bleu2(candidates[i], references[i]);
    return s / double(candidates.size());
}

// distinct n-grams across all candidates / total n-grams; 0 when empty
inline double distinct_n(const std::vector<std::vector<std::string>>& candidates, int n) {
    if (n != 1 && n != 2) throw std::invalid_argument("distinct_n: n must be 1 or 2");
    std::set<std::vector<std::string>> seen;
    long total = 0;
    for (const auto& cand : candidates) {
        for (const auto& [gram, count] : detail::ngram_counts(cand, n)) {
            seen.insert(gram);
            total += count;
        }
    }
    return total > 0 ? double(seen.size()) / double(total) : 0.0;
}

struct EmbeddingScores {
    double greedy = 0;
    double average = 0;
    double extreme = 0;
};

// Tokens without an embedding row are dropped; both sides must keep at least
// one token.
template <class T>
EmbeddingScores embedding_metrics(const std::vector<std::string>& candidate,
                                  const std::vector<std::string>& reference,
                                  const Vocabulary& vocab, const Tensor<T>& word_emb) {
    auto c = detail::known_rows(candidate, vocab, word_emb);
    auto r = detail::known_rows(reference, vocab, word_emb);
    if (c.empty() || r.empty())
        throw std::invalid_argument("embedding_metrics: no in-vocabulary tokens on one side");
    EmbeddingScores s;
    s.average = detail::cosine(detail::mean_vector(c), detail::mean_vector(r));
    s.greedy = 0.5 * (detail::greedy_direction(c, r) + detail::greedy_direction(r, c));
    s.extreme = detail::cosine(detail::extreme_vector(c), detail::extreme_vector(r));
    return s;
}

// Fraction of reference ids found in the active set; ids mapped to UNK count
// as misses (the word itself is not representable).
inline double word_recall(const DynamicVocab& dv, const std::vector<int>& reference_ids) {
    if (reference_ids.empty()) throw std::invalid_argument("word_recall: empty reference");
    std::set<int> active(dv.active.begin(), dv.active.end());
    long hit = 0;
    for (int id : reference_ids)
        if (id != Vocabulary::kUnk && active.count(id)) ++hit;
    return double(hit) / double(reference_ids.size());
}

inline double voc_size(const std::vector<DynamicVocab>& dvs) {
    if (dvs.empty()) throw std::invalid_argument("voc_size: no vocabularies");
    double s = 0;
    for (const auto& dv : dvs) s += double(dv.active.size());
    return s / double(dvs.size());
}

// One generated response held against its reference and the active
// vocabulary that produced it.
struct EvalExample {
    std::vector<std::string> candidate;
    std::vector<std::string> reference;
    std::vector<int> active;
};

template <class T>
MetricsReport evaluate(const std::vector<EvalExample>& pairs, const Vocabulary& vocab,
                       const Tensor<T>& word_emb) {
    if (pairs.empty()) throw std::invalid_argument("evaluate: no pairs");
    MetricsReport rep;
    rep.pair_count = static_cast<int>(pairs.size());
    std::vector<std::vector<std::string>> cands;
    double recall_sum = 0, voc_sum = 0;
    for (const auto& p : pairs) {
        cands.push_back(p.candidate);
        rep.bleu2 += bleu2(p.candidate, {p.reference});
        DynamicVocab dv;
        dv.active = p.active;
        recall_sum += word_recall(dv, vocab.encode(p.reference));
        voc_sum += double(p.active.size());
        try {
            auto s = embedding_metrics(p.candidate, p.reference, vocab, word_emb);
            rep.greedy += s.greedy;
            rep.average += s.average;
            rep.extreme += s.extreme;
            ++rep.embedding_pair_count;
        } catch (const std::invalid_argument&) {
            // no in-vocabulary tokens on one side: pair skipped for the
            // embedding scores only
        }
    }
    rep.bleu2 /= rep.pair_count;
    rep.recall = recall_sum / rep.pair_count;
    rep.voc_size_mean = voc_sum / rep.pair_count;
    rep.distinct1 = distinct_n(cands, 1);
    rep.distinct2 = distinct_n(cands, 2);
    if (rep.embedding_pair_count > 0) {
        rep.greedy /= rep.embedding_pair_count;
        rep.average /= rep.embedding_pair_count;
        rep.extreme /= rep.embedding_pair_count;
    }
    return rep;
}

inline void to_json(nlohmann::json& j, const MetricsReport& r) {
    j = nlohmann::json{{"bleu2", r.bleu2},
                       {"recall", r.recall},
                       {"voc_size_mean", r.voc_size_mean},
                       {"distinct1", r.distinct1},
                       {"distinct2", r.distinct2},
                       {"greedy", r.greedy},
                       {"average", r.average},
                       {"extreme", r.extreme},
                       {"pair_count", r.pair_count},
                       {"embedding_pair_count", r.embedding_pair_count}};
}

inline std::string format_table(const MetricsReport& r) {
    const char* names[] = {"BLEU-2",  "Recall",  "VocSize",   "Greedy",
                           "Average", "Extreme", "Distinct1", "Distinct2"};
    double values[] = {r.bleu2,   r.recall,  r.voc_size_mean, r.greedy,
                       r.average, r.extreme, r.distinct1,     r.distinct2};
    std::ostringstream out;
    out << std::left;
    for (const char* n : names) out << std::setw(11) << n;
    out << "\n";
    for (int i = 0; i < 8; ++i) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(i == 2 ? 1 : 4) << values[i];
        out << std::setw(11) << cell.str();
    }
    out << "\n";
    return out.str();
}

}  // namespace dverg
