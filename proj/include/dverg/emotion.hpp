// Emotion label taxonomy, question->response emotion mapping, and sampling.

#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dverg {

inline std::string trim_copy(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline const std::string kNeutralLabel = "non-emotional";

class EmotionTaxonomy {
public:
    explicit EmotionTaxonomy(std::vector<std::string> labels) : labels_(std::move(labels)) {
        if (labels_.empty()) throw std::invalid_argument("EmotionTaxonomy: no labels");
        for (size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i].empty())
                throw std::invalid_argument("EmotionTaxonomy: empty label");
            if (!ids_.emplace(labels_[i], static_cast<int>(i)).second)
                throw std::invalid_argument("EmotionTaxonomy: duplicate label " + labels_[i]);
        }
        if (!ids_.count(kNeutralLabel))
            throw std::invalid_argument("EmotionTaxonomy: missing required label " + kNeutralLabel);
    }

    static EmotionTaxonomy defaults() {
        return EmotionTaxonomy({kNeutralLabel, "satisfied", "aggrieved", "regretful", "abusing",
                                "grateful"});
    }

    // one label per line; blank lines and '#' comments skipped
    static EmotionTaxonomy parse(std::istream& in) {
        std::vector<std::string> labels;
        std::string line;
        while (std::getline(in, line)) {
            std::string t = trim_copy(line);
            if (t.empty() || t[0] == '#') continue;
            labels.push_back(t);
        }
        return EmotionTaxonomy(std::move(labels));
    }

    static EmotionTaxonomy load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("EmotionTaxonomy: cannot open " + path);
        return parse(in);
    }

    int size() const { return static_cast<int>(labels_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }

    const std::string& label(int id) const {
        if (id < 0 || id >= size()) throw std::out_of_range("EmotionTaxonomy: id out of range");
        return labels_[id];
    }

    std::optional<int> find(const std::string& label) const {
        auto it = ids_.find(label);
        if (it == ids_.end()) return std::nullopt;
        return it->second;
    }

    int id_of(const std::string& label) const {
        auto it = ids_.find(label);
        if (it == ids_.end())
            throw std::invalid_argument("EmotionTaxonomy: unknown emotion label '" + label + "'");
        return it->second;
    }

    int neutral_id() const { return ids_.at(kNeutralLabel); }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, int> ids_;
};

// Total map from question emotion to the non-empty set of response emotions
// it may elicit.
class EmotionMap {
public:
    // identity map, except "abusing" questions elicit aggrieved/regretful
    // responses when those labels exist
    static EmotionMap defaults(const EmotionTaxonomy& tax) {
        EmotionMap m;
        m.map_.resize(tax.size());
        auto abusing = tax.find("abusing");
        auto aggrieved = tax.find("aggrieved");
        auto regretful = tax.find("regretful");
        for (int q = 0; q < tax.size(); ++q) {
            if (abusing && q == *abusing && aggrieved && regretful)
                m.map_[q] = {*aggrieved, *regretful};
            else
                m.map_[q] = {q};
        }
        return m;
    }

    // lines of the form "question_label -> resp_label, resp_label"; every
    // taxonomy label must appear exactly once on the left
    static EmotionMap parse(std::istream& in, const EmotionTaxonomy& tax) {
        EmotionMap m;
        m.map_.assign(tax.size(), {});
        std::vector<bool> seen(tax.size(), false);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string t = trim_copy(line);
            if (t.empty() || t[0] == '#') continue;
            size_t arrow = t.find("->");
            if (arrow == std::string::npos)
                throw std::runtime_error("EmotionMap: line " + std::to_string(lineno) +
                                         ": expected 'question -> responses'");
            int q = tax.id_of(trim_copy(t.substr(0, arrow)));
            if (seen[q])
                throw std::runtime_error("EmotionMap: line " + std::to_string(lineno) +
                                         ": duplicate entry for '" + tax.label(q) + "'");
            seen[q] = true;
            std::stringstream rest(t.substr(arrow + 2));
            std::string part;
            while (std::getline(rest, part, ',')) {
                std::string lbl = trim_copy(part);
                if (lbl.empty()) continue;
                int r = tax.id_of(lbl);
                if (std::find(m.map_[q].begin(), m.map_[q].end(), r) == m.map_[q].end())
                    m.map_[q].push_back(r);
            }
            if (m.map_[q].empty())
                throw std::runtime_error("EmotionMap: line " + std::to_string(lineno) +
                                         ": no response emotions for '" + tax.label(q) + "'");
        }
        for (int q = 0; q < tax.size(); ++q)
            if (!seen[q])
                throw std::runtime_error("EmotionMap: missing entry for '" + tax.label(q) + "'");
        return m;
    }

    static EmotionMap load_file(const std::string& path, const EmotionTaxonomy& tax) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("EmotionMap: cannot open " + path);
        return parse(in, tax);
    }

    int size() const { return static_cast<int>(map_.size()); }

    const std::vector<int>& candidates(int question_emotion) const {
        if (question_emotion < 0 || question_emotion >= size())
            throw std::out_of_range("EmotionMap: emotion id out of range");
        return map_[question_emotion];
    }

private:
    std::vector<std::vector<int>> map_;
};

// Uniform draw from the candidate set.
inline int sample_response_emotion(const std::vector<int>& candidates, std::mt19937& rng) {
    if (candidates.empty()) throw std::invalid_argument("sample_response_emotion: empty set");
    if (candidates.size() == 1) return candidates[0];
    std::uniform_int_distribution<size_t> pick(0, candidates.size() - 1);
    return candidates[pick(rng)];
}

inline int sample_response_emotion(const std::vector<int>& candidates, uint64_t seed) {
    std::mt19937 rng(static_cast<uint32_t>(seed));
    return sample_response_emotion(candidates, rng);
}

}  // namespace dverg
