// Tokenization and the function/content-partitioned vocabulary.

#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dverg {

inline bool is_ascii_punct(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u);
}

inline bool is_punct_token(const std::string& tok) {
    if (tok.empty()) return false;
    for (char c : tok)
        if (!is_ascii_punct(c)) return false;
    return true;
}

// Lowercased whitespace tokenization; ASCII punctuation marks become
// standalone tokens. Bytes >= 0x80 pass through untouched.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (char c : text) {
        unsigned char u = static_cast<unsigned char>(c);
        if (u < 0x80 && std::isspace(u)) {
            flush();
        } else if (is_ascii_punct(c)) {
            flush();
            out.emplace_back(1, c);
        } else {
            cur.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
        }
    }
    flush();
    return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string s;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) s.push_back(' ');
        s += tokens[i];
    }
    return s;
}

class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;
    static constexpr int kReservedCount = 4;

    Vocabulary() { init_reserved(); }

    // tokens ranked by (count desc, token asc); reserved + punctuation +
    // listed tokens land in the function partition, the rest in content.
    static Vocabulary build(const std::vector<std::vector<std::string>>& texts,
                            int max_size, int min_count,
                            const std::set<std::string>& function_words) {
        if (max_size < kReservedCount)
            throw std::invalid_argument("Vocabulary: max_size below reserved token count");
        std::map<std::string, long> counts;
        bool any = false;
        for (const auto& toks : texts) {
            for (const auto& t : toks) {
                ++counts[t];
                any = true;
            }
        }
        if (texts.empty() || !any) throw std::invalid_argument("Vocabulary: empty corpus");

        std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });

        Vocabulary v;
        for (const auto& [tok, cnt] : ranked) {
            if (static_cast<int>(v.tokens_.size()) >= max_size) break;
            if (cnt < min_count) break;
            bool function = function_words.count(tok) || is_punct_token(tok);
            v.push_token(tok, function);
        }
        v.rebuild_content_index();
        return v;
    }

    int size() const { return static_cast<int>(tokens_.size()); }

    bool contains(const std::string& tok) const { return ids_.count(tok) != 0; }

    // OOV maps to UNK
    int id_of(const std::string& tok) const {
        auto it = ids_.find(tok);
        return it == ids_.end() ? kUnk : it->second;
    }

    const std::string& token_of(int id) const {
        if (id < 0 || id >= size()) throw std::out_of_range("Vocabulary: id out of range");
        return tokens_[id];
    }

    static bool is_reserved(int id) { return id >= 0 && id < kReservedCount; }
    bool is_function(int id) const { return function_mask_[id] != 0; }
    bool is_content(int id) const { return !is_reserved(id) && !is_function(id); }

    // content ids ascending; position in this list is the content index I(c)
    const std::vector<int>& content_ids() const { return content_ids_; }
    int content_count() const { return static_cast<int>(content_ids_.size()); }
    int content_index_of(int id) const {
        if (id < 0 || id >= size()) return -1;
        return content_index_[id];
    }

    // includes the reserved ids, which are always function words
    std::vector<int> function_ids() const {
        std::vector<int> out;
        for (int id = 0; id < size(); ++id)
            if (function_mask_[id]) out.push_back(id);
        return out;
    }

    std::vector<int> encode(const std::vector<std::string>& tokens) const {
        std::vector<int> out;
        out.reserve(tokens.size());
        for (const auto& t : tokens) out.push_back(id_of(t));
        return out;
    }
    std::vector<std::string> decode(const std::vector<int>& ids) const {
        std::vector<std::string> out;
        out.reserve(ids.size());
        for (int id : ids) out.push_back(token_of(id));
        return out;
    }

    // reconstruction from serialized form: full token list + function id set
    static Vocabulary from_parts(const std::vector<std::string>& tokens,
                                 const std::vector<int>& function_ids) {
        if (tokens.size() < kReservedCount)
            throw std::invalid_argument("Vocabulary: token list missing reserved entries");
        Vocabulary v;
        std::set<int> fset(function_ids.begin(), function_ids.end());
        for (size_t id = kReservedCount; id < tokens.size(); ++id)
            v.push_token(tokens[id], fset.count(static_cast<int>(id)) != 0);
        v.rebuild_content_index();
        return v;
    }

private:
    void init_reserved() {
        push_token("<pad>", true);
        push_token("<unk>", true);
        push_token("<bos>", true);
        push_token("<eos>", true);
    }
    void push_token(const std::string& tok, bool function) {
        if (ids_.count(tok)) throw std::invalid_argument("Vocabulary: duplicate token " + tok);
        ids_[tok] = static_cast<int>(tokens_.size());
        tokens_.push_back(tok);
        function_mask_.push_back(function ? 1 : 0);
    }
    void rebuild_content_index() {
        content_ids_.clear();
        content_index_.assign(tokens_.size(), -1);
        for (int id = kReservedCount; id < size(); ++id) {
            if (!function_mask_[id]) {
                content_index_[id] = static_cast<int>(content_ids_.size());
                content_ids_.push_back(id);
            }
        }
    }

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
    std::vector<uint8_t> function_mask_;
    std::vector<int> content_ids_;
    std::vector<int> content_index_;
};

}  // namespace dverg
