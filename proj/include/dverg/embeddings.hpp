// Pretrained word-embedding loading (word2vec text format) and random
// fallback initialization.

#pragma once

#include <charconv>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "dverg/tensor.hpp"
#include "dverg/vocab.hpp"

namespace dverg {

namespace detail {

template <class T>
bool parse_scalar(const std::string& s, T& out) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return false;
    out = static_cast<T>(v);
    return true;
}

template <class T>
void fill_uniform_row(std::vector<T>& data, size_t row, size_t dim, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (size_t d = 0; d < dim; ++d) data[row * dim + d] = static_cast<T>(u(rng));
}

}  // namespace detail

// [|V|, dim] with PAD/BOS/EOS zero and every other row uniform in
// [-0.1, 0.1].
template <class T>
Tensor<T> random_embeddings(const Vocabulary& vocab, int dim, uint64_t seed) {
    if (dim <= 0) throw std::invalid_argument("embeddings: dim must be positive");
    size_t rows = static_cast<size_t>(vocab.size());
    std::vector<T> data(rows * static_cast<size_t>(dim), T(0));
    std::mt19937 rng(static_cast<uint32_t>(seed));
    for (size_t id = 0; id < rows; ++id) {
        if (id == Vocabulary::kPad || id == Vocabulary::kBos || id == Vocabulary::kEos) continue;
        detail::fill_uniform_row(data, id, static_cast<size_t>(dim), rng);
    }
    return Tensor<T>::from({vocab.size(), dim}, std::move(data));
}

// word2vec text format: header line "count dim", then one line per word:
// the token followed by dim numbers. Vocabulary tokens absent from the file
// (and UNK) get seeded uniform rows; PAD/BOS/EOS stay zero.
template <class T>
Tensor<T> load_embeddings(std::istream& in, const Vocabulary& vocab, int dim, uint64_t seed) {
    if (dim <= 0) throw std::invalid_argument("embeddings: dim must be positive");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("embeddings: missing header line");
    {
        std::istringstream hdr(line);
        long long count = -1, file_dim = -1;
        if (!(hdr >> count >> file_dim) || count < 0 || file_dim <= 0)
            throw std::runtime_error("embeddings: malformed header '" + line + "'");
        std::string extra;
        if (hdr >> extra) throw std::runtime_error("embeddings: malformed header '" + line + "'");
        if (file_dim != dim)
            throw std::runtime_error("embeddings: file dim " + std::to_string(file_dim) +
                                     " does not match requested dim " + std::to_string(dim));
    }

    std::unordered_map<int, std::vector<T>> found;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream iss(line);
        std::string token;
        iss >> token;
        std::vector<std::string> parts;
        std::string p;
        while (iss >> p) parts.push_back(p);
        if (static_cast<int>(parts.size()) != dim)
            throw std::runtime_error("embeddings: line " + std::to_string(lineno) + ": expected " +
                                     std::to_string(dim) + " values, got " +
                                     std::to_string(parts.size()));
        std::vector<T> vec(dim);
        for (int d = 0; d < dim; ++d) {
            if (!detail::parse_scalar(parts[d], vec[d]))
                throw std::runtime_error("embeddings: line " + std::to_string(lineno) +
                                         ": non-numeric value '" + parts[d] + "'");
        }
        if (!vocab.contains(token)) continue;
        int id = vocab.id_of(token);
        if (id == Vocabulary::kUnk) continue;
        found[id] = std::move(vec);
    }

    size_t rows = static_cast<size_t>(vocab.size());
    std::vector<T> data(rows * static_cast<size_t>(dim), T(0));
    std::mt19937 rng(static_cast<uint32_t>(seed));
    for (size_t id = 0; id < rows; ++id) {
        if (id == Vocabulary::kPad || id == Vocabulary::kBos || id == Vocabulary::kEos) continue;
        auto it = found.find(static_cast<int>(id));
        if (it != found.end())
            std::copy(it->second.begin(), it->second.end(),
                      data.begin() + id * static_cast<size_t>(dim));
        else
            detail::fill_uniform_row(data, id, static_cast<size_t>(dim), rng);
    }
    return Tensor<T>::from({vocab.size(), dim}, std::move(data));
}

template <class T>
Tensor<T> load_embeddings_file(const std::string& path, const Vocabulary& vocab, int dim,
                               uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("embeddings: cannot open " + path);
    return load_embeddings<T>(in, vocab, dim, seed);
}

}  // namespace dverg
