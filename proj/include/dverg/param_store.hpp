// Named parameter collection with deterministic iteration order, plus the
// flat binary checkpoint format:
//   magic "DVERG1", then per parameter:
//   u32 name length (LE) | UTF-8 name | u32 rank | u32 dims... | f32 payload (LE)

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dverg/tensor.hpp"

namespace dverg {

namespace detail {

inline void write_u32(std::ostream& os, uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

inline uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("checkpoint: truncated stream");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline void write_f32(std::ostream& os, float v) {
    uint32_t u;
    static_assert(sizeof(u) == sizeof(v));
    std::memcpy(&u, &v, 4);
    write_u32(os, u);
}

inline float read_f32(std::istream& is) {
    uint32_t u = read_u32(is);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

}  // namespace detail

inline constexpr char kCheckpointMagic[] = "DVERG1";

template <class T>
class ParameterStore {
public:
    ParameterStore() = default;

    Tensor<T>& add(const std::string& name, Tensor<T> t) {
        if (index_.count(name))
            throw std::invalid_argument("ParameterStore: duplicate name " + name);
        index_[name] = items_.size();
        items_.emplace_back(name, std::move(t));
        return items_.back().second;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    Tensor<T>& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end())
            throw std::out_of_range("ParameterStore: unknown parameter " + name);
        return items_[it->second].second;
    }
    const Tensor<T>& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end())
            throw std::out_of_range("ParameterStore: unknown parameter " + name);
        return items_[it->second].second;
    }

    size_t size() const { return items_.size(); }
    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    void set_requires_grad(bool b) {
        for (auto& [name, t] : items_) t.set_requires_grad(b);
    }
    void zero_grads() {
        for (auto& [name, t] : items_) t.zero_grad();
    }

    int64_t entry_count() const {
        int64_t n = 0;
        for (const auto& [name, t] : items_) n += t.size();
        return n;
    }

    void save(std::ostream& os) const {
        os.write(kCheckpointMagic, 6);
        for (const auto& [name, t] : items_) {
            detail::write_u32(os, static_cast<uint32_t>(name.size()));
            os.write(name.data(), static_cast<std::streamsize>(name.size()));
            detail::write_u32(os, static_cast<uint32_t>(t.shape().size()));
            for (int d : t.shape()) detail::write_u32(os, static_cast<uint32_t>(d));
            for (int64_t i = 0; i < t.size(); ++i)
                detail::write_f32(os, static_cast<float>(t[i]));
        }
        if (!os) throw std::runtime_error("checkpoint: write failed");
    }

    static ParameterStore load(std::istream& is) {
        char magic[6];
        is.read(magic, 6);
        if (!is || std::string(magic, 6) != kCheckpointMagic)
            throw std::runtime_error("checkpoint: bad magic");
        ParameterStore store;
        while (true) {
            int c = is.peek();
            if (c == std::char_traits<char>::eof()) break;
            uint32_t name_len = detail::read_u32(is);
            std::string name(name_len, '\0');
            is.read(name.data(), name_len);
            if (!is) throw std::runtime_error("checkpoint: truncated name");
            uint32_t rank = detail::read_u32(is);
            std::vector<int> shape(rank);
            int64_t n = 1;
            for (uint32_t i = 0; i < rank; ++i) {
                shape[i] = static_cast<int>(detail::read_u32(is));
                n *= shape[i];
            }
            std::vector<T> data(n);
            for (int64_t i = 0; i < n; ++i) data[i] = static_cast<T>(detail::read_f32(is));
            store.add(name, Tensor<T>::from(std::move(shape), std::move(data)));
        }
        return store;
    }

    void save_file(const std::filesystem::path& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string());
        save(os);
    }
    static ParameterStore load_file(const std::filesystem::path& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
        return load(is);
    }

private:
    std::vector<std::pair<std::string, Tensor<T>>> items_;
    std::unordered_map<std::string, size_t> index_;
};

}  // namespace dverg
