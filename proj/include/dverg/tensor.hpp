// Dense float tensors with reverse-mode automatic differentiation.
//
// Tensors are cheap shared handles onto graph nodes. An op records parents
// and a backprop closure only when at least one input requires gradients,
// so inference over frozen parameters builds no graph and is thread-safe.
// Reductions accumulate in double regardless of the scalar type T.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace dverg {

namespace detail {

template <class T>
struct TensorNode {
    std::vector<int> shape;
    std::vector<T> data;
    std::vector<T> grad;  // allocated lazily, same length as data
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backprop;

    int64_t size() const {
        int64_t n = 1;
        for (int d : shape) n *= d;
        return n;
    }
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    }
};

template <class T>
inline void axpy(std::vector<T>& dst, const std::vector<T>& src) {
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace detail

template <class T>
class Tensor {
public:
    using Node = detail::TensorNode<T>;

    Tensor() = default;

    static Tensor from(std::vector<int> shape, std::vector<T> data) {
        int64_t n = 1;
        for (int d : shape) {
            if (d <= 0) throw std::invalid_argument("Tensor: nonpositive dimension");
            n *= d;
        }
        if (n != static_cast<int64_t>(data.size()))
            throw std::invalid_argument("Tensor: shape/data size mismatch");
        Tensor t;
        t.n_ = std::make_shared<Node>();
        t.n_->shape = std::move(shape);
        t.n_->data = std::move(data);
        return t;
    }
    static Tensor zeros(std::vector<int> shape) {
        int64_t n = 1;
        for (int d : shape) n *= d;
        return from(std::move(shape), std::vector<T>(n, T(0)));
    }
    static Tensor full(std::vector<int> shape, T v) {
        int64_t n = 1;
        for (int d : shape) n *= d;
        return from(std::move(shape), std::vector<T>(n, v));
    }
    static Tensor scalar(T v) { return from({1}, {v}); }

    // Xavier/Glorot uniform for rank-2 [out, in]; uniform fallback otherwise.
    static Tensor xavier(std::vector<int> shape, std::mt19937& rng) {
        int64_t n = 1;
        for (int d : shape) n *= d;
        double fan_in = shape.size() >= 2 ? shape.back() : n;
        double fan_out = shape.size() >= 2 ? shape[0] : n;
        double a = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-a, a);
        std::vector<T> data(n);
        for (auto& x : data) x = static_cast<T>(dist(rng));
        return from(std::move(shape), std::move(data));
    }
    static Tensor uniform(std::vector<int> shape, T lo, T hi, std::mt19937& rng) {
        int64_t n = 1;
        for (int d : shape) n *= d;
        std::uniform_real_distribution<double> dist(lo, hi);
        std::vector<T> data(n);
        for (auto& x : data) x = static_cast<T>(dist(rng));
        return from(std::move(shape), std::move(data));
    }

    bool defined() const { return n_ != nullptr; }
    const std::vector<int>& shape() const { return n_->shape; }
    int dim(int i) const { return n_->shape[i]; }
    int rank() const { return static_cast<int>(n_->shape.size()); }
    int64_t size() const { return n_->size(); }

    std::vector<T>& data() { return n_->data; }
    const std::vector<T>& data() const { return n_->data; }
    T operator[](int64_t i) const { return n_->data[i]; }

    T value() const {
        if (size() != 1) throw std::invalid_argument("Tensor::value: not a scalar");
        return n_->data[0];
    }

    bool requires_grad() const { return n_->requires_grad; }
    void set_requires_grad(bool b) { n_->requires_grad = b; }

    const std::vector<T>& grad() const {
        n_->ensure_grad();
        return n_->grad;
    }
    void zero_grad() {
        if (!n_->grad.empty()) std::fill(n_->grad.begin(), n_->grad.end(), T(0));
    }

    std::shared_ptr<Node> node() const { return n_; }

private:
    std::shared_ptr<Node> n_;
};

namespace detail {

// Attach parents + backprop closure to `out` when any input tracks gradients.
template <class T, class Fn, class... In>
void wire(Tensor<T>& out, Fn&& bp, const In&... ins) {
    if (!(ins.requires_grad() || ...)) return;
    auto n = out.node();
    n->requires_grad = true;
    (n->parents.push_back(ins.node()), ...);
    n->backprop = std::forward<Fn>(bp);
}

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape(a, b, "add");
    std::vector<T> d(a.size());
    for (int64_t i = 0; i < a.size(); ++i) d[i] = a[i] + b[i];
    auto out = Tensor<T>::from(a.shape(), std::move(d));
    auto an = a.node(), bn = b.node();
    detail::wire(out, [an, bn](detail::TensorNode<T>& o) {
        if (an->requires_grad) { an->ensure_grad(); detail::axpy(an->grad, o.grad); }
        if (bn->requires_grad) { bn->ensure_grad(); detail::axpy(bn->grad, o.grad); }
    }, a, b);
    return out;
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape(a, b, "sub");
    std::vector<T> d(a.size());
    for (int64_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    auto out = Tensor<T>::from(a.shape(), std::move(d));
    auto an = a.node(), bn = b.node();
    detail::wire(out, [an, bn](detail::TensorNode<T>& o) {
        if (an->requires_grad) { an->ensure_grad(); detail::axpy(an->grad, o.grad); }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < o.grad.size(); ++i) bn->grad[i] -= o.grad[i];
        }
    }, a, b);
    return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape(a, b, "mul");
    std::vector<T> d(a.size());
    for (int64_t i = 0; i < a.size(); ++i) d[i] = a[i] * b[i];
    auto out = Tensor<T>::from(a.shape(), std::move(d));
    auto an = a.node(), bn = b.node();
    detail::wire(out, [an, bn](detail::TensorNode<T>& o) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i] * bn->data[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < o.grad.size(); ++i) bn->grad[i] += o.grad[i] * an->data[i];
        }
    }, a, b);
    return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T c) {
    std::vector<T> d(a.size());
    for (int64_t i = 0; i < a.size(); ++i) d[i] = a[i] * c;
    auto out = Tensor<T>::from(a.shape(), std::move(d));
    auto an = a.node();
    detail::wire(out, [an, c](detail::TensorNode<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i] * c;
    }, a);
    return out;
}

template <class T>
Tensor<T> one_minus(const Tensor<T>& a) {
    std::vector<T> d(a.size());
    for (int64_t i = 0; i < a.size(); ++i) d[i] = T(1) - a[i];
    auto out = Tensor<T>::from(a.shape(), std::move(d));
    auto an = a.node();
    detail::wire(out, [an](detail::TensorNode<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i) an->grad[i] -= o.grad[i];
    }, a);
    return out;
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    std::vector<T> d(a.size());
    for (int64_t i = 0; i < a.size(); ++i) d[i] = T(1) / (T(1) + std::exp(-a[i]));
    auto out = Tensor<T>::from(a.shape(), std::move(d));
    auto an = a.node();
    detail::wire(out, [an](detail::TensorNode<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i) {
            T y = o.data[i];
            an->grad[i] += o.grad[i] * y * (T(1) - y);
        }
    }, a);
    return out;
}

template <class T>
Tensor<T> tanh(const Tensor<T>& a) {
    std::vector<T> d(a.size());
    for (int64_t i = 0; i < a.size(); ++i) d[i] = std::tanh(a[i]);
    auto out = Tensor<T>::from(a.shape(), std::move(d));
    auto an = a.node();
    detail::wire(out, [an](detail::TensorNode<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i) {
            T y = o.data[i];
            an->grad[i] += o.grad[i] * (T(1) - y * y);
        }
    }, a);
    return out;
}

template <class T>
Tensor<T> relu(const Tensor<T>& a) {
    std::vector<T> d(a.size());
    for (int64_t i = 0; i < a.size(); ++i) d[i] = a[i] > T(0) ? a[i] : T(0);
    auto out = Tensor<T>::from(a.shape(), std::move(d));
    auto an = a.node();
    detail::wire(out, [an](detail::TensorNode<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i)
            if (an->data[i] > T(0)) an->grad[i] += o.grad[i];
    }, a);
    return out;
}

// ---------------------------------------------------------------------------
// linear algebra (row-major)
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> matvec(const Tensor<T>& A, const Tensor<T>& x) {
    if (A.rank() != 2 || x.rank() != 1 || A.dim(1) != x.dim(0))
        throw std::invalid_argument("matvec: dimension mismatch");
    const int m = A.dim(0), k = A.dim(1);
    std::vector<T> d(m);
    const T* a = A.data().data();
    const T* xv = x.data().data();
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        const T* row = a + static_cast<int64_t>(i) * k;
        for (int j = 0; j < k; ++j) acc += static_cast<double>(row[j]) * xv[j];
        d[i] = static_cast<T>(acc);
    }
    auto out = Tensor<T>::from({m}, std::move(d));
    auto An = A.node(), xn = x.node();
    detail::wire(out, [An, xn, m, k](detail::TensorNode<T>& o) {
        if (An->requires_grad) {
            An->ensure_grad();
            for (int i = 0; i < m; ++i) {
                T g = o.grad[i];
                if (g == T(0)) continue;
                T* row = An->grad.data() + static_cast<int64_t>(i) * k;
                for (int j = 0; j < k; ++j) row[j] += g * xn->data[j];
            }
        }
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (int i = 0; i < m; ++i) {
                T g = o.grad[i];
                if (g == T(0)) continue;
                const T* row = An->data.data() + static_cast<int64_t>(i) * k;
                for (int j = 0; j < k; ++j) xn->grad[j] += g * row[j];
            }
        }
    }, A, x);
    return out;
}

// y = A^T x   with A [m,k], x [m] -> [k]
template <class T>
Tensor<T> matvec_t(const Tensor<T>& A, const Tensor<T>& x) {
    if (A.rank() != 2 || x.rank() != 1 || A.dim(0) != x.dim(0))
        throw std::invalid_argument("matvec_t: dimension mismatch");
    const int m = A.dim(0), k = A.dim(1);
    std::vector<double> acc(k, 0.0);
    const T* a = A.data().data();
    for (int i = 0; i < m; ++i) {
        T xi = x[i];
        const T* row = a + static_cast<int64_t>(i) * k;
        for (int j = 0; j < k; ++j) acc[j] += static_cast<double>(xi) * row[j];
    }
    std::vector<T> d(k);
    for (int j = 0; j < k; ++j) d[j] = static_cast<T>(acc[j]);
    auto out = Tensor<T>::from({k}, std::move(d));
    auto An = A.node(), xn = x.node();
    detail::wire(out, [An, xn, m, k](detail::TensorNode<T>& o) {
        if (An->requires_grad) {
            An->ensure_grad();
            for (int i = 0; i < m; ++i) {
                T xi = xn->data[i];
                T* row = An->grad.data() + static_cast<int64_t>(i) * k;
                for (int j = 0; j < k; ++j) row[j] += xi * o.grad[j];
            }
        }
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (int i = 0; i < m; ++i) {
                const T* row = An->data.data() + static_cast<int64_t>(i) * k;
                double acc2 = 0.0;
                for (int j = 0; j < k; ++j) acc2 += static_cast<double>(row[j]) * o.grad[j];
                xn->grad[i] += static_cast<T>(acc2);
            }
        }
    }, A, x);
    return out;
}

template <class T>
Tensor<T> matmul(const Tensor<T>& A, const Tensor<T>& B) {
    if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0))
        throw std::invalid_argument("matmul: dimension mismatch");
    const int m = A.dim(0), k = A.dim(1), n = B.dim(1);
    std::vector<T> d(static_cast<size_t>(m) * n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p)
                acc += static_cast<double>(A[static_cast<int64_t>(i) * k + p]) *
                       B[static_cast<int64_t>(p) * n + j];
            d[static_cast<size_t>(i) * n + j] = static_cast<T>(acc);
        }
    auto out = Tensor<T>::from({m, n}, std::move(d));
    auto An = A.node(), Bn = B.node();
    detail::wire(out, [An, Bn, m, k, n](detail::TensorNode<T>& o) {
        if (An->requires_grad) {
            An->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j)
                        acc += static_cast<double>(o.grad[static_cast<size_t>(i) * n + j]) *
                               Bn->data[static_cast<size_t>(p) * n + j];
                    An->grad[static_cast<size_t>(i) * k + p] += static_cast<T>(acc);
                }
        }
        if (Bn->requires_grad) {
            Bn->ensure_grad();
            for (int p = 0; p < k; ++p)
                for (int j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < m; ++i)
                        acc += static_cast<double>(An->data[static_cast<size_t>(i) * k + p]) *
                               o.grad[static_cast<size_t>(i) * n + j];
                    Bn->grad[static_cast<size_t>(p) * n + j] += static_cast<T>(acc);
                }
        }
    }, A, B);
    return out;
}

// C = A B^T   with A [m,k], B [n,k] -> [m,n]
template <class T>
Tensor<T> matmul_nt(const Tensor<T>& A, const Tensor<T>& B) {
    if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(1))
        throw std::invalid_argument("matmul_nt: dimension mismatch");
    const int m = A.dim(0), k = A.dim(1), n = B.dim(0);
    std::vector<T> d(static_cast<size_t>(m) * n);
    for (int i = 0; i < m; ++i) {
        const T* arow = A.data().data() + static_cast<int64_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const T* brow = B.data().data() + static_cast<int64_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += static_cast<double>(arow[p]) * brow[p];
            d[static_cast<size_t>(i) * n + j] = static_cast<T>(acc);
        }
    }
    auto out = Tensor<T>::from({m, n}, std::move(d));
    auto An = A.node(), Bn = B.node();
    detail::wire(out, [An, Bn, m, k, n](detail::TensorNode<T>& o) {
        if (An->requires_grad) {
            An->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    T g = o.grad[static_cast<size_t>(i) * n + j];
                    if (g == T(0)) continue;
                    T* arow = An->grad.data() + static_cast<int64_t>(i) * k;
                    const T* brow = Bn->data.data() + static_cast<int64_t>(j) * k;
                    for (int p = 0; p < k; ++p) arow[p] += g * brow[p];
                }
        }
        if (Bn->requires_grad) {
            Bn->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    T g = o.grad[static_cast<size_t>(i) * n + j];
                    if (g == T(0)) continue;
                    T* brow = Bn->grad.data() + static_cast<int64_t>(j) * k;
                    const T* arow = An->data.data() + static_cast<int64_t>(i) * k;
                    for (int p = 0; p < k; ++p) brow[p] += g * arow[p];
                }
        }
    }, A, B);
    return out;
}

template <class T>
Tensor<T> dot(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape(a, b, "dot");
    double acc = 0.0;
    for (int64_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
    auto out = Tensor<T>::scalar(static_cast<T>(acc));
    auto an = a.node(), bn = b.node();
    detail::wire(out, [an, bn](detail::TensorNode<T>& o) {
        T g = o.grad[0];
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < an->data.size(); ++i) an->grad[i] += g * bn->data[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < bn->data.size(); ++i) bn->grad[i] += g * an->data[i];
        }
    }, a, b);
    return out;
}

// M [m,n] + v [n] broadcast over rows
template <class T>
Tensor<T> add_rowvec(const Tensor<T>& M, const Tensor<T>& v) {
    if (M.rank() != 2 || v.rank() != 1 || M.dim(1) != v.dim(0))
        throw std::invalid_argument("add_rowvec: dimension mismatch");
    const int m = M.dim(0), n = M.dim(1);
    std::vector<T> d(M.data());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) d[static_cast<size_t>(i) * n + j] += v[j];
    auto out = Tensor<T>::from({m, n}, std::move(d));
    auto Mn = M.node(), vn = v.node();
    detail::wire(out, [Mn, vn, m, n](detail::TensorNode<T>& o) {
        if (Mn->requires_grad) { Mn->ensure_grad(); detail::axpy(Mn->grad, o.grad); }
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int i = 0; i < m; ++i) acc += o.grad[static_cast<size_t>(i) * n + j];
                vn->grad[j] += static_cast<T>(acc);
            }
        }
    }, M, v);
    return out;
}

// ---------------------------------------------------------------------------
// reductions / reshaping
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
    double acc = 0.0;
    for (int64_t i = 0; i < a.size(); ++i) acc += a[i];
    auto out = Tensor<T>::scalar(static_cast<T>(acc));
    auto an = a.node();
    detail::wire(out, [an](detail::TensorNode<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += o.grad[0];
    }, a);
    return out;
}

template <class T>
Tensor<T> mean(const Tensor<T>& a) {
    return scale(sum(a), static_cast<T>(1.0 / static_cast<double>(a.size())));
}

template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    int64_t total = 0;
    for (const auto& p : parts) {
        if (p.rank() != 1) throw std::invalid_argument("concat: rank-1 inputs only");
        total += p.size();
    }
    std::vector<T> d;
    d.reserve(total);
    for (const auto& p : parts) d.insert(d.end(), p.data().begin(), p.data().end());
    auto out = Tensor<T>::from({static_cast<int>(total)}, std::move(d));

    bool any = false;
    for (const auto& p : parts) any = any || p.requires_grad();
    if (any) {
        auto n = out.node();
        n->requires_grad = true;
        std::vector<std::shared_ptr<detail::TensorNode<T>>> ps;
        for (const auto& p : parts) ps.push_back(p.node());
        n->parents = ps;
        n->backprop = [ps](detail::TensorNode<T>& o) {
            size_t off = 0;
            for (auto& p : ps) {
                if (p->requires_grad) {
                    p->ensure_grad();
                    for (size_t i = 0; i < p->data.size(); ++i) p->grad[i] += o.grad[off + i];
                }
                off += p->data.size();
            }
        };
    }
    return out;
}

template <class T>
Tensor<T> stack_rows(const std::vector<Tensor<T>>& rows) {
    if (rows.empty()) throw std::invalid_argument("stack_rows: no inputs");
    const int n = rows[0].dim(0);
    for (const auto& r : rows)
        if (r.rank() != 1 || r.dim(0) != n)
            throw std::invalid_argument("stack_rows: inconsistent row length");
    const int m = static_cast<int>(rows.size());
    std::vector<T> d;
    d.reserve(static_cast<size_t>(m) * n);
    for (const auto& r : rows) d.insert(d.end(), r.data().begin(), r.data().end());
    auto out = Tensor<T>::from({m, n}, std::move(d));

    bool any = false;
    for (const auto& r : rows) any = any || r.requires_grad();
    if (any) {
        auto nd = out.node();
        nd->requires_grad = true;
        std::vector<std::shared_ptr<detail::TensorNode<T>>> ps;
        for (const auto& r : rows) ps.push_back(r.node());
        nd->parents = ps;
        nd->backprop = [ps, n](detail::TensorNode<T>& o) {
            for (size_t i = 0; i < ps.size(); ++i) {
                if (!ps[i]->requires_grad) continue;
                ps[i]->ensure_grad();
                for (int j = 0; j < n; ++j) ps[i]->grad[j] += o.grad[i * n + j];
            }
        };
    }
    return out;
}

template <class T>
Tensor<T> row(const Tensor<T>& M, int i) {
    if (M.rank() != 2 || i < 0 || i >= M.dim(0))
        throw std::invalid_argument("row: index out of range");
    const int n = M.dim(1);
    std::vector<T> d(M.data().begin() + static_cast<int64_t>(i) * n,
                     M.data().begin() + static_cast<int64_t>(i + 1) * n);
    auto out = Tensor<T>::from({n}, std::move(d));
    auto Mn = M.node();
    detail::wire(out, [Mn, i, n](detail::TensorNode<T>& o) {
        if (!Mn->requires_grad) return;
        Mn->ensure_grad();
        for (int j = 0; j < n; ++j) Mn->grad[static_cast<int64_t>(i) * n + j] += o.grad[j];
    }, M);
    return out;
}

template <class T>
Tensor<T> gather_rows(const Tensor<T>& M, const std::vector<int>& ids) {
    if (M.rank() != 2) throw std::invalid_argument("gather_rows: matrix expected");
    const int n = M.dim(1);
    for (int id : ids)
        if (id < 0 || id >= M.dim(0)) throw std::invalid_argument("gather_rows: id out of range");
    std::vector<T> d(ids.size() * static_cast<size_t>(n));
    for (size_t r = 0; r < ids.size(); ++r)
        std::copy_n(M.data().begin() + static_cast<int64_t>(ids[r]) * n, n, d.begin() + r * n);
    auto out = Tensor<T>::from({static_cast<int>(ids.size()), n}, std::move(d));
    auto Mn = M.node();
    detail::wire(out, [Mn, ids, n](detail::TensorNode<T>& o) {
        if (!Mn->requires_grad) return;
        Mn->ensure_grad();
        for (size_t r = 0; r < ids.size(); ++r)
            for (int j = 0; j < n; ++j)
                Mn->grad[static_cast<int64_t>(ids[r]) * n + j] += o.grad[r * n + j];
    }, M);
    return out;
}

template <class T>
Tensor<T> gather(const Tensor<T>& v, const std::vector<int>& ids) {
    if (v.rank() != 1) throw std::invalid_argument("gather: vector expected");
    for (int id : ids)
        if (id < 0 || id >= v.dim(0)) throw std::invalid_argument("gather: id out of range");
    std::vector<T> d(ids.size());
    for (size_t i = 0; i < ids.size(); ++i) d[i] = v[ids[i]];
    auto out = Tensor<T>::from({static_cast<int>(ids.size())}, std::move(d));
    auto vn = v.node();
    detail::wire(out, [vn, ids](detail::TensorNode<T>& o) {
        if (!vn->requires_grad) return;
        vn->ensure_grad();
        for (size_t i = 0; i < ids.size(); ++i) vn->grad[ids[i]] += o.grad[i];
    }, v);
    return out;
}

// per-column max over rows: M [m,n] -> [n], gradient routed to argmax rows
template <class T>
Tensor<T> col_max(const Tensor<T>& M) {
    if (M.rank() != 2) throw std::invalid_argument("col_max: matrix expected");
    const int m = M.dim(0), n = M.dim(1);
    std::vector<T> d(n);
    std::vector<int> arg(n, 0);
    for (int j = 0; j < n; ++j) {
        T best = M[j];
        for (int i = 1; i < m; ++i) {
            T v = M[static_cast<int64_t>(i) * n + j];
            if (v > best) { best = v; arg[j] = i; }
        }
        d[j] = best;
    }
    auto out = Tensor<T>::from({n}, std::move(d));
    auto Mn = M.node();
    detail::wire(out, [Mn, arg, n](detail::TensorNode<T>& o) {
        if (!Mn->requires_grad) return;
        Mn->ensure_grad();
        for (int j = 0; j < n; ++j)
            Mn->grad[static_cast<int64_t>(arg[j]) * n + j] += o.grad[j];
    }, M);
    return out;
}

template <class T>
Tensor<T> l2_normalize_rows(const Tensor<T>& M) {
    if (M.rank() != 2) throw std::invalid_argument("l2_normalize_rows: matrix expected");
    const int m = M.dim(0), n = M.dim(1);
    constexpr double kFloor = 1e-8;
    std::vector<T> d(static_cast<size_t>(m) * n);
    std::vector<T> norms(m);
    for (int i = 0; i < m; ++i) {
        const T* r = M.data().data() + static_cast<int64_t>(i) * n;
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += static_cast<double>(r[j]) * r[j];
        double nm = std::max(std::sqrt(s), kFloor);
        norms[i] = static_cast<T>(nm);
        for (int j = 0; j < n; ++j) d[static_cast<size_t>(i) * n + j] = static_cast<T>(r[j] / nm);
    }
    auto out = Tensor<T>::from({m, n}, std::move(d));
    auto Mn = M.node();
    detail::wire(out, [Mn, norms, m, n](detail::TensorNode<T>& o) {
        if (!Mn->requires_grad) return;
        Mn->ensure_grad();
        for (int i = 0; i < m; ++i) {
            const T* y = o.data.data() + static_cast<int64_t>(i) * n;
            const T* g = o.grad.data() + static_cast<int64_t>(i) * n;
            double gy = 0.0;
            for (int j = 0; j < n; ++j) gy += static_cast<double>(g[j]) * y[j];
            T* dst = Mn->grad.data() + static_cast<int64_t>(i) * n;
            for (int j = 0; j < n; ++j)
                dst[j] += static_cast<T>((g[j] - gy * y[j]) / norms[i]);
        }
    }, M);
    return out;
}

// ---------------------------------------------------------------------------
// probability ops
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> softmax(const Tensor<T>& a) {
    if (a.rank() != 1) throw std::invalid_argument("softmax: vector expected");
    const int n = a.dim(0);
    T mx = a[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, a[i]);
    std::vector<T> d(n);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        double e = std::exp(static_cast<double>(a[i] - mx));
        d[i] = static_cast<T>(e);
        z += e;
    }
    for (int i = 0; i < n; ++i) d[i] = static_cast<T>(d[i] / z);
    auto out = Tensor<T>::from({n}, std::move(d));
    auto an = a.node();
    detail::wire(out, [an, n](detail::TensorNode<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        double gp = 0.0;
        for (int i = 0; i < n; ++i) gp += static_cast<double>(o.grad[i]) * o.data[i];
        for (int i = 0; i < n; ++i)
            an->grad[i] += static_cast<T>(o.data[i] * (o.grad[i] - gp));
    }, a);
    return out;
}

// negative log-likelihood of `target` under softmax(logits); numerically stable
template <class T>
Tensor<T> nll(const Tensor<T>& logits, int target) {
    if (logits.rank() != 1) throw std::invalid_argument("nll: vector of logits expected");
    const int n = logits.dim(0);
    if (target < 0 || target >= n) throw std::invalid_argument("nll: target out of range");
    T mx = logits[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
    double z = 0.0;
    for (int i = 0; i < n; ++i) z += std::exp(static_cast<double>(logits[i] - mx));
    double lse = static_cast<double>(mx) + std::log(z);
    auto out = Tensor<T>::scalar(static_cast<T>(lse - logits[target]));
    auto ln = logits.node();
    detail::wire(out, [ln, target, mx, z, n](detail::TensorNode<T>& o) {
        if (!ln->requires_grad) return;
        ln->ensure_grad();
        T g = o.grad[0];
        for (int i = 0; i < n; ++i) {
            double p = std::exp(static_cast<double>(ln->data[i] - mx)) / z;
            ln->grad[i] += g * static_cast<T>(p - (i == target ? 1.0 : 0.0));
        }
    }, logits);
    return out;
}

// mean binary cross-entropy over selected entries of a probability vector.
// targets[i] pairs with probs[indices[i]]; probabilities clamped at 1e-7.
template <class T>
Tensor<T> bce_indexed(const Tensor<T>& probs, const std::vector<int>& indices,
                      const std::vector<uint8_t>& targets) {
    if (probs.rank() != 1) throw std::invalid_argument("bce_indexed: vector expected");
    if (indices.size() != targets.size() || indices.empty())
        throw std::invalid_argument("bce_indexed: indices/targets mismatch or empty");
    constexpr double kEps = 1e-7;
    const double inv = 1.0 / static_cast<double>(indices.size());
    double acc = 0.0;
    for (size_t i = 0; i < indices.size(); ++i) {
        int id = indices[i];
        if (id < 0 || id >= probs.dim(0)) throw std::invalid_argument("bce_indexed: index out of range");
        double p = probs[id];
        acc -= targets[i] ? std::log(std::max(p, kEps)) : std::log(std::max(1.0 - p, kEps));
    }
    auto out = Tensor<T>::scalar(static_cast<T>(acc * inv));
    auto pn = probs.node();
    detail::wire(out, [pn, indices, targets, inv](detail::TensorNode<T>& o) {
        if (!pn->requires_grad) return;
        pn->ensure_grad();
        T g = o.grad[0];
        for (size_t i = 0; i < indices.size(); ++i) {
            double p = pn->data[indices[i]];
            double d = 0.0;
            if (targets[i]) {
                if (p > kEps) d = -1.0 / p;
            } else {
                if (1.0 - p > kEps) d = 1.0 / (1.0 - p);
            }
            pn->grad[indices[i]] += static_cast<T>(g * d * inv);
        }
    }, probs);
    return out;
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

template <class T>
void backward(const Tensor<T>& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw std::invalid_argument("backward: loss must be a scalar");
    if (!loss.requires_grad())
        throw std::invalid_argument("backward: graph detached, no parameters reachable");

    using Node = detail::TensorNode<T>;
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            Node* p = n->parents[idx++].get();
            if (p->backprop && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    // interior grads are per-pass scratch; only leaf parameters accumulate
    for (Node* n : order) {
        if (!n->backprop) continue;
        n->ensure_grad();
        std::fill(n->grad.begin(), n->grad.end(), T(0));
    }
    auto* root = loss.node().get();
    root->ensure_grad();
    root->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) n->backprop(*n);
    }
}

}  // namespace dverg
