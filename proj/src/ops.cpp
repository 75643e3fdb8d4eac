#include "afgm/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "afgm/errors.hpp"

namespace afgm {

namespace {

const Tensor& val(Graph& g, std::uint32_t id) { return g.value(Var{&g, id}); }

Graph& graph_of(Var a, Var b) {
    if (a.graph == nullptr || a.graph != b.graph) {
        throw ContractError("operands belong to different graphs");
    }
    return *a.graph;
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " + to_string(b));
}

// ---------------------------------------------------------------------------
// dense kernels (row-major, accumulate into C)

// C[m,l] += A[m,n] * B[n,l]
void gemm_nn(const double* A, const double* B, double* C, std::size_t m, std::size_t n, std::size_t l) {
    for (std::size_t i = 0; i < m; ++i) {
        double* c = C + i * l;
        for (std::size_t k = 0; k < n; ++k) {
            const double a = A[i * n + k];
            const double* b = B + k * l;
            for (std::size_t j = 0; j < l; ++j) {
                c[j] += a * b[j];
            }
        }
    }
}

// C[m,l] += A[m,n] * B[l,n]^T
void gemm_nt(const double* A, const double* B, double* C, std::size_t m, std::size_t n, std::size_t l) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = A + i * n;
        for (std::size_t j = 0; j < l; ++j) {
            const double* b = B + j * n;
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                s += a[k] * b[k];
            }
            C[i * l + j] += s;
        }
    }
}

// C[m,l] += A[n,m]^T * B[n,l]
void gemm_tn(const double* A, const double* B, double* C, std::size_t m, std::size_t n, std::size_t l) {
    for (std::size_t k = 0; k < n; ++k) {
        const double* b = B + k * l;
        for (std::size_t i = 0; i < m; ++i) {
            const double a = A[k * m + i];
            double* c = C + i * l;
            for (std::size_t j = 0; j < l; ++j) {
                c[j] += a * b[j];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// whitelisted broadcasting

enum class Role : std::uint8_t { full, scalar, row, col };

struct Broadcast {
    Shape out;
    Role a = Role::full;
    Role b = Role::full;
    std::size_t cols = 1;  // trailing extent of the output, used by row/col roles
};

Broadcast classify(const char* op, const Shape& a, const Shape& b) {
    Broadcast bc;
    if (a == b) {
        bc.out = a;
        return bc;
    }
    if (a.empty()) {
        bc.out = b;
        bc.a = Role::scalar;
        return bc;
    }
    if (b.empty()) {
        bc.out = a;
        bc.b = Role::scalar;
        return bc;
    }
    if (a.size() == 2 && b.size() == 2) {
        auto try_roles = [&](const Shape& small, const Shape& big, Role& role) {
            if (small[0] == 1 && small[1] == big[1]) {
                role = Role::row;
                return true;
            }
            if (small[1] == 1 && small[0] == big[0]) {
                role = Role::col;
                return true;
            }
            return false;
        };
        if (try_roles(a, b, bc.a)) {
            bc.out = b;
            bc.cols = b[1];
            return bc;
        }
        if (try_roles(b, a, bc.b)) {
            bc.out = a;
            bc.cols = a[1];
            return bc;
        }
    }
    shape_error(op, a, b);
}

inline std::size_t map_index(Role r, std::size_t k, std::size_t cols) {
    switch (r) {
        case Role::full: return k;
        case Role::scalar: return 0;
        case Role::row: return k % cols;
        case Role::col: return k / cols;
    }
    return k;
}

template <class F, class DA, class DB>
Var binary(const char* name, Var a, Var b, F f, DA da, DB db) {
    Graph& g = graph_of(a, b);
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    const Broadcast bc = classify(name, A.shape(), B.shape());
    Tensor out(bc.out);
    if (bc.a == Role::full && bc.b == Role::full) {
        // common case: equal shapes, contiguous loop
        const double* pa = A.data().data();
        const double* pb = B.data().data();
        double* po = out.data().data();
        for (std::size_t k = 0, n = out.size(); k < n; ++k) {
            po[k] = f(pa[k], pb[k]);
        }
    } else {
        for (std::size_t k = 0; k < out.size(); ++k) {
            out[k] = f(A[map_index(bc.a, k, bc.cols)], B[map_index(bc.b, k, bc.cols)]);
        }
    }
    const auto ia = a.id;
    const auto ib = b.id;
    return g.record(name, std::move(out), {a, b}, [ia, ib, bc, da, db](Graph& gr, const Tensor& dout) {
        const Tensor& A = val(gr, ia);
        const Tensor& B = val(gr, ib);
        Tensor* ga = gr.adjoint(ia);
        Tensor* gb = gr.adjoint(ib);
        for (std::size_t k = 0; k < dout.size(); ++k) {
            const std::size_t ka = map_index(bc.a, k, bc.cols);
            const std::size_t kb = map_index(bc.b, k, bc.cols);
            if (ga) {
                (*ga)[ka] += dout[k] * da(A[ka], B[kb]);
            }
            if (gb) {
                (*gb)[kb] += dout[k] * db(A[ka], B[kb]);
            }
        }
    });
}

// y = f(x); the adjoint rule is expressed through x alone.
template <class F, class D>
Var unary(const char* name, Var a, F f, D d) {
    Graph& g = *a.graph;
    const Tensor& A = a.value();
    Tensor out(A.shape());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = f(A[k]);
    }
    const auto ia = a.id;
    return g.record(name, std::move(out), {a}, [ia, d](Graph& gr, const Tensor& dout) {
        const Tensor& A = val(gr, ia);
        Tensor* ga = gr.adjoint(ia);
        for (std::size_t k = 0; k < dout.size(); ++k) {
            (*ga)[k] += dout[k] * d(A[k]);
        }
    });
}

// Saturated outputs are clamped so a gate, and the product of two gates,
// never rounds to exactly 0 or 1.
constexpr double kSigmoidLow = 0x1.0p-500;
constexpr double kSigmoidHigh = 1.0 - 0x1.0p-53;

double sigmoid_value(double x) {
    double s;
    if (x >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        s = e / (1.0 + e);
    }
    return std::clamp(s, kSigmoidLow, kSigmoidHigh);
}

double guard_denominator(double den, double eps) { return den >= 0.0 ? den + eps : den - eps; }

std::size_t product(const Shape& s, std::size_t from, std::size_t to) {
    std::size_t n = 1;
    for (std::size_t i = from; i < to; ++i) {
        n *= s[i];
    }
    return n;
}

}  // namespace

Var matmul(Var a, Var b) {
    Graph& g = graph_of(a, b);
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    std::size_t p = 0, q = 0, r = 0;
    Shape out_shape;
    if (sa.size() == 2 && sb.size() == 2 && sa[1] == sb[0]) {
        p = sa[0], q = sa[1], r = sb[1];
        out_shape = {p, r};
    } else if (sa.size() == 2 && sb.size() == 1 && sa[1] == sb[0]) {
        p = sa[0], q = sa[1], r = 1;
        out_shape = {p};
    } else if (sa.size() == 1 && sb.size() == 2 && sa[0] == sb[0]) {
        p = 1, q = sa[0], r = sb[1];
        out_shape = {r};
    } else {
        shape_error("matmul", sa, sb);
    }
    Tensor out(out_shape);
    gemm_nn(a.value().data().data(), b.value().data().data(), out.data().data(), p, q, r);
    const auto ia = a.id;
    const auto ib = b.id;
    return g.record("matmul", std::move(out), {a, b}, [ia, ib, p, q, r](Graph& gr, const Tensor& dout) {
        if (Tensor* ga = gr.adjoint(ia)) {
            gemm_nt(dout.data().data(), val(gr, ib).data().data(), ga->data().data(), p, r, q);
        }
        if (Tensor* gb = gr.adjoint(ib)) {
            gemm_tn(val(gr, ia).data().data(), dout.data().data(), gb->data().data(), q, p, r);
        }
    });
}

Var add(Var a, Var b) {
    return binary(
        "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
    return binary(
        "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
    return binary(
        "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Var scale(Var a, double factor) {
    return unary(
        "scale", a, [factor](double x) { return factor * x; }, [factor](double) { return factor; });
}

Var shift(Var a, double offset) {
    return unary(
        "shift", a, [offset](double x) { return x + offset; }, [](double) { return 1.0; });
}

Var sigmoid(Var a) {
    return unary("sigmoid", a, sigmoid_value, [](double x) {
        const double s = sigmoid_value(x);
        return s * (1.0 - s);
    });
}

Var relu(Var a) {
    return unary(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var square(Var a) {
    return unary(
        "square", a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var sqrt_guarded(Var a, double eps) {
    for (double x : a.value().data()) {
        if (x < -eps) {
            throw DomainError("sqrt of negative value " + std::to_string(x));
        }
    }
    return unary(
        "sqrt", a, [eps](double x) { return std::sqrt(x + eps); },
        [eps](double x) { return 0.5 / std::sqrt(x + eps); });
}

Var cos(Var a) {
    return unary(
        "cos", a, [](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); });
}

Var sin(Var a) {
    return unary(
        "sin", a, [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); });
}

Var ratio_arctan(Var num, Var den, double eps) {
    if (num.shape() != den.shape()) {
        shape_error("ratio_arctan", num.shape(), den.shape());
    }
    return binary(
        "ratio_arctan", num, den,
        [eps](double y, double x) { return std::atan(y / guard_denominator(x, eps)); },
        [eps](double y, double x) {
            const double gx = guard_denominator(x, eps);
            return gx / (gx * gx + y * y);
        },
        [eps](double y, double x) {
            const double gx = guard_denominator(x, eps);
            return -y / (gx * gx + y * y);
        });
}

Var outer(Var a, Var b) {
    Graph& g = graph_of(a, b);
    if (a.shape().size() != 1 || b.shape().size() != 1) {
        throw DimensionError("outer: operands must be rank-1, got " + to_string(a.shape()) + " and " +
                             to_string(b.shape()));
    }
    const std::size_t S = a.shape()[0];
    const std::size_t V = b.shape()[0];
    Tensor out(Shape{S, V});
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t v = 0; v < V; ++v) {
            out[s * V + v] = A[s] * B[v];
        }
    }
    const auto ia = a.id;
    const auto ib = b.id;
    return g.record("outer", std::move(out), {a, b}, [ia, ib, S, V](Graph& gr, const Tensor& dout) {
        const Tensor& A = val(gr, ia);
        const Tensor& B = val(gr, ib);
        Tensor* ga = gr.adjoint(ia);
        Tensor* gb = gr.adjoint(ib);
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t v = 0; v < V; ++v) {
                const double d = dout[s * V + v];
                if (ga) {
                    (*ga)[s] += d * B[v];
                }
                if (gb) {
                    (*gb)[v] += d * A[s];
                }
            }
        }
    });
}

Var reduce_sum(Var a, std::size_t axis) {
    const Shape& sa = a.shape();
    if (axis >= sa.size()) {
        throw DimensionError("reduce_sum: axis " + std::to_string(axis) + " out of range for shape " +
                             to_string(sa));
    }
    const std::size_t outer_n = product(sa, 0, axis);
    const std::size_t n = sa[axis];
    const std::size_t inner = product(sa, axis + 1, sa.size());
    Shape out_shape(sa);
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    Tensor out(out_shape);
    const Tensor& A = a.value();
    for (std::size_t o = 0; o < outer_n; ++o) {
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t i = 0; i < inner; ++i) {
                out[o * inner + i] += A[(o * n + k) * inner + i];
            }
        }
    }
    const auto ia = a.id;
    return a.graph->record("reduce_sum", std::move(out), {a}, [ia, outer_n, n, inner](Graph& gr, const Tensor& dout) {
        Tensor& ga = *gr.adjoint(ia);
        for (std::size_t o = 0; o < outer_n; ++o) {
            for (std::size_t k = 0; k < n; ++k) {
                for (std::size_t i = 0; i < inner; ++i) {
                    ga[(o * n + k) * inner + i] += dout[o * inner + i];
                }
            }
        }
    });
}

Var sum_all(Var a) {
    double s = 0.0;
    for (double x : a.value().data()) {
        s += x;
    }
    const auto ia = a.id;
    return a.graph->record("sum_all", Tensor::scalar(s), {a}, [ia](Graph& gr, const Tensor& dout) {
        Tensor& ga = *gr.adjoint(ia);
        const double d = dout[0];
        for (std::size_t k = 0; k < ga.size(); ++k) {
            ga[k] += d;
        }
    });
}

Var conv1d(Var x, Var kernel) {
    Graph& g = graph_of(x, kernel);
    const Shape& sx = x.shape();
    const Shape& sk = kernel.shape();
    if (sk.size() != 3 || sx.size() != 2) {
        shape_error("conv1d", sx, sk);
    }
    const std::size_t k = sk[0];
    if (k % 2 == 0) {
        throw ConfigError("conv1d: kernel size must be odd, got " + std::to_string(k));
    }
    const std::size_t T = sx[0];
    const std::size_t D = sx[1];
    if (sk[1] != D || sk[2] != D) {
        shape_error("conv1d", sx, sk);
    }
    const auto half = static_cast<std::ptrdiff_t>(k / 2);
    auto src_row = [T, half](std::size_t t, std::size_t j) {
        std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(j) - half;
        if (idx < 0) {
            idx = 0;
        }
        if (idx >= static_cast<std::ptrdiff_t>(T)) {
            idx = static_cast<std::ptrdiff_t>(T) - 1;
        }
        return static_cast<std::size_t>(idx);
    };
    const Tensor& X = x.value();
    const Tensor& K = kernel.value();
    Tensor out(Shape{T, D});
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t row = src_row(t, j);
            for (std::size_t e = 0; e < D; ++e) {
                const double xv = X[row * D + e];
                const double* kk = K.data().data() + (j * D + e) * D;
                for (std::size_t d = 0; d < D; ++d) {
                    out[t * D + d] += kk[d] * xv;
                }
            }
        }
    }
    const auto ix = x.id;
    const auto ik = kernel.id;
    return g.record("conv1d", std::move(out), {x, kernel}, [ix, ik, T, D, k, src_row](Graph& gr, const Tensor& dout) {
        const Tensor& X = val(gr, ix);
        const Tensor& K = val(gr, ik);
        Tensor* gx = gr.adjoint(ix);
        Tensor* gk = gr.adjoint(ik);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t j = 0; j < k; ++j) {
                const std::size_t row = src_row(t, j);
                for (std::size_t e = 0; e < D; ++e) {
                    const std::size_t base = (j * D + e) * D;
                    double acc = 0.0;
                    for (std::size_t d = 0; d < D; ++d) {
                        const double go = dout[t * D + d];
                        acc += K[base + d] * go;
                        if (gk) {
                            (*gk)[base + d] += X[row * D + e] * go;
                        }
                    }
                    if (gx) {
                        (*gx)[row * D + e] += acc;
                    }
                }
            }
        }
    });
}

Var reshape(Var a, Shape shape) {
    if (element_count(shape) != a.value().size()) {
        shape_error("reshape", a.shape(), shape);
    }
    const auto ia = a.id;
    return a.graph->record("reshape", a.value().reshaped(std::move(shape)), {a}, [ia](Graph& gr, const Tensor& dout) {
        Tensor& ga = *gr.adjoint(ia);
        for (std::size_t k = 0; k < ga.size(); ++k) {
            ga[k] += dout[k];
        }
    });
}

Var transpose(Var a) {
    const Shape& sa = a.shape();
    if (sa.size() != 2) {
        throw DimensionError("transpose: rank-2 input required, got " + to_string(sa));
    }
    const std::size_t R = sa[0];
    const std::size_t C = sa[1];
    Tensor out(Shape{C, R});
    const Tensor& A = a.value();
    for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = 0; j < C; ++j) {
            out[j * R + i] = A[i * C + j];
        }
    }
    const auto ia = a.id;
    return a.graph->record("transpose", std::move(out), {a}, [ia, R, C](Graph& gr, const Tensor& dout) {
        Tensor& ga = *gr.adjoint(ia);
        for (std::size_t i = 0; i < R; ++i) {
            for (std::size_t j = 0; j < C; ++j) {
                ga[i * C + j] += dout[j * R + i];
            }
        }
    });
}

Var select(Var a, std::size_t index) {
    const Shape& sa = a.shape();
    if (sa.empty() || index >= sa[0]) {
        throw DimensionError("select: index " + std::to_string(index) + " out of range for shape " + to_string(sa));
    }
    const Shape out_shape(sa.begin() + 1, sa.end());
    const std::size_t block = element_count(out_shape);
    const auto first = a.value().storage().begin() + static_cast<std::ptrdiff_t>(index * block);
    Tensor out(out_shape, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(block)));
    const auto ia = a.id;
    return a.graph->record("select", std::move(out), {a}, [ia, index, block](Graph& gr, const Tensor& dout) {
        Tensor& ga = *gr.adjoint(ia);
        for (std::size_t k = 0; k < block; ++k) {
            ga[index * block + k] += dout[k];
        }
    });
}

Var stack(const std::vector<Var>& parts) {
    if (parts.empty()) {
        throw DimensionError("stack: no inputs");
    }
    const Shape& s0 = parts.front().shape();
    Shape out_shape{parts.size()};
    out_shape.insert(out_shape.end(), s0.begin(), s0.end());
    const std::size_t block = element_count(s0);
    std::vector<double> data;
    data.reserve(block * parts.size());
    std::vector<std::uint32_t> ids;
    for (const auto& p : parts) {
        if (p.graph != parts.front().graph) {
            throw ContractError("stack: operands belong to different graphs");
        }
        if (p.shape() != s0) {
            shape_error("stack", s0, p.shape());
        }
        const auto& st = p.value().storage();
        data.insert(data.end(), st.begin(), st.end());
        ids.push_back(p.id);
    }
    Graph& g = *parts.front().graph;
    return g.record("stack", Tensor(out_shape, std::move(data)), parts,
                    [ids = std::move(ids), block](Graph& gr, const Tensor& dout) {
                        for (std::size_t i = 0; i < ids.size(); ++i) {
                            if (Tensor* gp = gr.adjoint(ids[i])) {
                                for (std::size_t k = 0; k < block; ++k) {
                                    (*gp)[k] += dout[i * block + k];
                                }
                            }
                        }
                    });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
    if (parts.empty()) {
        throw DimensionError("concat: no inputs");
    }
    const Shape& s0 = parts.front().shape();
    if (axis >= s0.size()) {
        throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for shape " + to_string(s0));
    }
    std::size_t total = 0;
    std::vector<std::size_t> lens;
    std::vector<std::uint32_t> ids;
    for (const auto& p : parts) {
        if (p.graph != parts.front().graph) {
            throw ContractError("concat: operands belong to different graphs");
        }
        const Shape& sp = p.shape();
        bool ok = sp.size() == s0.size();
        for (std::size_t d = 0; ok && d < sp.size(); ++d) {
            ok = d == axis || sp[d] == s0[d];
        }
        if (!ok) {
            shape_error("concat", s0, sp);
        }
        lens.push_back(sp[axis]);
        total += sp[axis];
        ids.push_back(p.id);
    }
    const std::size_t outer_n = product(s0, 0, axis);
    const std::size_t inner = product(s0, axis + 1, s0.size());
    Shape out_shape(s0);
    out_shape[axis] = total;
    Tensor out(out_shape);
    std::size_t offset = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const Tensor& P = parts[p].value();
        for (std::size_t o = 0; o < outer_n; ++o) {
            for (std::size_t k = 0; k < lens[p]; ++k) {
                for (std::size_t i = 0; i < inner; ++i) {
                    out[(o * total + offset + k) * inner + i] = P[(o * lens[p] + k) * inner + i];
                }
            }
        }
        offset += lens[p];
    }
    Graph& g = *parts.front().graph;
    return g.record("concat", std::move(out), parts,
                    [ids = std::move(ids), lens = std::move(lens), outer_n, inner, total](Graph& gr, const Tensor& dout) {
                        std::size_t off = 0;
                        for (std::size_t p = 0; p < ids.size(); ++p) {
                            if (Tensor* gp = gr.adjoint(ids[p])) {
                                for (std::size_t o = 0; o < outer_n; ++o) {
                                    for (std::size_t k = 0; k < lens[p]; ++k) {
                                        for (std::size_t i = 0; i < inner; ++i) {
                                            (*gp)[(o * lens[p] + k) * inner + i] +=
                                                dout[(o * total + off + k) * inner + i];
                                        }
                                    }
                                }
                            }
                            off += lens[p];
                        }
                    });
}

Var pad_front_replicate(Var a, std::size_t count) {
    const Shape& sa = a.shape();
    if (sa.size() != 2) {
        throw DimensionError("pad_front_replicate: rank-2 input required, got " + to_string(sa));
    }
    if (count == 0) {
        return a;
    }
    const std::size_t T = sa[0];
    const std::size_t D = sa[1];
    Tensor out(Shape{T + count, D});
    const Tensor& A = a.value();
    for (std::size_t t = 0; t < T + count; ++t) {
        const std::size_t src = t < count ? 0 : t - count;
        for (std::size_t d = 0; d < D; ++d) {
            out[t * D + d] = A[src * D + d];
        }
    }
    const auto ia = a.id;
    return a.graph->record("pad_front_replicate", std::move(out), {a}, [ia, T, D, count](Graph& gr, const Tensor& dout) {
        Tensor& ga = *gr.adjoint(ia);
        for (std::size_t t = 0; t < T + count; ++t) {
            const std::size_t src = t < count ? 0 : t - count;
            for (std::size_t d = 0; d < D; ++d) {
                ga[src * D + d] += dout[t * D + d];
            }
        }
    });
}

}  // namespace afgm
