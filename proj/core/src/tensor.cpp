#include "hairnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hairnet/errors.hpp"
#include "hairnet/parallel.hpp"

namespace hairnet::nn {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel(shape)) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                         shape_string(shape));
    }
}

// ---- tape -------------------------------------------------------------------------------------

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
    nodes_.push_back(Node{std::move(value), nullptr, {}, false, {}});
    return {this, static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value) {
    nodes_.push_back(Node{std::move(value), nullptr, {}, true, {}});
    return {this, static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
Var<T> Tape<T>::parameter(const Tensor<T>& value) {
    nodes_.push_back(Node{{}, &value, {}, true, {}});
    return {this, static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, const std::vector<int>& inputs, Backward backward) {
    bool rg = false;
    for (int in : inputs) rg = rg || nodes_[in].requires_grad;
    nodes_.push_back(Node{std::move(value), nullptr, {}, rg, rg ? std::move(backward) : Backward{}});
    return {this, static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
const Tensor<T>& Tape<T>::value(int id) const {
    const auto& n = nodes_[id];
    return n.borrowed ? *n.borrowed : n.owned;
}

template <typename T>
std::span<const T> Tape<T>::grad(int id) const {
    return nodes_[id].grad;
}

template <typename T>
std::vector<T>& Tape<T>::grad_buffer(int id) {
    auto& n = nodes_[id];
    if (n.grad.empty()) n.grad.assign(value(id).size(), T(0));
    return n.grad;
}

template <typename T>
void Tape<T>::backward(const Var<T>& scalar) {
    if (scalar.tape() != this) throw std::invalid_argument("backward: variable belongs to another tape");
    if (value(scalar.id()).size() != 1) throw ShapeError("backward: output must be a scalar");
    if (!nodes_[scalar.id()].requires_grad) return;
    grad_buffer(scalar.id())[0] = T(1);
    for (int id = scalar.id(); id >= 0; --id) {
        auto& n = nodes_[id];
        if (n.backward && !n.grad.empty()) n.backward(*this, id);
    }
}

namespace {

// ---- dense kernels ----------------------------------------------------------------------------

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    T acc[8] = {};
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        for (int u = 0; u < 8; ++u) acc[u] += a[k + u] * b[k + u];
    }
    T s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (; k < n; ++k) s += a[k] * b[k];
    return s;
}

template <typename T>
void axpy(T a, const T* x, T* y, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) y[k] += a * x[k];
}

// C (M x N) += A (M x K) * B (K x N). Column tiles keep a slab of B cache resident;
// each output still accumulates over k in order.
template <typename T>
void gemm_nn(int M, int N, int K, const T* A, const T* B, T* C) {
    const int tile = std::max(16, std::min(N, static_cast<int>(65536 / sizeof(T) / std::max(K, 1)) / 16 * 16));
    const int row_blocks = (M + 3) / 4;
    parallel_for(static_cast<std::size_t>(row_blocks), [&](std::size_t rb) {
        const int i0 = static_cast<int>(rb) * 4;
        const int rows = std::min(4, M - i0);
        for (int j0 = 0; j0 < N; j0 += tile) {
            const int cols = std::min(tile, N - j0);
            if (rows == 4) {
                T* c0 = C + static_cast<std::size_t>(i0) * N + j0;
                T* c1 = c0 + N;
                T* c2 = c1 + N;
                T* c3 = c2 + N;
                const T* a0 = A + static_cast<std::size_t>(i0) * K;
                const T* a1 = a0 + K;
                const T* a2 = a1 + K;
                const T* a3 = a2 + K;
                for (int k = 0; k < K; ++k) {
                    const T* b = B + static_cast<std::size_t>(k) * N + j0;
                    const T w0 = a0[k], w1 = a1[k], w2 = a2[k], w3 = a3[k];
                    for (int j = 0; j < cols; ++j) {
                        const T bj = b[j];
                        c0[j] += w0 * bj;
                        c1[j] += w1 * bj;
                        c2[j] += w2 * bj;
                        c3[j] += w3 * bj;
                    }
                }
            } else {
                for (int r = 0; r < rows; ++r) {
                    T* c = C + static_cast<std::size_t>(i0 + r) * N + j0;
                    const T* a = A + static_cast<std::size_t>(i0 + r) * K;
                    for (int k = 0; k < K; ++k) axpy(a[k], B + static_cast<std::size_t>(k) * N + j0, c, cols);
                }
            }
        }
    });
}

// C (M x N) += A (M x K) * B^T where B is N x K.
template <typename T>
void gemm_nt(int M, int N, int K, const T* A, const T* B, T* C) {
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t i) {
        const T* a = A + i * K;
        T* c = C + i * N;
        for (int j = 0; j < N; ++j) c[j] += dot(a, B + static_cast<std::size_t>(j) * K, static_cast<std::size_t>(K));
    });
}

// C (M x N) += A^T * B where A is K x M and B is K x N.
template <typename T>
void gemm_tn(int M, int N, int K, const T* A, const T* B, T* C) {
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t i) {
        T* c = C + i * N;
        for (int k = 0; k < K; ++k) axpy(A[static_cast<std::size_t>(k) * M + i], B + static_cast<std::size_t>(k) * N, c, N);
    });
}

struct ConvGeom {
    int cin, h, w, cout, k, stride, pad, ho, wo;
    int kdim() const { return cin * k * k; }
    int pixels() const { return ho * wo; }
    bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
};

template <typename T>
void im2col(const ConvGeom& g, const T* x, T* col) {
    parallel_for(static_cast<std::size_t>(g.kdim()), [&](std::size_t row) {
        const int kw = static_cast<int>(row % g.k);
        const int kh = static_cast<int>((row / g.k) % g.k);
        const int c = static_cast<int>(row / (g.k * g.k));
        T* out = col + row * g.pixels();
        for (int oy = 0; oy < g.ho; ++oy) {
            const int iy = oy * g.stride - g.pad + kh;
            for (int ox = 0; ox < g.wo; ++ox) {
                const int ix = ox * g.stride - g.pad + kw;
                const bool in = iy >= 0 && iy < g.h && ix >= 0 && ix < g.w;
                out[oy * g.wo + ox] = in ? x[(static_cast<std::size_t>(c) * g.h + iy) * g.w + ix] : T(0);
            }
        }
    });
}

// Scatter-add of col back to the image; parallel over input channels so writes never overlap.
template <typename T>
void col2im(const ConvGeom& g, const T* col, T* dx) {
    parallel_for(static_cast<std::size_t>(g.cin), [&](std::size_t c) {
        for (int kh = 0; kh < g.k; ++kh) {
            for (int kw = 0; kw < g.k; ++kw) {
                const T* src = col + ((c * g.k + kh) * g.k + kw) * g.pixels();
                for (int oy = 0; oy < g.ho; ++oy) {
                    const int iy = oy * g.stride - g.pad + kh;
                    if (iy < 0 || iy >= g.h) continue;
                    for (int ox = 0; ox < g.wo; ++ox) {
                        const int ix = ox * g.stride - g.pad + kw;
                        if (ix < 0 || ix >= g.w) continue;
                        dx[(c * g.h + iy) * g.w + ix] += src[oy * g.wo + ox];
                    }
                }
            }
        }
    });
}

template <typename T>
void expect_rank(const Tensor<T>& t, int rank, const char* what) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + shape_string(t.shape));
    }
}

}  // namespace

int conv_output_size(int in, int kernel, int stride, int padding) {
    if (stride <= 0) throw ShapeError("conv: stride must be positive");
    const int span = in + 2 * padding - kernel;
    if (span < 0) throw ShapeError("conv: kernel " + std::to_string(kernel) + " exceeds padded input " + std::to_string(in + 2 * padding));
    return span / stride + 1;
}

// ---- operators --------------------------------------------------------------------------------

template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, int stride, int padding) {
    Tape<T>& tape = *input.tape();
    const auto& x = input.value();
    const auto& wt = weight.value();
    const auto& b = bias.value();
    expect_rank(x, 3, "conv2d input");
    expect_rank(wt, 4, "conv2d weight");
    if (wt.dim(1) != x.dim(0)) {
        throw ShapeError("conv2d: input channels " + std::to_string(x.dim(0)) + " != weight in_ch " + std::to_string(wt.dim(1)));
    }
    if (wt.dim(2) != wt.dim(3)) throw ShapeError("conv2d: kernel must be square, got " + shape_string(wt.shape));
    if (b.size() != static_cast<std::size_t>(wt.dim(0))) {
        throw ShapeError("conv2d: bias length " + std::to_string(b.size()) + " != out_ch " + std::to_string(wt.dim(0)));
    }
    ConvGeom g{x.dim(0), x.dim(1), x.dim(2), wt.dim(0), wt.dim(2), stride, padding, 0, 0};
    g.ho = conv_output_size(g.h, g.k, stride, padding);
    g.wo = conv_output_size(g.w, g.k, stride, padding);

    Tensor<T> out({g.cout, g.ho, g.wo});
    for (int co = 0; co < g.cout; ++co) std::fill_n(out.data.begin() + static_cast<std::ptrdiff_t>(co) * g.pixels(), g.pixels(), b.data[co]);
    std::vector<T> col;
    const T* colp = x.data.data();
    if (!g.pointwise()) {
        col.resize(static_cast<std::size_t>(g.kdim()) * g.pixels());
        im2col(g, x.data.data(), col.data());
        colp = col.data();
    }
    gemm_nn(g.cout, g.pixels(), g.kdim(), wt.data.data(), colp, out.data.data());

    const int xi = input.id(), wi = weight.id(), bi = bias.id();
    return tape.record(std::move(out), {xi, wi, bi}, [g, xi, wi, bi](Tape<T>& t, int self) {
        const auto& dy = t.grad(self);
        const auto& xv = t.value(xi).data;
        const auto& wv = t.value(wi).data;
        if (t.requires_grad(bi)) {
            auto& db = t.grad_buffer(bi);
            for (int co = 0; co < g.cout; ++co) {
                T s = 0;
                const T* row = dy.data() + static_cast<std::size_t>(co) * g.pixels();
                for (int p = 0; p < g.pixels(); ++p) s += row[p];
                db[co] += s;
            }
        }
        std::vector<T> col;
        const T* colp = xv.data();
        if (!g.pointwise()) {
            col.resize(static_cast<std::size_t>(g.kdim()) * g.pixels());
            im2col(g, xv.data(), col.data());
            colp = col.data();
        }
        if (t.requires_grad(wi)) gemm_nt(g.cout, g.kdim(), g.pixels(), dy.data(), colp, t.grad_buffer(wi).data());
        if (t.requires_grad(xi)) {
            if (g.pointwise()) {
                gemm_tn(g.kdim(), g.pixels(), g.cout, wv.data(), dy.data(), t.grad_buffer(xi).data());
            } else {
                std::vector<T> dcol(static_cast<std::size_t>(g.kdim()) * g.pixels(), T(0));
                gemm_tn(g.kdim(), g.pixels(), g.cout, wv.data(), dy.data(), dcol.data());
                col2im(g, dcol.data(), t.grad_buffer(xi).data());
            }
        }
    });
}

template <typename T>
Var<T> max_pool2d(const Var<T>& input, int k) {
    Tape<T>& tape = *input.tape();
    const auto& x = input.value();
    expect_rank(x, 3, "max_pool2d input");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    if (k <= 0 || k > h || k > w) {
        throw ShapeError("max_pool2d: window " + std::to_string(k) + " larger than input " + shape_string(x.shape));
    }
    const int ho = h / k, wo = w / k;
    Tensor<T> out({c, ho, wo});
    std::vector<int> arg(out.size());
    for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                int best = (ch * h + oy * k) * w + ox * k;
                for (int dy = 0; dy < k; ++dy) {
                    for (int dx = 0; dx < k; ++dx) {
                        const int idx = (ch * h + oy * k + dy) * w + ox * k + dx;
                        if (x.data[idx] > x.data[best]) best = idx;
                    }
                }
                const auto o = static_cast<std::size_t>((ch * ho + oy) * wo + ox);
                out.data[o] = x.data[best];
                arg[o] = best;
            }
        }
    }
    const int xi = input.id();
    return tape.record(std::move(out), {xi}, [xi, arg = std::move(arg)](Tape<T>& t, int self) {
        const auto& dy = t.grad(self);
        auto& dx = t.grad_buffer(xi);
        for (std::size_t o = 0; o < arg.size(); ++o) dx[arg[o]] += dy[o];
    });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
    Tensor<T> out = x.value();
    for (auto& v : out.data) v = v > T(0) ? v : T(0);
    const int xi = x.id();
    return x.tape()->record(std::move(out), {xi}, [xi](Tape<T>& t, int self) {
        const auto& dy = t.grad(self);
        const auto& xv = t.value(xi).data;
        auto& dx = t.grad_buffer(xi);
        for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += xv[k] > T(0) ? dy[k] : T(0);
    });
}

template <typename T>
Var<T> tanh(const Var<T>& x) {
    Tensor<T> out = x.value();
    for (auto& v : out.data) v = std::tanh(v);
    const int xi = x.id();
    return x.tape()->record(std::move(out), {xi}, [xi](Tape<T>& t, int self) {
        const auto& dy = t.grad(self);
        const auto& yv = t.value(self).data;
        auto& dx = t.grad_buffer(xi);
        for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += dy[k] * (T(1) - yv[k] * yv[k]);
    });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
    const auto& xv = x.value();
    const auto& wv = weight.value();
    const auto& bv = bias.value();
    expect_rank(wv, 2, "linear weight");
    const int out_n = wv.dim(0), in_n = wv.dim(1);
    if (xv.size() != static_cast<std::size_t>(in_n)) {
        throw ShapeError("linear: input length " + std::to_string(xv.size()) + " != in_features " + std::to_string(in_n));
    }
    if (bv.size() != static_cast<std::size_t>(out_n)) {
        throw ShapeError("linear: bias length " + std::to_string(bv.size()) + " != out_features " + std::to_string(out_n));
    }
    Tensor<T> out({out_n});
    for (int o = 0; o < out_n; ++o) out.data[o] = bv.data[o] + dot(wv.data.data() + static_cast<std::size_t>(o) * in_n, xv.data.data(), in_n);
    const int xi = x.id(), wi = weight.id(), bi = bias.id();
    return x.tape()->record(std::move(out), {xi, wi, bi}, [xi, wi, bi, in_n, out_n](Tape<T>& t, int self) {
        const auto& dy = t.grad(self);
        if (t.requires_grad(bi)) {
            auto& db = t.grad_buffer(bi);
            for (int o = 0; o < out_n; ++o) db[o] += dy[o];
        }
        if (t.requires_grad(wi)) {
            const auto& xv = t.value(xi).data;
            auto& dw = t.grad_buffer(wi);
            for (int o = 0; o < out_n; ++o) axpy(dy[o], xv.data(), dw.data() + static_cast<std::size_t>(o) * in_n, in_n);
        }
        if (t.requires_grad(xi)) {
            const auto& wv = t.value(wi).data;
            auto& dx = t.grad_buffer(xi);
            for (int o = 0; o < out_n; ++o) axpy(dy[o], wv.data() + static_cast<std::size_t>(o) * in_n, dx.data(), in_n);
        }
    });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
    if (numel(shape) != x.value().size()) {
        throw ShapeError("reshape: " + shape_string(x.shape()) + " -> " + shape_string(shape) + " changes element count");
    }
    Tensor<T> out(std::move(shape), x.value().data);
    const int xi = x.id();
    return x.tape()->record(std::move(out), {xi}, [xi](Tape<T>& t, int self) {
        const auto& dy = t.grad(self);
        auto& dx = t.grad_buffer(xi);
        for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += dy[k];
    });
}

namespace {

struct Lerp {
    int i0, i1;
    double l;
};

// align_corners = false: output index o samples source coordinate (o + 0.5) / 2 - 0.5.
std::vector<Lerp> upsample_taps(int n) {
    std::vector<Lerp> taps(static_cast<std::size_t>(2 * n));
    for (int o = 0; o < 2 * n; ++o) {
        double src = (o + 0.5) * 0.5 - 0.5;
        if (src < 0.0) src = 0.0;
        const int i0 = std::min(static_cast<int>(src), n - 1);
        const int i1 = std::min(i0 + 1, n - 1);
        taps[o] = {i0, i1, src - i0};
    }
    return taps;
}

}  // namespace

template <typename T>
Var<T> upsample_bilinear2x(const Var<T>& x) {
    const auto& xv = x.value();
    expect_rank(xv, 3, "upsample input");
    const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    const auto ty = upsample_taps(h), tx = upsample_taps(w);
    Tensor<T> out({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch) {
        const T* src = xv.data.data() + static_cast<std::size_t>(ch) * h * w;
        T* dst = out.data.data() + static_cast<std::size_t>(ch) * 4 * h * w;
        for (int oy = 0; oy < 2 * h; ++oy) {
            const auto& a = ty[oy];
            const T ly = static_cast<T>(a.l);
            for (int ox = 0; ox < 2 * w; ++ox) {
                const auto& b = tx[ox];
                const T lx = static_cast<T>(b.l);
                const T top = (T(1) - lx) * src[a.i0 * w + b.i0] + lx * src[a.i0 * w + b.i1];
                const T bot = (T(1) - lx) * src[a.i1 * w + b.i0] + lx * src[a.i1 * w + b.i1];
                dst[oy * 2 * w + ox] = (T(1) - ly) * top + ly * bot;
            }
        }
    }
    const int xi = x.id();
    return x.tape()->record(std::move(out), {xi}, [xi, c, h, w, ty, tx](Tape<T>& t, int self) {
        const auto& dy = t.grad(self);
        auto& dx = t.grad_buffer(xi);
        for (int ch = 0; ch < c; ++ch) {
            T* g = dx.data() + static_cast<std::size_t>(ch) * h * w;
            const T* src = dy.data() + static_cast<std::size_t>(ch) * 4 * h * w;
            for (int oy = 0; oy < 2 * h; ++oy) {
                const auto& a = ty[oy];
                const T ly = static_cast<T>(a.l);
                for (int ox = 0; ox < 2 * w; ++ox) {
                    const auto& b = tx[ox];
                    const T lx = static_cast<T>(b.l);
                    const T d = src[oy * 2 * w + ox];
                    g[a.i0 * w + b.i0] += (T(1) - ly) * (T(1) - lx) * d;
                    g[a.i0 * w + b.i1] += (T(1) - ly) * lx * d;
                    g[a.i1 * w + b.i0] += ly * (T(1) - lx) * d;
                    g[a.i1 * w + b.i1] += ly * lx * d;
                }
            }
        }
    });
}

template <typename T>
Var<T> dot_constant(const Var<T>& x, const Tensor<T>& r) {
    if (r.size() != x.value().size()) throw ShapeError("dot_constant: length mismatch " + shape_string(x.shape()) + " vs " + shape_string(r.shape));
    Tensor<T> out({1});
    T s = 0;
    for (std::size_t k = 0; k < r.size(); ++k) s += x.value().data[k] * r.data[k];
    out.data[0] = s;
    const int xi = x.id();
    return x.tape()->record(std::move(out), {xi}, [xi, r](Tape<T>& t, int self) {
        const T d = t.grad(self)[0];
        auto& dx = t.grad_buffer(xi);
        for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += d * r.data[k];
    });
}

template <typename T>
Var<T> axpby(T a, const Var<T>& x, T b, const Var<T>& y) {
    if (x.value().size() != y.value().size()) throw ShapeError("axpby: " + shape_string(x.shape()) + " vs " + shape_string(y.shape()));
    Tensor<T> out = x.value();
    for (std::size_t k = 0; k < out.size(); ++k) out.data[k] = a * x.value().data[k] + b * y.value().data[k];
    const int xi = x.id(), yi = y.id();
    return x.tape()->record(std::move(out), {xi, yi}, [a, b, xi, yi](Tape<T>& t, int self) {
        const auto& d = t.grad(self);
        if (t.requires_grad(xi)) {
            auto& dx = t.grad_buffer(xi);
            for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += a * d[k];
        }
        if (t.requires_grad(yi)) {
            auto& dy = t.grad_buffer(yi);
            for (std::size_t k = 0; k < dy.size(); ++k) dy[k] += b * d[k];
        }
    });
}

template <typename T>
Var<T> scale(const Var<T>& x, T a) {
    Tensor<T> out = x.value();
    for (auto& v : out.data) v *= a;
    const int xi = x.id();
    return x.tape()->record(std::move(out), {xi}, [a, xi](Tape<T>& t, int self) {
        const auto& d = t.grad(self);
        auto& dx = t.grad_buffer(xi);
        for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += a * d[k];
    });
}

#define HAIRNET_INSTANTIATE(T)                                                        \
    template struct Tensor<T>;                                                        \
    template class Tape<T>;                                                           \
    template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, int, int);    \
    template Var<T> max_pool2d(const Var<T>&, int);                                   \
    template Var<T> relu(const Var<T>&);                                              \
    template Var<T> tanh(const Var<T>&);                                              \
    template Var<T> linear(const Var<T>&, const Var<T>&, const Var<T>&);              \
    template Var<T> reshape(const Var<T>&, Shape);                                    \
    template Var<T> upsample_bilinear2x(const Var<T>&);                               \
    template Var<T> dot_constant(const Var<T>&, const Tensor<T>&);                    \
    template Var<T> axpby(T, const Var<T>&, T, const Var<T>&);                        \
    template Var<T> scale(const Var<T>&, T);

HAIRNET_INSTANTIATE(float)
HAIRNET_INSTANTIATE(double)

}  // namespace hairnet::nn
