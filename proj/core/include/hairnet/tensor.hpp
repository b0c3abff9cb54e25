#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hairnet::nn {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array.
template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(Shape s, T fill = T(0)) : shape(std::move(s)), data(numel(shape), fill) {}
    Tensor(Shape s, std::vector<T> d);

    std::size_t size() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.assign(data.begin(), data.end());
        return out;
    }

    bool operator==(const Tensor&) const = default;
};

template <typename T>
class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
template <typename T>
class Var {
public:
    Var() = default;
    Var(Tape<T>* tape, int id) : tape_(tape), id_(id) {}

    const Tensor<T>& value() const { return tape_->value(id_); }
    const Shape& shape() const { return value().shape; }
    std::span<const T> grad() const { return tape_->grad(id_); }
    T item() const { return value().data.at(0); }

    Tape<T>* tape() const { return tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape<T>* tape_ = nullptr;
    int id_ = -1;
};

/// Records operations in execution order; backward() replays them in reverse,
/// visiting each node at most once.
template <typename T>
class Tape {
public:
    using Backward = std::function<void(Tape&, int self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var<T> constant(Tensor<T> value);
    Var<T> leaf(Tensor<T> value);
    /// Borrowed leaf: `value` must outlive the tape.
    Var<T> parameter(const Tensor<T>& value);

    /// Output of an op. requires_grad is inherited from the inputs.
    Var<T> record(Tensor<T> value, const std::vector<int>& inputs, Backward backward);

    void backward(const Var<T>& scalar);

    const Tensor<T>& value(int id) const;
    std::span<const T> grad(int id) const;
    bool requires_grad(int id) const { return nodes_[id].requires_grad; }
    std::vector<T>& grad_buffer(int id);
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor<T> owned;
        const Tensor<T>* borrowed = nullptr;
        std::vector<T> grad;
        bool requires_grad = false;
        Backward backward;
    };
    std::vector<Node> nodes_;
};

// ---- operators ------------------------------------------------------------------------------
// Inputs are single samples (no batch axis): images are C x H x W.

/// Cross-correlation plus bias. weight: C_out x C_in x k x k, bias: C_out.
template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias, int stride, int padding);

/// Non-overlapping max pooling with window and stride k; ties route to the first index.
template <typename T>
Var<T> max_pool2d(const Var<T>& input, int k);

template <typename T>
Var<T> relu(const Var<T>& x);

template <typename T>
Var<T> tanh(const Var<T>& x);

/// y = W x + b with W: out x in.
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape);

/// x2 bilinear upsampling, align_corners = false.
template <typename T>
Var<T> upsample_bilinear2x(const Var<T>& x);

/// sum_i x_i * r_i with a constant r; used to reduce to a scalar for gradient checks.
template <typename T>
Var<T> dot_constant(const Var<T>& x, const Tensor<T>& r);

/// a*x + b*y for scalars or equal shapes.
template <typename T>
Var<T> axpby(T a, const Var<T>& x, T b, const Var<T>& y);

template <typename T>
Var<T> scale(const Var<T>& x, T a);

/// Output spatial size of a convolution; throws ShapeError when non-positive.
int conv_output_size(int in, int kernel, int stride, int padding);

}  // namespace hairnet::nn
