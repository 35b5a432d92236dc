#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dvx::nn {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

template <typename T>
struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // empty until something flows into it
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    /// Reads this->grad and accumulates into the parents' grads.
    std::function<void()> backward;

    T* ensure_grad() {
        if (grad.empty()) {
            grad.assign(value.size(), T(0));
        }
        return grad.data();
    }
};

/// Shared handle to a dense row-major array plus its place in the autodiff graph.
///
/// Ops never mutate their inputs. A result records parents only when gradient recording is
/// enabled (see NoGradGuard) and some input requires a gradient.
template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, T value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false);
    static Tensor scalar(T value, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(node_); }
    const Shape& shape() const { return node_->shape; }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    int dim(int axis) const;
    std::size_t numel() const { return node_->value.size(); }

    std::span<const T> data() const { return node_->value; }
    /// Writable view; only meant for leaves (parameters, inputs) outside of a recorded graph.
    std::span<T> mutable_data() { return node_->value; }
    std::span<const T> grad() const { return node_->grad; }
    std::span<T> mutable_grad() { return {node_->ensure_grad(), node_->value.size()}; }
    bool has_grad() const { return !node_->grad.empty(); }
    void zero_grad() { node_->grad.clear(); }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool r) { node_->requires_grad = r; }

    T item() const;
    T at(std::initializer_list<int> idx) const;

    /// Seeds d(this)/d(this) = 1 on a single-element tensor and back-propagates through the
    /// recorded graph. Each node's backward runs once, in reverse topological order, and
    /// gradients accumulate additively.
    void backward() const;

    /// New leaf holding a copy of the values, without history.
    Tensor detach() const;

    Node<T>* node() const { return node_.get(); }
    const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

private:
    std::shared_ptr<Node<T>> node_;
};

bool grad_enabled();

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Builds an op result; attaches parents and backward only when recording applies.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::vector<Tensor<T>> inputs,
                      std::function<void(Node<T>& out)> backward);

}  // namespace dvx::nn
