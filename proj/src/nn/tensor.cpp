#include "dvx/nn/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "dvx/core/error.hpp"

namespace dvx::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (const int d : s) {
        if (d < 0) {
            fail(ErrorKind::Data, "negative dimension in shape " + shape_str(s));
        }
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t k = 0; k < s.size(); ++k) {
        os << (k ? "x" : "") << s[k];
    }
    os << ']';
    return os.str();
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
    auto node = std::make_shared<Node<T>>();
    node->value.assign(shape_numel(shape), value);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(node);
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> data, bool requires_grad) {
    if (shape_numel(shape) != data.size()) {
        fail(ErrorKind::Data, "tensor data length " + std::to_string(data.size()) + " does not match shape " +
                                  shape_str(shape));
    }
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(node);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
    return from({}, {value}, requires_grad);
}

template <typename T>
int Tensor<T>::dim(int axis) const {
    const int r = rank();
    if (axis < 0) {
        axis += r;
    }
    if (axis < 0 || axis >= r) {
        fail(ErrorKind::Data, "axis out of range for shape " + shape_str(shape()));
    }
    return node_->shape[static_cast<std::size_t>(axis)];
}

template <typename T>
T Tensor<T>::item() const {
    if (numel() != 1) {
        fail(ErrorKind::Data, "item() on tensor of shape " + shape_str(shape()));
    }
    return node_->value[0];
}

template <typename T>
T Tensor<T>::at(std::initializer_list<int> idx) const {
    if (idx.size() != node_->shape.size()) {
        fail(ErrorKind::Data, "index rank mismatch for shape " + shape_str(shape()));
    }
    std::size_t flat = 0;
    std::size_t k = 0;
    for (const int i : idx) {
        flat = flat * static_cast<std::size_t>(node_->shape[k]) + static_cast<std::size_t>(i);
        ++k;
    }
    return node_->value[flat];
}

template <typename T>
void Tensor<T>::backward() const {
    if (numel() != 1) {
        fail(ErrorKind::Data, "backward() needs a single-element tensor, got " + shape_str(shape()));
    }
    // iterative post-order DFS gives a topological order
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node<T>* p = n->parents[next++].get();
            if (seen.insert(p).second) {
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    node_->ensure_grad()[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        if (n->backward && !n->grad.empty()) {
            n->backward();
        }
    }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
    return from(node_->shape, node_->value, false);
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::vector<Tensor<T>> inputs,
                      std::function<void(Node<T>& out)> backward) {
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    bool record = false;
    if (grad_enabled()) {
        for (const auto& in : inputs) {
            if (in.requires_grad()) {
                record = true;
                break;
            }
        }
    }
    if (record) {
        node->requires_grad = true;
        for (auto& in : inputs) {
            node->parents.push_back(in.node_ptr());
        }
        Node<T>* self = node.get();
        node->backward = [self, fn = std::move(backward)] { fn(*self); };
    }
    return Tensor<T>(node);
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> make_result<float>(Shape, std::vector<float>, std::vector<Tensor<float>>,
                                          std::function<void(Node<float>&)>);
template Tensor<double> make_result<double>(Shape, std::vector<double>, std::vector<Tensor<double>>,
                                            std::function<void(Node<double>&)>);

}  // namespace dvx::nn
