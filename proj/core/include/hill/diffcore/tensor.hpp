#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hill::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape) noexcept;
std::string to_string(const Shape& shape);

enum class NodeKind { input, parameter, op };

// One vertex of the computation graph. Values are computed eagerly at
// construction; backward_fn pushes this node's grad into its parents.
template <class T>
struct Node {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until first needed
    NodeKind kind = NodeKind::input;
    std::string op;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;
    std::uint64_t seq = 0;
    bool requires_grad = false;
    bool frozen = false;

    void ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), T{0});
    }
};

std::uint64_t next_node_seq() noexcept;

// Shared handle to a graph node (the "graph value"). Copies alias the node.
template <class T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

    // Constant leaf; never receives a gradient.
    static Tensor input(Shape shape, std::vector<T> data);
    // Trainable leaf.
    static Tensor parameter(Shape shape, std::vector<T> data);
    static Tensor scalar(T value) { return input({1}, {value}); }

    explicit operator bool() const noexcept { return static_cast<bool>(node_); }

    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->data.size(); }
    std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
    std::span<const T> data() const { return node_->data; }
    // Throws frozen_violation for frozen parameters.
    std::span<T> mutable_data() const;
    std::span<const T> grad() const { return node_->grad; }
    T item() const;

    NodeKind kind() const { return node_->kind; }
    const std::string& op() const { return node_->op; }
    bool requires_grad() const { return node_->requires_grad; }
    bool frozen() const { return node_->frozen; }
    // Frozen parameters keep their values and stop requesting gradients.
    void freeze() const;
    std::uint64_t seq() const { return node_->seq; }
    const std::vector<std::shared_ptr<Node<T>>>& parents() const { return node_->parents; }

    Node<T>* node() const noexcept { return node_.get(); }
    const std::shared_ptr<Node<T>>& ptr() const noexcept { return node_; }

private:
    std::shared_ptr<Node<T>> node_;
};

// Builds an operator node. `backward` is retained only if some parent needs grad.
template <class T>
Tensor<T> make_op(std::string op, Shape shape, std::vector<T> data,
                  std::vector<Tensor<T>> parents, std::function<void(Node<T>&)> backward);

// Constant copy with no history.
template <class T>
Tensor<T> detach(const Tensor<T>& x);

template <class To, class From>
Tensor<To> cast_leaf(const Tensor<From>& x) {
    std::vector<To> values(x.data().begin(), x.data().end());
    Tensor<To> out = x.kind() == NodeKind::parameter ? Tensor<To>::parameter(x.shape(), std::move(values))
                                                     : Tensor<To>::input(x.shape(), std::move(values));
    if (x.frozen()) out.freeze();
    return out;
}

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace hill::ad
