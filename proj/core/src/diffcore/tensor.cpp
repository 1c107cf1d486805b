#include "hill/diffcore/tensor.hpp"

#include <atomic>
#include <sstream>

#include "hill/error.hpp"

namespace hill::ad {

std::size_t numel(const Shape& shape) noexcept {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

std::uint64_t next_node_seq() noexcept {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
}

namespace {

template <class T>
std::shared_ptr<Node<T>> make_leaf(Shape shape, std::vector<T> data, NodeKind kind) {
    if (shape.empty()) throw Error(ErrorCode::shape_mismatch, "leaf with empty shape");
    for (auto d : shape) {
        if (d == 0) throw Error(ErrorCode::shape_mismatch, "leaf with zero extent " + to_string(shape));
    }
    if (numel(shape) != data.size()) {
        throw Error(ErrorCode::shape_mismatch, "leaf data length " + std::to_string(data.size()) +
                                                   " does not match shape " + to_string(shape));
    }
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->kind = kind;
    node->op = kind == NodeKind::parameter ? "parameter" : "input";
    node->seq = next_node_seq();
    node->requires_grad = kind == NodeKind::parameter;
    return node;
}

}  // namespace

template <class T>
Tensor<T> Tensor<T>::input(Shape shape, std::vector<T> data) {
    return Tensor(make_leaf(std::move(shape), std::move(data), NodeKind::input));
}

template <class T>
Tensor<T> Tensor<T>::parameter(Shape shape, std::vector<T> data) {
    return Tensor(make_leaf(std::move(shape), std::move(data), NodeKind::parameter));
}

template <class T>
std::span<T> Tensor<T>::mutable_data() const {
    if (node_->frozen) throw Error(ErrorCode::frozen_violation, "write to frozen parameter");
    return node_->data;
}

template <class T>
T Tensor<T>::item() const {
    if (node_->data.size() != 1) {
        throw Error(ErrorCode::shape_mismatch, "item() on tensor of shape " + to_string(node_->shape));
    }
    return node_->data[0];
}

template <class T>
void Tensor<T>::freeze() const {
    node_->frozen = true;
    node_->requires_grad = false;
}

template <class T>
Tensor<T> make_op(std::string op, Shape shape, std::vector<T> data, std::vector<Tensor<T>> parents,
                  std::function<void(Node<T>&)> backward) {
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->kind = NodeKind::op;
    node->op = std::move(op);
    node->seq = next_node_seq();
    bool needs = false;
    node->parents.reserve(parents.size());
    for (auto& p : parents) {
        needs = needs || p.requires_grad();
        node->parents.push_back(p.ptr());
    }
    node->requires_grad = needs;
    if (needs) node->backward_fn = std::move(backward);
    return Tensor<T>(std::move(node));
}

template <class T>
Tensor<T> detach(const Tensor<T>& x) {
    return Tensor<T>::input(x.shape(), std::vector<T>(x.data().begin(), x.data().end()));
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> make_op(std::string, Shape, std::vector<float>, std::vector<Tensor<float>>,
                               std::function<void(Node<float>&)>);
template Tensor<double> make_op(std::string, Shape, std::vector<double>, std::vector<Tensor<double>>,
                                std::function<void(Node<double>&)>);
template Tensor<float> detach(const Tensor<float>&);
template Tensor<double> detach(const Tensor<double>&);

}  // namespace hill::ad
