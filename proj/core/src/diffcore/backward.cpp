#include "hill/diffcore/backward.hpp"

#include <algorithm>

#include "hill/error.hpp"

namespace hill::ad {

template <class T>
Gradients<T> backward(const Tensor<T>& loss) {
    if (!loss || loss.size() != 1) {
        throw Error(ErrorCode::non_scalar_loss,
                    loss ? "loss has shape " + to_string(loss.shape()) : std::string("empty loss"));
    }
    Gradients<T> result;
    if (!loss.requires_grad()) return result;

    // Collect every node that participates in the gradient flow.
    std::vector<Node<T>*> order;
    std::vector<Node<T>*> stack{loss.node()};
    std::unordered_map<const Node<T>*, bool> seen{{loss.node(), true}};
    while (!stack.empty()) {
        Node<T>* n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& p : n->parents) {
            if (!p->requires_grad || seen.count(p.get())) continue;
            seen.emplace(p.get(), true);
            stack.push_back(p.get());
        }
    }
    // Children always carry larger sequence numbers than their parents.
    std::sort(order.begin(), order.end(), [](const Node<T>* a, const Node<T>* b) { return a->seq > b->seq; });

    for (Node<T>* n : order) n->grad.assign(n->data.size(), T{0});
    loss.node()->grad[0] = T{1};
    for (Node<T>* n : order) {
        if (n->backward_fn) n->backward_fn(*n);
    }
    for (Node<T>* n : order) {
        if (n->kind == NodeKind::parameter) result.set(n, n->grad);
    }
    return result;
}

template Gradients<float> backward(const Tensor<float>&);
template Gradients<double> backward(const Tensor<double>&);

}  // namespace hill::ad
