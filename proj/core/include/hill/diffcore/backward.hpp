#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "hill/diffcore/tensor.hpp"

namespace hill::ad {

// Parameter gradients produced by one backward pass.
template <class T>
class Gradients {
public:
    // nullptr when the parameter was not reachable from the loss.
    const std::vector<T>* find(const Tensor<T>& param) const {
        auto it = grads_.find(param.node());
        return it == grads_.end() ? nullptr : &it->second;
    }

    // Copy of the gradient; zeros for unreachable parameters.
    std::vector<T> of(const Tensor<T>& param) const {
        if (const auto* g = find(param)) return *g;
        return std::vector<T>(param.size(), T{0});
    }

    std::size_t size() const noexcept { return grads_.size(); }

    void set(const Node<T>* node, std::vector<T> grad) { grads_[node] = std::move(grad); }

private:
    std::unordered_map<const Node<T>*, std::vector<T>> grads_;
};

// Reverse-mode sweep from a scalar loss in reverse creation order. Grad
// buffers of every reachable node are reset first, so repeated calls on
// fresh graphs never accumulate stale values.
template <class T>
Gradients<T> backward(const Tensor<T>& loss);

}  // namespace hill::ad
