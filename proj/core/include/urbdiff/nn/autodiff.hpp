#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>

#include "urbdiff/nn/tensor.hpp"

namespace urbdiff::nn {

// Reverse-mode node. Ops build a DAG of these; backward() walks it once in
// reverse topological order. Weight sharing falls out naturally: using the
// same parameter node twice accumulates both contributions into its grad.
template <class T>
struct NodeT {
    TensorT<T> value;
    TensorT<T> grad;  // allocated on demand, same shape as value
    bool requires_grad = false;
    std::string name;
    std::vector<std::shared_ptr<NodeT>> parents;
    std::function<void(NodeT&)> backward_fn;
    double scalar = 0.0;  // double-precision copy for rank-1 scalar results

    void ensure_grad() {
        if (grad.data.empty()) grad = TensorT<T>(value.shape);
    }
    void zero_grad() {
        std::fill(grad.data.begin(), grad.data.end(), T(0));
    }
};

template <class T>
using VarT = std::shared_ptr<NodeT<T>>;

using Var = VarT<float>;

template <class T>
VarT<T> make_var(TensorT<T> value, bool requires_grad = false, std::string name = {}) {
    auto n = std::make_shared<NodeT<T>>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    n->name = std::move(name);
    if (requires_grad) n->ensure_grad();
    return n;
}

template <class T>
bool any_requires_grad(const std::vector<VarT<T>>& parents) {
    for (const auto& p : parents)
        if (p->requires_grad) return true;
    return false;
}

// Seeds d(root)/d(root) = 1 and propagates. Reverse DFS postorder gives a
// valid topological order, so every node sees its full upstream gradient
// before its backward_fn runs.
template <class T>
void backward(const VarT<T>& root) {
    root->ensure_grad();
    std::fill(root->grad.data.begin(), root->grad.data.end(), T(1));

    std::vector<NodeT<T>*> postorder;
    std::unordered_set<NodeT<T>*> visited;
    struct Frame {
        NodeT<T>* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack{{root.get(), 0}};
    visited.insert(root.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            NodeT<T>* p = f.node->parents[f.next_parent++].get();
            if (visited.insert(p).second) stack.push_back({p, 0});
        } else {
            postorder.push_back(f.node);
            stack.pop_back();
        }
    }
    for (auto it = postorder.rbegin(); it != postorder.rend(); ++it) {
        NodeT<T>* n = *it;
        if (n->requires_grad && n->backward_fn) n->backward_fn(*n);
    }
}

}  // namespace urbdiff::nn
