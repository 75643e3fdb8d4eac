#include "afgm/graph.hpp"

#include <string>

#include "afgm/errors.hpp"

namespace afgm {

Var Graph::push(std::string_view op, Tensor value, bool requires_grad, bool is_parameter) {
    if (!all_finite(value)) {
        throw NumericFault("non-finite value produced by '" + std::string(op) + "' (shape " +
                           to_string(value.shape()) + ")");
    }
    Node node;
    node.op = op;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.is_parameter = is_parameter;
    nodes_.push_back(std::move(node));
    return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::constant(Tensor value) { return push("constant", std::move(value), false, false); }

Var Graph::parameter(Tensor value) {
    const bool train = mode_ == Mode::training;
    return push("parameter", std::move(value), train, train);
}

bool Graph::any_requires_grad(const Var* first, const Var* last) const {
    if (mode_ != Mode::training) {
        return false;
    }
    for (; first != last; ++first) {
        if (nodes_[first->id].requires_grad) {
            return true;
        }
    }
    return false;
}

Tensor* Graph::adjoint(std::uint32_t id) {
    Node& n = nodes_[id];
    if (!n.requires_grad) {
        return nullptr;
    }
    if (!n.has_grad) {
        n.grad = Tensor(n.value.shape());
        n.has_grad = true;
    }
    return &n.grad;
}

const Tensor& Graph::grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (!n.has_grad) {
        throw ContractError("node " + std::to_string(v.id) + " ('" + std::string(n.op) + "') has no adjoint");
    }
    return n.grad;
}

void Graph::backward(Var loss) {
    if (mode_ != Mode::training) {
        throw ContractError("backward() on an inference-mode graph");
    }
    const Node& root = nodes_[loss.id];
    if (root.value.size() != 1) {
        throw ContractError("backward() needs a scalar loss, got shape " + to_string(root.value.shape()));
    }
    for (auto& n : nodes_) {
        if (n.has_grad) {
            n.grad.fill(0.0);
        }
    }
    if (Tensor* g = adjoint(loss.id)) {
        g->fill(1.0);
    }
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.has_grad || !n.backward) {
            continue;
        }
        // Closures only touch adjoints of earlier nodes and never grow nodes_.
        n.backward(*this, n.grad);
    }
    for (auto& n : nodes_) {
        if (n.is_parameter && !n.has_grad) {
            n.grad = Tensor(n.value.shape());
            n.has_grad = true;
        }
        if (n.has_grad && !all_finite(n.grad)) {
            throw NumericFault("non-finite adjoint at '" + std::string(n.op) + "'");
        }
    }
}

}  // namespace afgm
