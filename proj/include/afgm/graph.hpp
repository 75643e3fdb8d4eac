#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string_view>
#include <utility>
#include <vector>

#include "afgm/tensor.hpp"

namespace afgm {

class Graph;

/// Handle to a node recorded on a Graph.
struct Var {
    Graph* graph = nullptr;
    std::uint32_t id = 0;

    [[nodiscard]] bool valid() const noexcept { return graph != nullptr; }
    [[nodiscard]] const Tensor& value() const;
    [[nodiscard]] const Shape& shape() const { return value().shape(); }
};

/// Reverse-mode tape. Nodes are appended in evaluation order; backward()
/// visits them in exactly the reverse of that order.
///
/// A graph built with `Graph::Mode::inference` records values only, so it can be
/// used for cheap forward passes (evaluation, benchmarks).
class Graph {
public:
    enum class Mode { training, inference };

    /// Receives the adjoint of the node's output and accumulates into its inputs.
    using BackwardFn = std::function<void(Graph&, const Tensor& out_grad)>;

    explicit Graph(Mode mode = Mode::training) : mode_(mode) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    [[nodiscard]] Mode mode() const noexcept { return mode_; }

    Var constant(Tensor value);
    Var parameter(Tensor value);

    [[nodiscard]] const Tensor& value(Var v) const { return nodes_[v.id].value; }
    [[nodiscard]] bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    [[nodiscard]] std::string_view op_name(Var v) const { return nodes_[v.id].op; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

    /// Adjoint of a node after backward(). Parameters always have one.
    [[nodiscard]] const Tensor& grad(Var v) const;

    /// Runs reverse accumulation from a scalar node.
    void backward(Var loss);

    /// Appends an op result. `backward` is dropped (never even wrapped in a
    /// std::function) when no input needs a gradient.
    /// Throws NumericFault naming `op` if `value` contains NaN/Inf.
    template <class F>
    Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, F&& backward) {
        return record_range(op, std::move(value), inputs.begin(), inputs.end(), std::forward<F>(backward));
    }
    template <class F>
    Var record(std::string_view op, Tensor value, const std::vector<Var>& inputs, F&& backward) {
        return record_range(op, std::move(value), inputs.data(), inputs.data() + inputs.size(),
                            std::forward<F>(backward));
    }

    /// Gradient accumulator for an input node, or nullptr if it needs none.
    /// Allocated (zero) on first use.
    Tensor* adjoint(std::uint32_t id);

private:
    struct Node {
        std::string_view op;
        Tensor value;
        Tensor grad;
        bool has_grad = false;
        bool requires_grad = false;
        bool is_parameter = false;
        BackwardFn backward;
    };

    Var push(std::string_view op, Tensor value, bool requires_grad, bool is_parameter);
    [[nodiscard]] bool any_requires_grad(const Var* first, const Var* last) const;

    template <class F>
    Var record_range(std::string_view op, Tensor value, const Var* first, const Var* last, F&& backward) {
        const bool needs = any_requires_grad(first, last);
        Var out = push(op, std::move(value), needs, false);
        if (needs) {
            nodes_[out.id].backward = BackwardFn(std::forward<F>(backward));
        }
        return out;
    }

    Mode mode_;
    std::deque<Node> nodes_;  // deque: values stay addressable while the tape grows
};

inline const Tensor& Var::value() const { return graph->value(*this); }

}  // namespace afgm
