#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace multifuser {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl;

// Dense row-major float64 array that records the operation producing it so
// gradients can be pulled back with backward(). Handles are cheap to copy and
// share the same storage.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const;
    std::size_t dim() const { return shape().size(); }
    std::size_t extent(std::size_t axis) const;
    std::size_t numel() const;

    std::span<const double> data() const;
    // Writable storage. Only meaningful for leaves (parameters, inputs);
    // results already consumed by a recorded graph must not be mutated.
    std::span<double> mutable_data();
    double item() const;
    double at(std::initializer_list<std::size_t> index) const;

    bool requires_grad() const;
    Tensor& set_requires_grad(bool flag);
    bool is_leaf() const;

    bool has_grad() const;
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad();

    // Reverse-mode sweep from this scalar. Leaf gradients accumulate across
    // calls; intermediate gradients are recomputed each call.
    void backward() const;

    // Same storage, no graph, no grad flag.
    Tensor detach() const;
    Tensor clone() const;

    TensorImpl* impl() const { return impl_.get(); }

  private:
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<TensorImpl> impl_;

    friend Tensor make_result(Shape, std::vector<double>, std::vector<Tensor>,
                              std::function<void(const TensorImpl&)>);
};

struct GraphNode {
    std::vector<Tensor> inputs;
    // Reads the output's grad and accumulates into the inputs' grads.
    std::function<void(const TensorImpl&)> backward;
};

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
    std::unique_ptr<GraphNode> node;
};

// Builds an op result. The node is recorded only when grad mode is on and at
// least one input requires grad.
Tensor make_result(Shape shape, std::vector<double> data, std::vector<Tensor> inputs,
                   std::function<void(const TensorImpl&)> backward);

// Grad buffer of `t` (allocated on first use), or an empty span when `t`
// does not take gradients.
std::span<double> grad_sink(const Tensor& t);

bool grad_enabled();

class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool previous_;
};

}  // namespace multifuser
