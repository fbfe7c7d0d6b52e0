#include "multifuser/tensor.h"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "multifuser/errors.h"

namespace multifuser {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return from_data(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    for (std::size_t e : shape) {
        if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
    }
    if (shape_numel(shape) != data.size()) {
        throw DimensionError("shape " + shape_str(shape) + " does not match " + std::to_string(data.size()) +
                             " values");
    }
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from_data({}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= dim()) throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
    return impl_->shape[axis];
}

std::size_t Tensor::numel() const { return impl_->data.size(); }

std::span<const double> Tensor::data() const { return impl_->data; }
std::span<double> Tensor::mutable_data() { return impl_->data; }

double Tensor::item() const {
    if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
    return impl_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    if (index.size() != dim()) throw DimensionError("index rank mismatch for " + shape_str(shape()));
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
        if (i >= impl_->shape[axis]) throw DimensionError("index out of range for " + shape_str(shape()));
        flat = flat * impl_->shape[axis] + i;
        ++axis;
    }
    return impl_->data[flat];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
    impl_->requires_grad = flag;
    return *this;
}

bool Tensor::is_leaf() const { return impl_->node == nullptr; }

bool Tensor::has_grad() const { return !impl_->grad.empty(); }
std::span<const double> Tensor::grad() const { return impl_->grad; }

std::span<double> Tensor::mutable_grad() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
    return impl_->grad;
}

void Tensor::zero_grad() { impl_->grad.clear(); }

Tensor Tensor::detach() const {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = impl_->shape;
    impl->data = impl_->data;
    return Tensor(std::move(impl));
}

Tensor Tensor::clone() const {
    Tensor out = detach();
    out.impl_->requires_grad = impl_->requires_grad;
    return out;
}

void Tensor::backward() const {
    if (!defined() || numel() != 1 || dim() != 0) {
        throw ContractError("backward() requires a scalar loss, got " +
                            (defined() ? shape_str(shape()) : std::string("undefined tensor")));
    }
    if (!impl_->requires_grad) throw ContractError("backward() on a tensor that does not require grad");

    // Iterative post-order DFS gives a topological order with each node once.
    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> visited;
    std::vector<std::pair<TensorImpl*, std::size_t>> stack{{impl_.get(), 0}};
    visited.insert(impl_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (node->node && next < node->node->inputs.size()) {
            TensorImpl* child = node->node->inputs[next++].impl();
            if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
            continue;
        }
        order.push_back(node);
        stack.pop_back();
    }

    for (TensorImpl* t : order) {
        if (t->node) t->grad.assign(t->data.size(), 0.0);
    }
    impl_->grad.resize(1, 0.0);
    impl_->grad[0] += 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorImpl* t = *it;
        if (t->node && t->node->backward) t->node->backward(*t);
    }
}

Tensor make_result(Shape shape, std::vector<double> data, std::vector<Tensor> inputs,
                   std::function<void(const TensorImpl&)> backward) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    if (g_grad_enabled && backward) {
        const bool any = std::any_of(inputs.begin(), inputs.end(),
                                     [](const Tensor& t) { return t.defined() && t.requires_grad(); });
        if (any) {
            impl->requires_grad = true;
            impl->node = std::make_unique<GraphNode>(GraphNode{std::move(inputs), std::move(backward)});
        }
    }
    return Tensor(std::move(impl));
}

std::span<double> grad_sink(const Tensor& t) {
    TensorImpl* impl = t.impl();
    if (!impl || !impl->requires_grad) return {};
    if (impl->grad.empty()) impl->grad.assign(impl->data.size(), 0.0);
    return impl->grad;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

}  // namespace multifuser
