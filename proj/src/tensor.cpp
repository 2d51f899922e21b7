#include "monoattn/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace monoattn {

namespace {
thread_local GraphTape* t_current_tape = nullptr;
thread_local std::uint64_t t_next_serial = 1;

std::size_t checked_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("tensor dimension must be positive, got " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}
}  // namespace

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  Tensor t;
  t.s_ = std::make_shared<TensorStorage>();
  const std::size_t n = checked_numel(shape);
  t.s_->shape = std::move(shape);
  t.s_->data.assign(n, 0.0);
  t.s_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
  const std::size_t n = checked_numel(shape);
  if (n != data.size())
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  Tensor t;
  t.s_ = std::make_shared<TensorStorage>();
  t.s_->shape = std::move(shape);
  t.s_->data = std::move(data);
  t.s_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

void Tensor::ensure_grad() const {
  if (s_->grad.empty()) s_->grad.assign(s_->data.size(), 0.0);
}

void Tensor::zero_grad() const {
  s_->grad.assign(s_->data.size(), 0.0);
}

double Tensor::value() const {
  if (numel() != 1)
    throw ShapeError("value() needs a scalar tensor, got shape " + shape_str(shape()));
  return s_->data[0];
}

GraphTape::GraphTape() {
  previous_ = t_current_tape;
  serial_ = t_next_serial++;
  t_current_tape = this;
}

GraphTape::~GraphTape() { t_current_tape = previous_; }

GraphTape* GraphTape::current() { return t_current_tape; }

std::int64_t GraphTape::node_id(const Tensor& t) {
  TensorStorage* s = t.storage();
  if (s->tape_serial != serial_) {
    s->tape_serial = serial_;
    s->node_id = next_node_id_++;
  }
  return s->node_id;
}

void GraphTape::record(const char* op, const Tensor& out, std::function<void()> backward_fn) {
  records_.push_back({op, out, std::move(backward_fn)});
}

void GraphTape::backward(const Tensor& loss) {
  if (loss.numel() != 1)
    throw ShapeError("backward needs a scalar loss, got shape " + shape_str(loss.shape()));
  // Clear op-output gradients so this pass starts fresh; tensors the tape
  // never produced (the leaves) keep their accumulated gradients.
  for (Record& r : records_) {
    std::vector<double>& g = r.out.storage()->grad;
    std::fill(g.begin(), g.end(), 0.0);
  }
  loss.storage()->grad.resize(1, 0.0);
  loss.storage()->grad[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    it->backward_fn();
  }
}

}  // namespace monoattn
