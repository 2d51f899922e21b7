#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "monoattn/error.hpp"

namespace monoattn {

// Shared storage behind a Tensor value. Copying a Tensor aliases the same
// storage, so parameters referenced from several graph records accumulate
// gradient into one buffer.
struct TensorStorage {
  std::vector<int> shape;
  std::vector<double> data;   // row-major
  std::vector<double> grad;   // empty until ensure_grad(); same size as data after
  bool requires_grad = false;
  std::int64_t node_id = -1;        // identity within one tape recording
  std::uint64_t tape_serial = 0;    // which recording session node_id belongs to
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return s_ != nullptr; }
  const std::vector<int>& shape() const { return s_->shape; }
  int ndim() const { return static_cast<int>(s_->shape.size()); }
  int dim(int i) const { return s_->shape[static_cast<std::size_t>(i)]; }
  std::size_t numel() const { return s_->data.size(); }

  // A Tensor is a handle onto shared storage; const applies to the handle,
  // not the buffers, so ops can accumulate gradient through captured copies.
  std::vector<double>& data() const { return s_->data; }
  std::vector<double>& grad() const { return s_->grad; }
  bool has_grad() const { return !s_->grad.empty(); }

  bool requires_grad() const { return s_->requires_grad; }
  void set_requires_grad(bool v) const { s_->requires_grad = v; }

  // Allocates a zeroed gradient buffer if absent.
  void ensure_grad() const;
  void zero_grad() const;

  // Scalar convenience; the tensor must hold exactly one element.
  double value() const;

  TensorStorage* storage() const { return s_.get(); }

 private:
  std::shared_ptr<TensorStorage> s_;
};

// Recorded forward pass. Constructing a GraphTape makes it the current tape
// for this thread; ops append records while one is active, and backward()
// replays the records once, in reverse order of recording.
//
// Tapes and the tensors recorded on them are confined to one thread.
class GraphTape {
 public:
  GraphTape();
  ~GraphTape();
  GraphTape(const GraphTape&) = delete;
  GraphTape& operator=(const GraphTape&) = delete;

  static GraphTape* current();

  // Registers a node id for `t` on this tape (fresh per recording session).
  std::int64_t node_id(const Tensor& t);

  void record(const char* op, const Tensor& out, std::function<void()> backward_fn);

  // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. The loss must
  // be scalar. Each call is one complete pass: the recorded ops' output
  // gradients are cleared first, so leaf gradients accumulate one pass's
  // contribution per call.
  void backward(const Tensor& loss);

  std::size_t size() const { return records_.size(); }
  std::uint64_t serial() const { return serial_; }

 private:
  struct Record {
    const char* op;
    Tensor out;
    std::function<void()> backward_fn;
  };
  std::vector<Record> records_;
  std::int64_t next_node_id_ = 0;
  std::uint64_t serial_ = 0;
  GraphTape* previous_ = nullptr;
};

std::string shape_str(const std::vector<int>& shape);

}  // namespace monoattn
