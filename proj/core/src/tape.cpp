#include "ggmixer/tape.hpp"

namespace ggmixer {

void Tape::record(std::vector<Tensor> inputs, Tensor output,
                  std::function<void()> backward) {
  outputs_.insert(output.id());
  nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward)});
}

bool Tape::contains(const Tensor& t) const {
  return outputs_.count(t.id()) != 0;
}

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ShapeError("backward requires a scalar loss, got " + shape_str(loss.shape()));
  }
  if (!contains(loss)) {
    throw UsageError("backward: loss tensor was not produced on this tape");
  }
  loss.grad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    // Outputs never touched by the sweep so far cannot influence the loss.
    if (!it->output.has_grad()) continue;
    it->backward();
  }
}

}  // namespace ggmixer
