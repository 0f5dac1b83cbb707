#pragma once

#include <functional>
#include <unordered_set>
#include <vector>

#include "ggmixer/tensor.hpp"

namespace ggmixer {

// Define-by-run operation record. Each forward pass builds a fresh tape;
// replaying it in reverse order implements backpropagation. Inputs of a
// node are always recorded before the node itself, so one reverse sweep
// visits every operation exactly once.
class Tape {
 public:
  void record(std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse, accumulating
  // gradients into every requires-grad tensor reachable from `loss`.
  void backward(const Tensor& loss);

  bool contains(const Tensor& t) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
  std::unordered_set<const TensorData*> outputs_;
};

}  // namespace ggmixer
