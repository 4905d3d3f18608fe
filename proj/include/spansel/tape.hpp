#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace spansel::ad {

// Handle to a node recorded on a Tape.
struct Var {
  std::uint32_t id = 0;
};

// One term of a dot product against the model's flat weight vector.
struct ParamRef {
  std::uint32_t index = 0;
  double coefficient = 0.0;
};

// Scalar reverse-mode tape. Nodes are evaluated eagerly when recorded and
// stored in topological order, so the reverse pass is a single backward sweep.
class Tape {
 public:
  enum class Op : std::uint8_t {
    Constant,
    Variable,
    Dot,
    Add,
    Sub,
    Mul,
    Scale,
    Sum,
    LogSumExp,
    Max,
    Exp,
    Log,
    Log1p,
    Sigmoid,
    Softplus,
  };

  Var constant(double value);
  // An independent input whose adjoint is read back after backward().
  Var variable(double value);
  // Σ coefficient * weights[index]; gradients flow to the referenced weights.
  Var dot(std::span<const ParamRef> terms, std::span<const double> weights);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var neg(Var a) { return scale(a, -1.0); }
  Var sum(std::span<const Var> xs);
  Var log_sum_exp(std::span<const Var> xs);
  Var max(std::span<const Var> xs);
  Var exp(Var a);
  Var log(Var a);
  Var log1p(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);

  double value(Var v) const { return nodes_[v.id].value; }
  std::size_t size() const { return nodes_.size(); }
  Op op(Var v) const { return nodes_[v.id].op; }

  // Adjoint of every node with respect to `output` (whose adjoint is 1).
  std::vector<double> backward(Var output) const;

  // Adds d(output)/d(weight) into `gradient` for every Dot node, given the
  // adjoints returned by backward().
  void accumulate_parameter_gradient(std::span<const double> adjoints, std::span<double> gradient) const;

  // Sorted, de-duplicated weight indices referenced by Dot nodes.
  std::vector<std::uint32_t> parameter_indices() const;

  void clear();

 private:
  struct Node {
    Op op;
    std::uint32_t begin = 0;  // into args_ (or params_ for Dot)
    std::uint32_t count = 0;
    double value = 0.0;
    double aux = 0.0;  // Scale factor
  };

  Var push(Op op, double value, std::span<const Var> args, double aux = 0.0);

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> args_;
  std::vector<ParamRef> params_;
};

}  // namespace spansel::ad
