#include "spansel/tape.hpp"

#include <algorithm>
#include <cmath>

#include "spansel/errors.hpp"
#include "spansel/numeric.hpp"

namespace spansel::ad {

Var Tape::push(Op op, double value, std::span<const Var> args, double aux) {
  Node node{op, static_cast<std::uint32_t>(args_.size()), static_cast<std::uint32_t>(args.size()), value, aux};
  for (Var a : args) args_.push_back(a.id);
  nodes_.push_back(node);
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(double value) { return push(Op::Constant, value, {}); }

Var Tape::variable(double value) { return push(Op::Variable, value, {}); }

Var Tape::dot(std::span<const ParamRef> terms, std::span<const double> weights) {
  double value = 0.0;
  const auto begin = static_cast<std::uint32_t>(params_.size());
  for (const ParamRef& t : terms) {
    if (t.index >= weights.size()) throw RangeError("parameter index outside the weight vector");
    value += t.coefficient * weights[t.index];
    params_.push_back(t);
  }
  nodes_.push_back(Node{Op::Dot, begin, static_cast<std::uint32_t>(terms.size()), value, 0.0});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::add(Var a, Var b) {
  const Var args[] = {a, b};
  return push(Op::Add, value(a) + value(b), args);
}

Var Tape::sub(Var a, Var b) {
  const Var args[] = {a, b};
  return push(Op::Sub, value(a) - value(b), args);
}

Var Tape::mul(Var a, Var b) {
  const Var args[] = {a, b};
  return push(Op::Mul, value(a) * value(b), args);
}

Var Tape::scale(Var a, double factor) {
  const Var args[] = {a};
  return push(Op::Scale, factor * value(a), args, factor);
}

Var Tape::sum(std::span<const Var> xs) {
  double total = 0.0;
  for (Var x : xs) total += value(x);
  return push(Op::Sum, total, xs);
}

Var Tape::log_sum_exp(std::span<const Var> xs) {
  double hi = kNegInf;
  for (Var x : xs) hi = std::max(hi, value(x));
  double result = hi;
  if (std::isfinite(hi)) {
    double total = 0.0;
    for (Var x : xs) total += std::exp(value(x) - hi);
    result = hi + std::log(total);
  }
  return push(Op::LogSumExp, result, xs);
}

Var Tape::max(std::span<const Var> xs) {
  if (xs.empty()) throw ContractViolation("max of an empty list");
  double hi = value(xs.front());
  for (Var x : xs) hi = std::max(hi, value(x));
  return push(Op::Max, hi, xs);
}

Var Tape::exp(Var a) {
  const Var args[] = {a};
  return push(Op::Exp, std::exp(value(a)), args);
}

Var Tape::log(Var a) {
  const Var args[] = {a};
  return push(Op::Log, std::log(value(a)), args);
}

Var Tape::log1p(Var a) {
  const Var args[] = {a};
  return push(Op::Log1p, std::log1p(value(a)), args);
}

Var Tape::sigmoid(Var a) {
  const Var args[] = {a};
  return push(Op::Sigmoid, spansel::sigmoid(value(a)), args);
}

Var Tape::softplus(Var a) {
  const Var args[] = {a};
  return push(Op::Softplus, spansel::softplus(value(a)), args);
}

std::vector<double> Tape::backward(Var output) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  adj[output.id] = 1.0;
  for (std::size_t i = output.id + 1; i-- > 0;) {
    const double g = adj[i];
    if (g == 0.0) continue;
    const Node& n = nodes_[i];
    const std::uint32_t* a = args_.data() + n.begin;
    switch (n.op) {
      case Op::Constant:
      case Op::Variable:
      case Op::Dot:
        break;
      case Op::Add:
        adj[a[0]] += g;
        adj[a[1]] += g;
        break;
      case Op::Sub:
        adj[a[0]] += g;
        adj[a[1]] -= g;
        break;
      case Op::Mul:
        adj[a[0]] += g * nodes_[a[1]].value;
        adj[a[1]] += g * nodes_[a[0]].value;
        break;
      case Op::Scale:
        adj[a[0]] += g * n.aux;
        break;
      case Op::Sum:
        for (std::uint32_t k = 0; k < n.count; ++k) adj[a[k]] += g;
        break;
      case Op::LogSumExp:
        if (n.value == kNegInf) break;
        for (std::uint32_t k = 0; k < n.count; ++k) {
          const double x = nodes_[a[k]].value;
          if (x != kNegInf) adj[a[k]] += g * std::exp(x - n.value);
        }
        break;
      case Op::Max:
        for (std::uint32_t k = 0; k < n.count; ++k) {
          if (nodes_[a[k]].value == n.value) {
            adj[a[k]] += g;
            break;
          }
        }
        break;
      case Op::Exp:
        adj[a[0]] += g * n.value;
        break;
      case Op::Log:
        adj[a[0]] += g / nodes_[a[0]].value;
        break;
      case Op::Log1p:
        adj[a[0]] += g / (1.0 + nodes_[a[0]].value);
        break;
      case Op::Sigmoid:
        adj[a[0]] += g * n.value * (1.0 - n.value);
        break;
      case Op::Softplus:
        adj[a[0]] += g * spansel::sigmoid(nodes_[a[0]].value);
        break;
    }
  }
  return adj;
}

void Tape::accumulate_parameter_gradient(std::span<const double> adjoints, std::span<double> gradient) const {
  for (std::size_t i = 0; i < nodes_.size() && i < adjoints.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.op != Op::Dot || adjoints[i] == 0.0) continue;
    for (std::uint32_t k = 0; k < n.count; ++k) {
      const ParamRef& p = params_[n.begin + k];
      gradient[p.index] += adjoints[i] * p.coefficient;
    }
  }
}

std::vector<std::uint32_t> Tape::parameter_indices() const {
  std::vector<std::uint32_t> out;
  out.reserve(params_.size());
  for (const ParamRef& p : params_) out.push_back(p.index);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void Tape::clear() {
  nodes_.clear();
  args_.clear();
  params_.clear();
}

}  // namespace spansel::ad
