#include "denc/tape.hpp"

namespace denc {

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kMatmulNT: return "matmul_nt";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kRelu: return "relu";
    case OpKind::kHinge: return "hinge";
    case OpKind::kRowSoftmax: return "row-softmax";
    case OpKind::kMeanRows: return "mean-over-rows";
    case OpKind::kConcatCols: return "concat-last-axis";
    case OpKind::kStackRows: return "stack-rows";
    case OpKind::kSliceRows: return "slice-rows";
    case OpKind::kFlattenRow: return "flatten";
    case OpKind::kMaxOverTime: return "max-over-time";
    case OpKind::kL2NormalizeRow: return "l2-normalize";
    case OpKind::kScale: return "scalar-scale";
    case OpKind::kSum: return "sum";
    case OpKind::kDot: return "dot";
    case OpKind::kRankingLoss: return "ranking-loss";
  }
  return "?";
}

double grad_check(const GradCheckBuild& build, std::vector<Tensor64> params, double step) {
  if (step <= 0.0) throw std::invalid_argument("grad_check step must be positive");

  auto evaluate = [&](bool with_grad, std::vector<Tensor64>* grads_out) -> double {
    Tape64 tape;
    tape.set_check_finite(true);
    std::vector<Value> leaves;
    leaves.reserve(params.size());
    for (auto& p : params) leaves.push_back(with_grad ? tape.param(p) : tape.constant(p));
    Value root = build(tape, leaves);
    const double out = tape.value(root)[0];
    if (with_grad) {
      tape.backward(root);
      grads_out->clear();
      for (Value v : leaves) grads_out->push_back(tape.grad(v));
    }
    return out;
  };

  std::vector<Tensor64> analytic;
  evaluate(true, &analytic);

  double max_rel = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::int64_t i = 0; i < params[p].numel(); ++i) {
      const double saved = params[p][i];
      params[p][i] = saved + step;
      const double f_plus = evaluate(false, nullptr);
      params[p][i] = saved - step;
      const double f_minus = evaluate(false, nullptr);
      params[p][i] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * step);
      const double a = analytic[p][i];
      const double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      if (rel > max_rel) max_rel = rel;
    }
  }
  return max_rel;
}

}  // namespace denc
