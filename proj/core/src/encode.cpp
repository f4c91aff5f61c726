#include "pihqcd/encode.hpp"

#include <algorithm>
#include <cmath>

namespace pihqcd {

const char* encoded_kind_name(EncodedKind k) {
  switch (k) {
    case EncodedKind::Gen: return "gen";
    case EncodedKind::Charge: return "charge";
    case EncodedKind::Discharge: return "discharge";
    case EncodedKind::Demand: return "demand";
    case EncodedKind::Curtail: return "curtail";
    case EncodedKind::Slack: return "slack";
  }
  return "?";
}

namespace {

EncodedKind to_encoded(VarKind k) {
  switch (k) {
    case VarKind::Gen: return EncodedKind::Gen;
    case VarKind::Charge: return EncodedKind::Charge;
    case VarKind::Discharge: return EncodedKind::Discharge;
    case VarKind::Demand: return EncodedKind::Demand;
    case VarKind::Curtail: return EncodedKind::Curtail;
  }
  return EncodedKind::Gen;
}

}  // namespace

Encoding::Encoding(const GridCase& c, int bits_per_variable)
    : bits_(bits_per_variable), layout_(c) {
  if (bits_ < 1) throw ComputeError("bits per variable must be >= 1");
  vars_.reserve(layout_.size());
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const auto& lv = layout_.vars()[i];
    EncodedVar v;
    v.kind = to_encoded(lv.kind);
    v.device = lv.device;
    v.bus = lv.bus;
    v.t = lv.t;
    v.lo = lv.lo;
    v.hi = lv.hi;
    v.layout_index = static_cast<int>(i);
    vars_.push_back(v);
    append_bits(static_cast<int>(vars_.size()) - 1);
    if (static_cast<int>(i) == layout_.core_count() - 1)
      core_qubits_ = num_qubits();
  }
  if (layout_.core_count() == 0) core_qubits_ = 0;
}

void Encoding::append_bits(int var_index) {
  EncodedVar& v = vars_[static_cast<std::size_t>(var_index)];
  const double range = v.hi - v.lo;
  const double levels = static_cast<double>((1u << bits_) - 1);
  if (range <= 0.0) {
    // Degenerate box: the variable is a constant, no qubits assigned.
    v.delta = 0.0;
    v.first_qubit = -1;
    v.num_bits = 0;
    dropped_.push_back(var_index);
    return;
  }
  v.delta = range / levels;
  v.first_qubit = num_qubits();
  v.num_bits = bits_;
  for (int k = 0; k < bits_; ++k) {
    BitVariable bv;
    bv.kind = v.kind;
    bv.device = v.device;
    bv.scenario = v.scenario;
    bv.t = v.t;
    bv.bit = k;
    bv.delta = v.delta;
    bv.offset = v.lo;
    bv.var_index = var_index;
    bit_vars_.push_back(bv);
  }
}

double Encoding::value_of(int var, std::uint64_t bits) const {
  const auto& v = vars_[static_cast<std::size_t>(var)];
  if (v.num_bits == 0) return v.lo;
  std::uint64_t level = (bits >> v.first_qubit) & ((1ull << v.num_bits) - 1);
  return v.lo + v.delta * static_cast<double>(level);
}

DispatchVector Encoding::decode(std::uint64_t bits) const {
  DispatchVector x(layout_.size());
  for (std::size_t i = 0; i < layout_.size(); ++i)
    x[i] = value_of(static_cast<int>(i), bits);
  return x;
}

std::uint64_t Encoding::encode_nearest(const DispatchVector& x) const {
  if (x.size() != layout_.size())
    throw ComputeError("encode_nearest: dispatch vector length mismatch");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const auto& v = vars_[i];
    if (v.num_bits == 0) continue;
    const double clipped = std::clamp(x[i], v.lo, v.hi);
    const auto max_level = static_cast<std::int64_t>((1u << v.num_bits) - 1);
    auto level = static_cast<std::int64_t>(std::llround((clipped - v.lo) / v.delta));
    level = std::clamp<std::int64_t>(level, 0, max_level);
    bits |= static_cast<std::uint64_t>(level) << v.first_qubit;
  }
  return bits;
}

int Encoding::append_slack(double range, int scenario, int bus, int t,
                           const std::string& tag) {
  EncodedVar v;
  v.kind = EncodedKind::Slack;
  v.device = -1;
  v.scenario = scenario;
  v.bus = bus;
  v.t = t;
  v.lo = 0.0;
  v.hi = std::max(0.0, range);
  v.tag = tag;
  vars_.push_back(v);
  const int idx = static_cast<int>(vars_.size()) - 1;
  append_bits(idx);
  return idx;
}

Encoding build_encoding(const GridCase& c, int bits_per_variable) {
  return Encoding(c, bits_per_variable);
}

void QuboProblem::add_linear(int q, double c) {
  if (c == 0.0) return;
  linear_[static_cast<std::size_t>(q)] += c;
}

void QuboProblem::add_quadratic(int i, int j, double c) {
  if (c == 0.0) return;
  if (i == j) {
    // q^2 = q for binary variables.
    linear_[static_cast<std::size_t>(i)] += c;
    return;
  }
  if (i > j) std::swap(i, j);
  const std::uint64_t key =
      (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
  quad_[key] += c;
}

std::pair<double, double> QuboProblem::expr_range(const AffineExpr& expr) const {
  double lo = expr.constant;
  double hi = expr.constant;
  for (const auto& [var, coef] : expr.terms) {
    const auto& v = encoding_.variables()[static_cast<std::size_t>(var)];
    const double a = coef * v.lo;
    const double b = coef * v.hi;
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  return {lo, hi};
}

void QuboProblem::add_affine_linear(int var, double coef) {
  if (coef == 0.0) return;
  const auto& v = encoding_.variables()[static_cast<std::size_t>(var)];
  constant_ += coef * v.lo;
  for (int k = 0; k < v.num_bits; ++k)
    add_linear(v.first_qubit + k, coef * v.delta * static_cast<double>(1u << k));
}

void QuboProblem::add_affine_square(const AffineExpr& expr, double weight) {
  if (weight == 0.0) return;
  // Expand expr = base + sum_q c_q q_q over the participating qubits.
  double base = expr.constant;
  std::vector<std::pair<int, double>> qcoef;
  for (const auto& [var, coef] : expr.terms) {
    if (coef == 0.0) continue;
    const auto& v = encoding_.variables()[static_cast<std::size_t>(var)];
    base += coef * v.lo;
    for (int k = 0; k < v.num_bits; ++k)
      qcoef.emplace_back(v.first_qubit + k,
                         coef * v.delta * static_cast<double>(1u << k));
  }
  constant_ += weight * base * base;
  for (std::size_t a = 0; a < qcoef.size(); ++a) {
    const auto [qa, ca] = qcoef[a];
    add_linear(qa, weight * (2.0 * base * ca + ca * ca));
    for (std::size_t b = a + 1; b < qcoef.size(); ++b) {
      const auto [qb, cb] = qcoef[b];
      add_quadratic(qa, qb, weight * 2.0 * ca * cb);
    }
  }
}

std::optional<int> QuboProblem::add_one_sided_square(const AffineExpr& expr,
                                                     double weight, int scenario,
                                                     int bus, int t,
                                                     const std::string& tag) {
  if (weight == 0.0) return std::nullopt;
  const auto [lo, hi] = expr_range(expr);
  if (hi <= 0.0) return std::nullopt;  // constraint can never be violated
  const double slack_range = std::max(0.0, -lo);
  const int slack_var = encoding_.append_slack(slack_range, scenario, bus, t, tag);
  linear_.resize(static_cast<std::size_t>(encoding_.num_qubits()), 0.0);
  AffineExpr with_slack = expr;
  with_slack.terms.emplace_back(slack_var, 1.0);
  add_affine_square(with_slack, weight);
  return slack_var;
}

double QuboProblem::energy(std::uint64_t bits) const {
  double e = constant_;
  for (std::size_t q = 0; q < linear_.size(); ++q)
    if ((bits >> q) & 1ull) e += linear_[q];
  for (const auto& [key, c] : quad_) {
    const auto i = static_cast<int>(key >> 32);
    const auto j = static_cast<int>(key & 0xffffffffull);
    if (((bits >> i) & 1ull) && ((bits >> j) & 1ull)) e += c;
  }
  return e;
}

}  // namespace pihqcd
