// Copyright 2026 The laneloss Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "laneloss/autodiff.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace laneloss::ad
{

// ---------------------------------------------------------------- Shape ---

Shape::Shape(std::initializer_list<std::size_t> dims)
{
  if (dims.size() > 3) {
    throw std::invalid_argument("Shape: rank > 3 is not supported");
  }
  rank_ = dims.size();
  std::copy(dims.begin(), dims.end(), dims_.begin());
}

std::size_t Shape::numel() const
{
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
  return n;
}

std::string Shape::to_string() const
{
  std::string s = "[";
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) s += ", ";
    s += std::to_string(dims_[i]);
  }
  return s + "]";
}

bool operator==(const Shape & a, const Shape & b)
{
  if (a.rank_ != b.rank_) return false;
  for (std::size_t i = 0; i < a.rank_; ++i) {
    if (a.dims_[i] != b.dims_[i]) return false;
  }
  return true;
}

namespace
{

Shape shape_from(const std::vector<std::size_t> & dims)
{
  switch (dims.size()) {
    case 0: return Shape{};
    case 1: return Shape{dims[0]};
    case 2: return Shape{dims[0], dims[1]};
    case 3: return Shape{dims[0], dims[1], dims[2]};
    default: throw std::invalid_argument("Shape: rank > 3 is not supported");
  }
}

std::vector<std::size_t> dims_of(const Shape & s)
{
  std::vector<std::size_t> d(s.rank());
  for (std::size_t i = 0; i < s.rank(); ++i) d[i] = s[i];
  return d;
}

[[noreturn]] void shape_error(const char * op, const Shape & a, const Shape & b)
{
  throw std::invalid_argument(
    std::string(op) + ": incompatible shapes " + a.to_string() + " and " + b.to_string());
}

// outer x axis x inner decomposition used by concat/slice/reduce.
struct AxisSplit
{
  std::size_t outer = 1;
  std::size_t axis = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape & s, std::size_t axis)
{
  if (axis >= s.rank()) {
    throw std::invalid_argument("axis " + std::to_string(axis) + " out of range for shape " + s.to_string());
  }
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.axis = s[axis];
  for (std::size_t i = axis + 1; i < s.rank(); ++i) r.inner *= s[i];
  return r;
}

}  // namespace

// --------------------------------------------------------------- Tensor ---

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.numel(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data))
{
  if (data_.size() != shape_.numel()) {
    throw std::invalid_argument(
      "Tensor: " + std::to_string(data_.size()) + " values for shape " + shape_.to_string());
  }
}

double Tensor::item() const
{
  if (data_.size() != 1) {
    throw std::logic_error("Tensor::item on shape " + shape_.to_string());
  }
  return data_[0];
}

// ------------------------------------------------------- ParameterStore ---

ParamId ParameterStore::add(std::string name, Tensor init)
{
  params_.push_back(Parameter{std::move(name), std::move(init)});
  return params_.size() - 1;
}

std::size_t ParameterStore::total_elements() const
{
  std::size_t n = 0;
  for (const auto & p : params_) n += p.value.numel();
  return n;
}

Gradients zero_gradients(const ParameterStore & params)
{
  Gradients g;
  g.reserve(params.size());
  for (const auto & p : params.all()) g.emplace_back(p.value.shape());
  return g;
}

// ----------------------------------------------------------------- Tape ---

const Tensor & Var::value() const { return tape_->value(index_); }

Tape::Tape(const ParameterStore * params) : params_(params)
{
  if (params_) param_nodes_.assign(params_->size(), -1);
  nodes_.reserve(1024);
}

Var Tape::constant(Tensor value)
{
  nodes_.push_back(Node{std::move(value), {}, {}, {}, false});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::variable(Tensor value)
{
  nodes_.push_back(Node{std::move(value), {}, {}, {}, true});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::param(ParamId id)
{
  if (!params_ || id >= params_->size()) {
    throw std::out_of_range("Tape::param: unknown parameter id " + std::to_string(id));
  }
  if (param_nodes_[id] >= 0) return Var(this, static_cast<std::uint32_t>(param_nodes_[id]));
  Var v = variable((*params_)[id].value);
  param_nodes_[id] = v.index();
  return v;
}

Var Tape::record(Tensor value, std::vector<std::uint32_t> inputs, Backward backward)
{
  bool requires_grad = false;
  for (auto i : inputs) requires_grad = requires_grad || nodes_[i].requires_grad;
  if (!requires_grad) backward = nullptr;
  nodes_.push_back(Node{std::move(value), {}, std::move(inputs), std::move(backward), requires_grad});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tensor * Tape::grad_sink(std::uint32_t i)
{
  Node & n = nodes_[i];
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty() && n.value.numel() > 0) n.grad = Tensor(n.value.shape());
  return &n.grad;
}

void Tape::backward(Var loss)
{
  if (loss.tape() != this) {
    throw std::invalid_argument("Tape::backward: loss belongs to another tape");
  }
  if (consumed_) {
    throw std::logic_error("Tape::backward: tape already differentiated; record a new tape");
  }
  if (nodes_[loss.index()].value.numel() != 1) {
    throw std::invalid_argument(
      "Tape::backward: loss must be a single value, got shape " +
      nodes_[loss.index()].value.shape().to_string());
  }
  consumed_ = true;
  if (!nodes_[loss.index()].requires_grad) return;
  nodes_[loss.index()].grad = Tensor(nodes_[loss.index()].value.shape(), 1.0);
  for (std::int64_t i = loss.index(); i >= 0; --i) {
    Node & n = nodes_[static_cast<std::size_t>(i)];
    if (n.backward && !n.grad.empty()) n.backward(*this, static_cast<std::uint32_t>(i));
  }
}

Tensor Tape::grad(Var v) const
{
  const Node & n = nodes_[v.index()];
  return n.grad.empty() ? Tensor(n.value.shape()) : n.grad;
}

void Tape::accumulate_param_grads(Gradients & out, double scale) const
{
  for (std::size_t id = 0; id < param_nodes_.size(); ++id) {
    if (param_nodes_[id] < 0) continue;
    const Tensor & g = nodes_[static_cast<std::size_t>(param_nodes_[id])].grad;
    if (g.empty()) continue;
    auto dst = out[id].data();
    auto src = g.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += scale * src[k];
  }
}

void check_same_tape(const Var & a, const Var & b)
{
  if (!a.valid() || a.tape() != b.tape()) {
    throw std::invalid_argument("autodiff: operands belong to different tapes");
  }
}

// ---------------------------------------------------------- elementwise ---

namespace
{

enum class Bcast { kNone, kLeftScalar, kRightScalar };

Bcast broadcast_mode(const char * op, const Shape & a, const Shape & b)
{
  if (a == b) return Bcast::kNone;
  if (a.numel() == 1) return Bcast::kLeftScalar;
  if (b.numel() == 1) return Bcast::kRightScalar;
  shape_error(op, a, b);
}

// Reduce an output-shaped gradient into a scalar or same-shape sink.
void sink_into(Tensor * sink, const std::vector<double> & contrib, bool scalar_sink)
{
  if (!sink) return;
  if (scalar_sink) {
    double acc = 0.0;
    for (double c : contrib) acc += c;
    (*sink)[0] += acc;
  } else {
    for (std::size_t k = 0; k < contrib.size(); ++k) (*sink)[k] += contrib[k];
  }
}

template <typename Fwd, typename DA, typename DB>
Var binary(const char * op, const Var & a, const Var & b, Fwd fwd, DA da, DB db)
{
  check_same_tape(a, b);
  const Tensor & va = a.value();
  const Tensor & vb = b.value();
  const Bcast mode = broadcast_mode(op, va.shape(), vb.shape());
  const Shape out_shape = mode == Bcast::kLeftScalar ? vb.shape() : va.shape();
  const std::size_t n = out_shape.numel();
  const auto ai = [mode](std::size_t k) { return mode == Bcast::kLeftScalar ? 0 : k; };
  const auto bi = [mode](std::size_t k) { return mode == Bcast::kRightScalar ? 0 : k; };
  Tensor out(out_shape);
  for (std::size_t k = 0; k < n; ++k) out[k] = fwd(va[ai(k)], vb[bi(k)]);
  const std::uint32_t ia = a.index();
  const std::uint32_t ib = b.index();
  return a.tape()->record(std::move(out), {ia, ib}, [=](Tape & t, std::uint32_t self) {
    const Tensor & g = t.out_grad(self);
    const Tensor & xa = t.value(ia);
    const Tensor & xb = t.value(ib);
    std::vector<double> ca(n), cb(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double x = xa[ai(k)];
      const double y = xb[bi(k)];
      ca[k] = g[k] * da(x, y);
      cb[k] = g[k] * db(x, y);
    }
    sink_into(t.grad_sink(ia), ca, mode == Bcast::kLeftScalar);
    sink_into(t.grad_sink(ib), cb, mode == Bcast::kRightScalar);
  });
}

template <typename Fwd, typename Deriv>
Var unary(const Var & a, Fwd fwd, Deriv deriv)
{
  const Tensor & va = a.value();
  Tensor out(va.shape());
  for (std::size_t k = 0; k < va.numel(); ++k) out[k] = fwd(va[k]);
  const std::uint32_t ia = a.index();
  return a.tape()->record(std::move(out), {ia}, [=](Tape & t, std::uint32_t self) {
    Tensor * sink = t.grad_sink(ia);
    if (!sink) return;
    const Tensor & g = t.out_grad(self);
    const Tensor & x = t.value(ia);
    const Tensor & y = t.value(self);
    for (std::size_t k = 0; k < x.numel(); ++k) (*sink)[k] += g[k] * deriv(x[k], y[k]);
  });
}

}  // namespace

Var add(const Var & a, const Var & b)
{
  return binary(
    "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
    [](double, double) { return 1.0; });
}

Var sub(const Var & a, const Var & b)
{
  return binary(
    "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
    [](double, double) { return -1.0; });
}

Var mul(const Var & a, const Var & b)
{
  return binary(
    "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
    [](double x, double) { return x; });
}

Var smooth_l1(const Var & a, const Var & b, double beta)
{
  if (!(beta > 0.0)) throw std::invalid_argument("smooth_l1: beta must be positive");
  const auto f = [beta](double x, double y) {
    const double d = std::abs(x - y);
    return d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
  };
  const auto df = [beta](double x, double y) {
    const double d = x - y;
    return std::abs(d) < beta ? d / beta : (d > 0.0 ? 1.0 : -1.0);
  };
  return binary(
    "smooth_l1", a, b, f, df, [df](double x, double y) { return -df(x, y); });
}

Var scale(const Var & a, double c)
{
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var relu(const Var & a)
{
  return unary(
    a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(const Var & a)
{
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var sqrt(const Var & a)
{
  return unary(
    a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var hinge(const Var & a, double margin)
{
  return unary(
    a, [margin](double x) { return std::max(0.0, x + margin); },
    [margin](double x, double) { return x + margin > 0.0 ? 1.0 : 0.0; });
}

// --------------------------------------------------------------- linear ---

Var matmul(const Var & a, const Var & b)
{
  check_same_tape(a, b);
  const Tensor & va = a.value();
  const Tensor & vb = b.value();
  if (va.shape().rank() != 2 || vb.shape().rank() != 2 || va.shape()[1] != vb.shape()[0]) {
    shape_error("matmul", va.shape(), vb.shape());
  }
  const std::size_t n = va.shape()[0];
  const std::size_t k = va.shape()[1];
  const std::size_t m = vb.shape()[1];
  Tensor out(Shape{n, m});
  const double * pa = va.data().data();
  const double * pb = vb.data().data();
  double * po = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double * row = po + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = pa[i * k + p];
      if (s == 0.0) continue;
      const double * brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += s * brow[j];
    }
  }
  const std::uint32_t ia = a.index();
  const std::uint32_t ib = b.index();
  return a.tape()->record(std::move(out), {ia, ib}, [=](Tape & t, std::uint32_t self) {
    const double * g = t.out_grad(self).data().data();
    const double * xa = t.value(ia).data().data();
    const double * xb = t.value(ib).data().data();
    if (Tensor * sa = t.grad_sink(ia)) {
      double * da = sa->data().data();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double * brow = xb + p * m;
          const double * grow = g + i * m;
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
          da[i * k + p] += acc;
        }
      }
    }
    if (Tensor * sb = t.grad_sink(ib)) {
      double * db = sb->data().data();
      for (std::size_t i = 0; i < n; ++i) {
        const double * grow = g + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double s = xa[i * k + p];
          if (s == 0.0) continue;
          double * drow = db + p * m;
          for (std::size_t j = 0; j < m; ++j) drow[j] += s * grow[j];
        }
      }
    }
  });
}

Var transpose(const Var & a)
{
  const Tensor & va = a.value();
  if (va.shape().rank() != 2) {
    throw std::invalid_argument("transpose: expected rank 2, got " + va.shape().to_string());
  }
  const std::size_t n = va.shape()[0];
  const std::size_t m = va.shape()[1];
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[j * n + i] = va[i * m + j];
  }
  const std::uint32_t ia = a.index();
  return a.tape()->record(std::move(out), {ia}, [=](Tape & t, std::uint32_t self) {
    Tensor * sink = t.grad_sink(ia);
    if (!sink) return;
    const Tensor & g = t.out_grad(self);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) (*sink)[i * m + j] += g[j * n + i];
    }
  });
}

Var add_bias(const Var & a, const Var & bias)
{
  check_same_tape(a, bias);
  const Tensor & va = a.value();
  const Tensor & vb = bias.value();
  if (va.shape().rank() != 2 || vb.numel() != va.shape()[1]) {
    shape_error("add_bias", va.shape(), vb.shape());
  }
  const std::size_t n = va.shape()[0];
  const std::size_t m = va.shape()[1];
  Tensor out = va;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += vb[j];
  }
  const std::uint32_t ia = a.index();
  const std::uint32_t ib = bias.index();
  return a.tape()->record(std::move(out), {ia, ib}, [=](Tape & t, std::uint32_t self) {
    const Tensor & g = t.out_grad(self);
    if (Tensor * sa = t.grad_sink(ia)) {
      for (std::size_t k = 0; k < g.numel(); ++k) (*sa)[k] += g[k];
    }
    if (Tensor * sb = t.grad_sink(ib)) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) (*sb)[j] += g[i * m + j];
      }
    }
  });
}

Var softmax(const Var & a)
{
  const Tensor & va = a.value();
  if (va.shape().rank() == 0) {
    throw std::invalid_argument("softmax: needs rank >= 1");
  }
  const std::size_t m = va.shape()[va.shape().rank() - 1];
  const std::size_t rows = m == 0 ? 0 : va.numel() / m;
  Tensor out(va.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double * x = va.data().data() + r * m;
    double * y = out.data().data() + r * m;
    const double mx = *std::max_element(x, x + m);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < m; ++j) y[j] /= z;
  }
  const std::uint32_t ia = a.index();
  return a.tape()->record(std::move(out), {ia}, [=](Tape & t, std::uint32_t self) {
    Tensor * sink = t.grad_sink(ia);
    if (!sink) return;
    const Tensor & g = t.out_grad(self);
    const Tensor & y = t.value(self);
    for (std::size_t r = 0; r < rows; ++r) {
      double dotp = 0.0;
      for (std::size_t j = 0; j < m; ++j) dotp += g[r * m + j] * y[r * m + j];
      for (std::size_t j = 0; j < m; ++j) (*sink)[r * m + j] += y[r * m + j] * (g[r * m + j] - dotp);
    }
  });
}

Var group_norm(const Var & x, const Var & gamma, const Var & beta, std::size_t groups, double eps)
{
  check_same_tape(x, gamma);
  check_same_tape(x, beta);
  const Tensor & vx = x.value();
  if (vx.shape().rank() != 2) {
    throw std::invalid_argument("group_norm: expected rank 2, got " + vx.shape().to_string());
  }
  const std::size_t n = vx.shape()[0];
  const std::size_t c = vx.shape()[1];
  if (groups == 0 || c % groups != 0) {
    throw std::invalid_argument(
      "group_norm: " + std::to_string(c) + " channels not divisible into " + std::to_string(groups) + " groups");
  }
  if (gamma.value().numel() != c || beta.value().numel() != c) {
    shape_error("group_norm", vx.shape(), gamma.value().shape());
  }
  const std::size_t cg = c / groups;
  std::vector<double> xhat(n * c);
  std::vector<double> inv_std(n * groups);
  Tensor out(vx.shape());
  const Tensor & vg = gamma.value();
  const Tensor & vb = beta.value();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t gi = 0; gi < groups; ++gi) {
      const std::size_t off = i * c + gi * cg;
      double mean = 0.0;
      for (std::size_t j = 0; j < cg; ++j) mean += vx[off + j];
      mean /= static_cast<double>(cg);
      double var = 0.0;
      for (std::size_t j = 0; j < cg; ++j) var += (vx[off + j] - mean) * (vx[off + j] - mean);
      var /= static_cast<double>(cg);
      const double is = 1.0 / std::sqrt(var + eps);
      inv_std[i * groups + gi] = is;
      for (std::size_t j = 0; j < cg; ++j) {
        xhat[off + j] = (vx[off + j] - mean) * is;
        out[off + j] = vg[gi * cg + j] * xhat[off + j] + vb[gi * cg + j];
      }
    }
  }
  const std::uint32_t ix = x.index();
  const std::uint32_t ig = gamma.index();
  const std::uint32_t ib = beta.index();
  return x.tape()->record(
    std::move(out), {ix, ig, ib},
    [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape & t, std::uint32_t self) {
      const Tensor & g = t.out_grad(self);
      const Tensor & gam = t.value(ig);
      if (Tensor * sg = t.grad_sink(ig)) {
        for (std::size_t k = 0; k < n * c; ++k) (*sg)[k % c] += g[k] * xhat[k];
      }
      if (Tensor * sb = t.grad_sink(ib)) {
        for (std::size_t k = 0; k < n * c; ++k) (*sb)[k % c] += g[k];
      }
      Tensor * sx = t.grad_sink(ix);
      if (!sx) return;
      std::vector<double> dxhat(cg);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t gi = 0; gi < groups; ++gi) {
          const std::size_t off = i * c + gi * cg;
          double mean_d = 0.0;
          double mean_dx = 0.0;
          for (std::size_t j = 0; j < cg; ++j) {
            dxhat[j] = g[off + j] * gam[gi * cg + j];
            mean_d += dxhat[j];
            mean_dx += dxhat[j] * xhat[off + j];
          }
          mean_d /= static_cast<double>(cg);
          mean_dx /= static_cast<double>(cg);
          const double is = inv_std[i * groups + gi];
          for (std::size_t j = 0; j < cg; ++j) {
            (*sx)[off + j] += is * (dxhat[j] - mean_d - xhat[off + j] * mean_dx);
          }
        }
      }
    });
}

// ------------------------------------------------------------ structure ---

Var concat(const std::vector<Var> & parts, std::size_t axis)
{
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Tape * tape = parts.front().tape();
  const Shape & s0 = parts.front().shape();
  std::vector<std::size_t> out_dims = dims_of(s0);
  if (axis >= s0.rank()) {
    throw std::invalid_argument("concat: axis out of range for shape " + s0.to_string());
  }
  out_dims[axis] = 0;
  std::vector<std::uint32_t> inputs;
  std::vector<std::size_t> widths;
  for (const auto & p : parts) {
    check_same_tape(parts.front(), p);
    const Shape & s = p.shape();
    if (s.rank() != s0.rank()) shape_error("concat", s0, s);
    for (std::size_t i = 0; i < s.rank(); ++i) {
      if (i != axis && s[i] != s0[i]) shape_error("concat", s0, s);
    }
    out_dims[axis] += s[axis];
    inputs.push_back(p.index());
  }
  const Shape out_shape = shape_from(out_dims);
  const AxisSplit sp = split_at(out_shape, axis);
  for (const auto & p : parts) widths.push_back(p.shape()[axis] * sp.inner);
  const std::size_t row = sp.axis * sp.inner;
  Tensor out(out_shape);
  std::size_t col = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const Tensor & v = parts[pi].value();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      std::copy_n(v.data().data() + o * widths[pi], widths[pi], out.data().data() + o * row + col);
    }
    col += widths[pi];
  }
  return tape->record(std::move(out), inputs, [=](Tape & t, std::uint32_t self) {
    const Tensor & g = t.out_grad(self);
    std::size_t c = 0;
    const auto & ins = t.inputs(self);
    for (std::size_t pi = 0; pi < ins.size(); ++pi) {
      if (Tensor * sink = t.grad_sink(ins[pi])) {
        for (std::size_t o = 0; o < sp.outer; ++o) {
          for (std::size_t j = 0; j < widths[pi]; ++j) (*sink)[o * widths[pi] + j] += g[o * row + c + j];
        }
      }
      c += widths[pi];
    }
  });
}

Var slice(const Var & a, std::size_t axis, std::size_t begin, std::size_t end)
{
  const Shape & s = a.shape();
  const AxisSplit sp = split_at(s, axis);
  if (begin >= end || end > sp.axis) {
    throw std::invalid_argument(
      "slice: range [" + std::to_string(begin) + ", " + std::to_string(end) + ") invalid for axis " +
      std::to_string(axis) + " of shape " + s.to_string());
  }
  std::vector<std::size_t> dims = dims_of(s);
  dims[axis] = end - begin;
  Tensor out(shape_from(dims));
  const std::size_t width = (end - begin) * sp.inner;
  const std::size_t row = sp.axis * sp.inner;
  const std::size_t start = begin * sp.inner;
  const Tensor & v = a.value();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    std::copy_n(v.data().data() + o * row + start, width, out.data().data() + o * width);
  }
  const std::uint32_t ia = a.index();
  return a.tape()->record(std::move(out), {ia}, [=](Tape & t, std::uint32_t self) {
    Tensor * sink = t.grad_sink(ia);
    if (!sink) return;
    const Tensor & g = t.out_grad(self);
    for (std::size_t o = 0; o < sp.outer; ++o) {
      for (std::size_t j = 0; j < width; ++j) (*sink)[o * row + start + j] += g[o * width + j];
    }
  });
}

Var reshape(const Var & a, Shape shape)
{
  if (shape.numel() != a.value().numel()) shape_error("reshape", a.shape(), shape);
  Tensor out(shape, a.value().vec());
  const std::uint32_t ia = a.index();
  return a.tape()->record(std::move(out), {ia}, [=](Tape & t, std::uint32_t self) {
    Tensor * sink = t.grad_sink(ia);
    if (!sink) return;
    const Tensor & g = t.out_grad(self);
    for (std::size_t k = 0; k < g.numel(); ++k) (*sink)[k] += g[k];
  });
}

Var gather_rows(const Var & a, const std::vector<std::size_t> & rows)
{
  const Shape & s = a.shape();
  if (s.rank() == 0 || rows.empty()) {
    throw std::invalid_argument("gather_rows: need rank >= 1 and at least one row");
  }
  const std::size_t n = s[0];
  const std::size_t width = s.numel() / n;
  for (auto r : rows) {
    if (r >= n) throw std::out_of_range("gather_rows: row " + std::to_string(r) + " of " + s.to_string());
  }
  std::vector<std::size_t> dims = dims_of(s);
  dims[0] = rows.size();
  Tensor out(shape_from(dims));
  const Tensor & v = a.value();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(v.data().data() + rows[i] * width, width, out.data().data() + i * width);
  }
  const std::uint32_t ia = a.index();
  return a.tape()->record(std::move(out), {ia}, [=](Tape & t, std::uint32_t self) {
    Tensor * sink = t.grad_sink(ia);
    if (!sink) return;
    const Tensor & g = t.out_grad(self);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < width; ++j) (*sink)[rows[i] * width + j] += g[i * width + j];
    }
  });
}

Var reduce_sum(const Var & a)
{
  const Tensor & v = a.value();
  double acc = 0.0;
  for (double x : v.data()) acc += x;
  const std::uint32_t ia = a.index();
  return a.tape()->record(Tensor::scalar(acc), {ia}, [](Tape & t, std::uint32_t self) {
    const std::uint32_t in = t.inputs(self)[0];
    Tensor * sink = t.grad_sink(in);
    if (!sink) return;
    const double g = t.out_grad(self)[0];
    for (auto & d : sink->data()) d += g;
  });
}

Var reduce_mean(const Var & a)
{
  const std::size_t n = a.value().numel();
  if (n == 0) throw std::invalid_argument("reduce_mean: empty input");
  return scale(reduce_sum(a), 1.0 / static_cast<double>(n));
}

Var reduce_sum(const Var & a, std::size_t axis)
{
  const Shape & s = a.shape();
  const AxisSplit sp = split_at(s, axis);
  std::vector<std::size_t> dims = dims_of(s);
  dims.erase(dims.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor out(shape_from(dims));
  const Tensor & v = a.value();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t k = 0; k < sp.axis; ++k) {
      for (std::size_t i = 0; i < sp.inner; ++i) {
        out[o * sp.inner + i] += v[(o * sp.axis + k) * sp.inner + i];
      }
    }
  }
  const std::uint32_t ia = a.index();
  return a.tape()->record(std::move(out), {ia}, [=](Tape & t, std::uint32_t self) {
    Tensor * sink = t.grad_sink(ia);
    if (!sink) return;
    const Tensor & g = t.out_grad(self);
    for (std::size_t o = 0; o < sp.outer; ++o) {
      for (std::size_t k = 0; k < sp.axis; ++k) {
        for (std::size_t i = 0; i < sp.inner; ++i) {
          (*sink)[(o * sp.axis + k) * sp.inner + i] += g[o * sp.inner + i];
        }
      }
    }
  });
}

Var reduce_mean(const Var & a, std::size_t axis)
{
  const std::size_t n = split_at(a.shape(), axis).axis;
  if (n == 0) throw std::invalid_argument("reduce_mean: empty axis");
  return scale(reduce_sum(a, axis), 1.0 / static_cast<double>(n));
}

Var im2col1d(const Var & x, std::size_t kernel, std::size_t stride)
{
  const Shape & s = x.shape();
  if (s.rank() != 3 || kernel == 0 || stride == 0 || s[1] < kernel) {
    throw std::invalid_argument(
      "im2col1d: need B x T x C input with T >= kernel, got " + s.to_string() + " kernel " +
      std::to_string(kernel));
  }
  const std::size_t b = s[0];
  const std::size_t tlen = s[1];
  const std::size_t c = s[2];
  const std::size_t tout = (tlen - kernel) / stride + 1;
  const std::size_t width = kernel * c;
  Tensor out(Shape{b * tout, width});
  const Tensor & v = x.value();
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t t = 0; t < tout; ++t) {
      std::copy_n(
        v.data().data() + (bi * tlen + t * stride) * c, width,
        out.data().data() + (bi * tout + t) * width);
    }
  }
  const std::uint32_t ix = x.index();
  return x.tape()->record(std::move(out), {ix}, [=](Tape & tp, std::uint32_t self) {
    Tensor * sink = tp.grad_sink(ix);
    if (!sink) return;
    const Tensor & g = tp.out_grad(self);
    for (std::size_t bi = 0; bi < b; ++bi) {
      for (std::size_t t = 0; t < tout; ++t) {
        for (std::size_t j = 0; j < width; ++j) {
          (*sink)[(bi * tlen + t * stride) * c + j] += g[(bi * tout + t) * width + j];
        }
      }
    }
  });
}

// ----------------------------------------------------------------- Adam ---

void adam_step(ParameterStore & params, const Gradients & grads, AdamState & state, const AdamConfig & config)
{
  if (grads.size() != params.size()) {
    throw std::invalid_argument("adam_step: gradient count does not match parameter count");
  }
  if (state.m.empty()) {
    for (const auto & p : params.all()) {
      state.m.emplace_back(p.value.shape());
      state.v.emplace_back(p.value.shape());
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t id = 0; id < params.size(); ++id) {
    auto p = params[id].value.data();
    auto g = grads[id].data();
    auto m = state.m[id].data();
    auto v = state.v[id].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

// ------------------------------------------------------------ checkpoint ---

namespace
{

nlohmann::json tensor_to_json(const std::string & name, const Tensor & t)
{
  return {{"name", name}, {"shape", dims_of(t.shape())}, {"data", t.vec()}};
}

Tensor tensor_from_json(const nlohmann::json & j)
{
  return Tensor(shape_from(j.at("shape").get<std::vector<std::size_t>>()), j.at("data").get<std::vector<double>>());
}

}  // namespace

nlohmann::json parameters_to_json(const ParameterStore & params)
{
  nlohmann::json arr = nlohmann::json::array();
  for (const auto & p : params.all()) arr.push_back(tensor_to_json(p.name, p.value));
  return arr;
}

void parameters_from_json(ParameterStore & params, const nlohmann::json & j)
{
  if (!j.is_array() || j.size() != params.size()) {
    throw std::invalid_argument(
      "checkpoint: expected " + std::to_string(params.size()) + " parameter arrays");
  }
  for (std::size_t id = 0; id < params.size(); ++id) {
    const std::string name = j[id].at("name").get<std::string>();
    Tensor t = tensor_from_json(j[id]);
    if (name != params[id].name || !(t.shape() == params[id].value.shape())) {
      throw std::invalid_argument(
        "checkpoint: entry " + std::to_string(id) + " is '" + name + "' " + t.shape().to_string() +
        ", model expects '" + params[id].name + "' " + params[id].value.shape().to_string());
    }
    params[id].value = std::move(t);
  }
}

nlohmann::json adam_state_to_json(const AdamState & state)
{
  nlohmann::json m = nlohmann::json::array();
  nlohmann::json v = nlohmann::json::array();
  for (std::size_t i = 0; i < state.m.size(); ++i) {
    m.push_back(tensor_to_json("m", state.m[i]));
    v.push_back(tensor_to_json("v", state.v[i]));
  }
  return {{"step", state.step}, {"m", std::move(m)}, {"v", std::move(v)}};
}

AdamState adam_state_from_json(const nlohmann::json & j)
{
  AdamState s;
  s.step = j.at("step").get<std::int64_t>();
  for (const auto & t : j.at("m")) s.m.push_back(tensor_from_json(t));
  for (const auto & t : j.at("v")) s.v.push_back(tensor_from_json(t));
  return s;
}

}  // namespace laneloss::ad
