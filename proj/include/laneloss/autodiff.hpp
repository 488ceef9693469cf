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

#ifndef LANELOSS__AUTODIFF_HPP_
#define LANELOSS__AUTODIFF_HPP_

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

/**
 * Reverse-mode automatic differentiation over dense float64 arrays of rank
 * 0 to 3.
 *
 * A Tape records one forward evaluation. Every op appends a node holding its
 * value and a backward rule; node order is a topological order, so backward()
 * walks the tape in reverse. A tape can be differentiated once.
 *
 * Broadcasting is limited to a scalar (single-element) operand in the
 * elementwise ops, plus the explicit row-wise add_bias.
 */
namespace laneloss::ad
{

class Shape
{
public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t i) const { return dims_[i]; }
  std::size_t numel() const;
  std::string to_string() const;

  friend bool operator==(const Shape & a, const Shape & b);

private:
  std::array<std::size_t, 3> dims_{0, 0, 0};
  std::size_t rank_ = 0;
};

class Tensor
{
public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);
  static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

  const Shape & shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double> & vec() const { return data_; }
  double & operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double & at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double item() const;

private:
  Shape shape_;
  std::vector<double> data_;
};

/// Named trainable array. ParameterStore keeps registration order, which is
/// also the checkpoint order.
struct Parameter
{
  std::string name;
  Tensor value;
};

using ParamId = std::size_t;

class ParameterStore
{
public:
  ParamId add(std::string name, Tensor init);
  std::size_t size() const { return params_.size(); }
  Parameter & operator[](ParamId id) { return params_[id]; }
  const Parameter & operator[](ParamId id) const { return params_[id]; }
  const std::vector<Parameter> & all() const { return params_; }
  std::size_t total_elements() const;

private:
  std::vector<Parameter> params_;
};

/// Gradient arrays aligned with a ParameterStore.
using Gradients = std::vector<Tensor>;
Gradients zero_gradients(const ParameterStore & params);

class Tape;

/// Handle to a node on a Tape.
class Var
{
public:
  Var() = default;
  const Tensor & value() const;
  const Shape & shape() const { return value().shape(); }
  Tape * tape() const { return tape_; }
  std::uint32_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

private:
  friend class Tape;
  Var(Tape * tape, std::uint32_t index) : tape_(tape), index_(index) {}
  Tape * tape_ = nullptr;
  std::uint32_t index_ = 0;
};

class Tape
{
public:
  using Backward = std::function<void(Tape &, std::uint32_t self)>;

  explicit Tape(const ParameterStore * params = nullptr);
  Tape(const Tape &) = delete;
  Tape & operator=(const Tape &) = delete;

  Var constant(Tensor value);
  /// Leaf that receives a gradient.
  Var variable(Tensor value);
  /// Leaf bound to a stored parameter; repeated calls return the same node.
  Var param(ParamId id);

  /// Populates adjoints of every node reachable from `loss` (a single-element
  /// node). Throws std::logic_error on a second call.
  void backward(Var loss);
  bool consumed() const { return consumed_; }

  /// Adjoint of a node; zeros when nothing flowed into it.
  Tensor grad(Var v) const;
  /// Adds `scale` times each bound parameter's adjoint into `out`.
  void accumulate_param_grads(Gradients & out, double scale = 1.0) const;

  std::size_t size() const { return nodes_.size(); }

  // Op-author interface.
  Var record(Tensor value, std::vector<std::uint32_t> inputs, Backward backward);
  const Tensor & value(std::uint32_t i) const { return nodes_[i].value; }
  const Tensor & out_grad(std::uint32_t i) const { return nodes_[i].grad; }
  /// Adjoint accumulator of input `i`, allocated on first use; nullptr when
  /// the input does not require a gradient.
  Tensor * grad_sink(std::uint32_t i);
  const std::vector<std::uint32_t> & inputs(std::uint32_t i) const { return nodes_[i].inputs; }

private:
  struct Node
  {
    Tensor value;
    Tensor grad;
    std::vector<std::uint32_t> inputs;
    Backward backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  const ParameterStore * params_;
  std::vector<std::int64_t> param_nodes_;
  bool consumed_ = false;
};

void check_same_tape(const Var & a, const Var & b);

// Elementwise; a single-element operand broadcasts.
Var add(const Var & a, const Var & b);
Var sub(const Var & a, const Var & b);
Var mul(const Var & a, const Var & b);
Var scale(const Var & a, double c);
Var relu(const Var & a);
Var exp(const Var & a);
Var sqrt(const Var & a);
/// max(0, a + margin)
Var hinge(const Var & a, double margin);
/// Elementwise smooth L1 of (a - b): quadratic below `beta`, linear above.
Var smooth_l1(const Var & a, const Var & b, double beta = 1.0);

Var matmul(const Var & a, const Var & b);
Var transpose(const Var & a);
/// Adds a length-m vector to every row of an n x m matrix.
Var add_bias(const Var & a, const Var & bias);
Var softmax(const Var & a);
/// Per-row normalization over `groups` channel groups of an n x c matrix,
/// followed by the affine map gamma * x + beta.
Var group_norm(const Var & x, const Var & gamma, const Var & beta, std::size_t groups, double eps = 1e-5);

Var concat(const std::vector<Var> & parts, std::size_t axis);
Var slice(const Var & a, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(const Var & a, Shape shape);
Var gather_rows(const Var & a, const std::vector<std::size_t> & rows);
Var reduce_sum(const Var & a);
Var reduce_sum(const Var & a, std::size_t axis);
Var reduce_mean(const Var & a);
Var reduce_mean(const Var & a, std::size_t axis);
/// Unfolds a B x T x C sequence batch into (B * T') x (K * C) windows,
/// T' = (T - K) / stride + 1, so a 1-D convolution becomes one matmul.
Var im2col1d(const Var & x, std::size_t kernel, std::size_t stride);

struct AdamConfig
{
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState
{
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t step = 0;
};

/// One bias-corrected Adam update of every parameter in `params`.
void adam_step(ParameterStore & params, const Gradients & grads, AdamState & state, const AdamConfig & config);

/// Checkpoint payload: `parameters` is an array of {name, shape, data} in
/// store registration order.
nlohmann::json parameters_to_json(const ParameterStore & params);
/// Loads values by position; names and shapes must match the store.
void parameters_from_json(ParameterStore & params, const nlohmann::json & j);
nlohmann::json adam_state_to_json(const AdamState & state);
AdamState adam_state_from_json(const nlohmann::json & j);

}  // namespace laneloss::ad

#endif  // LANELOSS__AUTODIFF_HPP_
