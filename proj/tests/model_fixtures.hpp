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

#ifndef LANELOSS_TESTS__MODEL_FIXTURES_HPP_
#define LANELOSS_TESTS__MODEL_FIXTURES_HPP_

#include "laneloss/harness.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace laneloss::test
{

/// The miniature model used for full finite-difference sweeps.
inline model::ModelConfig miniature_config()
{
  model::ModelConfig c;
  c.d = 8;
  c.k = 2;
  c.modes = 2;
  c.heads = 2;
  c.t_o = 8;
  c.t_f = 3;
  c.proposal_width = 8;
  c.lane_points = 4;
  return c;
}

/// Scenario settings matching a model's horizons.
inline scenario::ScenarioConfig scenario_for(const model::ModelConfig & mc, std::size_t agents)
{
  scenario::ScenarioConfig sc;
  sc.t_o = mc.t_o;
  sc.t_f = mc.t_f;
  sc.agents = agents;
  if (mc.t_f < 30) {
    // Short horizons cannot contain a full turn; keep to lane following.
    sc.maneuver_mix = {1.0, 0.0, 0.0, 0.0, 0.0};
    sc.families = {scenario::MapFamily::kCorridor, scenario::MapFamily::kCurve, scenario::MapFamily::kTIntersection};
  }
  return sc;
}

inline harness::PreparedSample sample_for(
  const model::ModelConfig & mc, std::size_t agents, std::uint64_t seed, const harness::TrainConfig & tc = {})
{
  const auto scene = scenario::generate_scene(scenario_for(mc, agents), seed, seed);
  return harness::prepare_sample(scene, mc, tc);
}

struct ParamGradCheck
{
  double max_rel_error = 0.0;
  std::size_t probes = 0;
  std::size_t excluded = 0;  ///< probes whose step straddles a kink or a winner switch
};

inline double loss_value(const model::Model & m, const harness::PreparedSample & s, const harness::TrainConfig & tc)
{
  ad::Tape tape(&m.params());
  return harness::scene_loss(tape, m, s, tc).total.value().item();
}

/**
 * Central differences of the total scene loss against reverse-mode gradients
 * for the listed (parameter, element) probes. Probes next to a ReLU, hinge or
 * smooth L1 kink or a winner switch, where no derivative exists, are
 * excluded (see oracle::kink_free_derivative).
 */
inline ParamGradCheck param_gradcheck(
  model::Model & m, const harness::PreparedSample & s, const harness::TrainConfig & tc,
  const std::vector<std::pair<std::size_t, std::size_t>> & probes, double h = 1e-5)
{
  ad::Tape tape(&m.params());
  tape.backward(harness::scene_loss(tape, m, s, tc).total);
  ad::Gradients grads = ad::zero_gradients(m.params());
  tape.accumulate_param_grads(grads);

  ParamGradCheck r;
  for (const auto & [p, i] : probes) {
    double & w = m.params()[p].value[i];
    const double w0 = w;
    const auto d = oracle::kink_free_derivative(
      [&](double step) {
        w = w0 + step;
        const double f = loss_value(m, s, tc);
        w = w0;
        return f;
      },
      h);
    ++r.probes;
    if (!d) {
      ++r.excluded;
      continue;
    }
    r.max_rel_error = std::max(r.max_rel_error, oracle::relative_error(grads[p][i], *d, 1e-6));
  }
  return r;
}

inline std::vector<std::pair<std::size_t, std::size_t>> all_probes(const ad::ParameterStore & params)
{
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].value.numel(); ++i) out.emplace_back(p, i);
  }
  return out;
}

}  // namespace laneloss::test

#endif  // LANELOSS_TESTS__MODEL_FIXTURES_HPP_
