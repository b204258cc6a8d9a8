#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rgat/tape.hpp"

namespace rgat {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  int64_t worst_coord = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  int64_t coords_checked = 0;

  // diagnostics: the same maximum restricted to coordinates the oracle can
  // resolve (max(|a|,|n|) >= 1e-6), the largest absolute difference, and the
  // count of coordinates below the cutoff, where the difference quotient is
  // dominated by ulp(loss)/2eps rounding noise
  double max_rel_strong = 0.0;
  double max_abs_diff = 0.0;
  int64_t weak_coords = 0;

  void merge(const GradCheckReport& other);
};

// Central-difference gradient check. loss_fn evaluates the complete scalar
// objective at the parameters' current values and must be deterministic
// (dropout disabled); grads_fn runs one backward pass that leaves analytic
// gradients in Parameter::grad. Per tensor, min(coords_per_param, size)
// distinct coordinates are sampled from a stream derived per parameter
// index. Relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::function<void()>& grads_fn,
                           std::span<Parameter* const> params,
                           double eps = 1e-5, int coords_per_param = 200,
                           uint64_t seed = 7);

// Parallel variant: parameters are dealt round-robin onto `shards` workers,
// each backed by its own independently constructed context (model replica),
// so loss evaluations never share mutable state. Coordinate streams are
// keyed by global parameter index; the merged report is identical to the
// serial one for any shard count.
struct GradCheckContext {
  std::function<double()> loss;
  std::function<void()> grads;
  std::vector<Parameter*> params;
};

GradCheckReport grad_check_sharded(
    const std::function<GradCheckContext(int shard)>& make_context, int shards,
    double eps = 1e-5, int coords_per_param = 200, uint64_t seed = 7);

}  // namespace rgat
