#include "rgat/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <unordered_set>
#include <vector>

#include "rgat/rng.hpp"

namespace rgat {

void GradCheckReport::merge(const GradCheckReport& other) {
  coords_checked += other.coords_checked;
  max_rel_strong = std::max(max_rel_strong, other.max_rel_strong);
  max_abs_diff = std::max(max_abs_diff, other.max_abs_diff);
  weak_coords += other.weak_coords;
  if (other.max_rel_error > max_rel_error) {
    max_rel_error = other.max_rel_error;
    worst_param = other.worst_param;
    worst_coord = other.worst_coord;
    worst_analytic = other.worst_analytic;
    worst_numeric = other.worst_numeric;
  }
}

namespace {

// coordinate sample for one parameter, keyed by its global index
std::vector<int64_t> sample_coords(int64_t size, int coords_per_param,
                                   uint64_t seed, size_t param_index) {
  std::vector<int64_t> coords;
  if (size <= coords_per_param) {
    coords.resize(static_cast<size_t>(size));
    for (int64_t i = 0; i < size; ++i) coords[static_cast<size_t>(i)] = i;
    return coords;
  }
  Rng rng = Rng(seed).derive("gradcheck", param_index);
  std::unordered_set<int64_t> chosen;
  while (static_cast<int>(chosen.size()) < coords_per_param)
    chosen.insert(
        static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(size))));
  coords.assign(chosen.begin(), chosen.end());
  std::sort(coords.begin(), coords.end());
  return coords;
}

void check_one_param(const std::function<double()>& loss_fn, Parameter& p,
                     const Tensor& analytic, size_t param_index, double eps,
                     int coords_per_param, uint64_t seed,
                     GradCheckReport& report) {
  for (int64_t c :
       sample_coords(p.value.size(), coords_per_param, seed, param_index)) {
    double saved = p.value[c];
    p.value[c] = saved + eps;
    double lp = loss_fn();
    p.value[c] = saved - eps;
    double lm = loss_fn();
    p.value[c] = saved;
    if (!std::isfinite(lp) || !std::isfinite(lm))
      throw std::runtime_error("grad_check: non-finite loss at " + p.name);
    double numeric = (lp - lm) / (2.0 * eps);
    double a = analytic[c];
    double rel = std::fabs(a - numeric) /
                 std::max({std::fabs(a), std::fabs(numeric), 1e-8});
    ++report.coords_checked;
    report.max_abs_diff = std::max(report.max_abs_diff, std::fabs(a - numeric));
    if (std::max(std::fabs(a), std::fabs(numeric)) >= 1e-6)
      report.max_rel_strong = std::max(report.max_rel_strong, rel);
    else
      ++report.weak_coords;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_param = p.name;
      report.worst_coord = c;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
}

GradCheckReport check_shard(const std::function<double()>& loss_fn,
                            const std::function<void()>& grads_fn,
                            std::span<Parameter* const> params, int shard,
                            int shards, double eps, int coords_per_param,
                            uint64_t seed) {
  for (Parameter* p : params) p->grad.fill(0.0);
  grads_fn();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    if (shards > 1 && static_cast<int>(pi % static_cast<size_t>(shards)) != shard)
      continue;
    check_one_param(loss_fn, *params[pi], analytic[pi], pi, eps,
                    coords_per_param, seed, report);
  }
  return report;
}

}  // namespace

GradCheckReport grad_check(const std::function<double()>& loss_fn,
                           const std::function<void()>& grads_fn,
                           std::span<Parameter* const> params, double eps,
                           int coords_per_param, uint64_t seed) {
  return check_shard(loss_fn, grads_fn, params, 0, 1, eps, coords_per_param,
                     seed);
}

GradCheckReport grad_check_sharded(
    const std::function<GradCheckContext(int)>& make_context, int shards,
    double eps, int coords_per_param, uint64_t seed) {
  shards = std::max(1, shards);
  std::vector<GradCheckReport> reports(static_cast<size_t>(shards));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(shards));
  auto worker = [&](int shard) {
    try {
      GradCheckContext ctx = make_context(shard);
      reports[static_cast<size_t>(shard)] =
          check_shard(ctx.loss, ctx.grads, ctx.params, shard, shards, eps,
                      coords_per_param, seed);
    } catch (...) {
      errors[static_cast<size_t>(shard)] = std::current_exception();
    }
  };
  if (shards == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(shards));
    for (int s = 0; s < shards; ++s) threads.emplace_back(worker, s);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  GradCheckReport merged;
  for (const GradCheckReport& r : reports) merged.merge(r);
  return merged;
}

}  // namespace rgat
