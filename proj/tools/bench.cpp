// Benchmarks the OpenMP kernel paths against the serial reference: raw gemm
// at model-relevant shapes, then a full forward/backward pass. The parallel
// kernels partition by output element, so the "max|diff|" column must be 0.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "rgat/dataset.hpp"
#include "rgat/kernels.hpp"
#include "rgat/model.hpp"
#include "rgat/rng.hpp"
#include "rgat/synthetic.hpp"

using namespace rgat;

namespace {

double now() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double bench_gemm(int m, int n, int k, bool parallel, std::vector<double>& out) {
  Rng rng(42);
  std::vector<double> a(static_cast<size_t>(m) * k), b(static_cast<size_t>(k) * n);
  for (double& x : a) x = rng.uniform(-1, 1);
  for (double& x : b) x = rng.uniform(-1, 1);
  out.assign(static_cast<size_t>(m) * n, 0.0);
  int reps = std::max(1, static_cast<int>(2e8 / (2.0 * m * n * k)));
  double t0 = now();
  for (int r = 0; r < reps; ++r) {
    if (parallel)
      kernels::gemm_omp(false, false, m, n, k, a.data(), k, b.data(), n,
                        out.data(), n, false);
    else
      kernels::gemm_serial(false, false, m, n, k, a.data(), k, b.data(), n,
                           out.data(), n, false);
  }
  return (now() - t0) / reps;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

double bench_model(bool parallel, double& loss_out) {
  kernels::set_parallel(parallel);
  SynthOptions sopt;
  sopt.min_tokens = 9;
  sopt.max_tokens = 9;
  std::vector<RawRecord> records = gen_synthetic(16, sopt, 3);
  DataVocabs vocabs;
  Dataset data = build_dataset(records, vocabs, true);
  ModelConfig cfg;
  cfg.layers = 4;
  RgatModel model(cfg, vocabs, 3);

  double t0 = now();
  int reps = 3;
  loss_out = 0.0;
  for (int r = 0; r < reps; ++r) {
    model.params().zero_grads();
    Tape t;
    Var loss;
    for (size_t i = 0; i < data.instances.size(); ++i) {
      Var logits = model.forward(t, data.instances[i], false);
      Var nll = model.nll(t, logits, data.instances[i].polarity);
      loss = i == 0 ? nll : t.add(loss, nll);
    }
    loss = t.add(loss, model.l2_penalty(t));
    t.backward(loss);
    loss_out = t.value(loss)[0];
  }
  return (now() - t0) / reps;
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", kernels::thread_count());

  std::printf("%-26s %12s %12s %9s %12s\n", "gemm m x k x n", "serial ms",
              "openmp ms", "speedup", "max|diff|");
  const int shapes[][3] = {
      {9, 360, 100},   // input projection
      {1, 360, 200},   // lstm step
      {9, 100, 100},   // pct / attention projections
      {64, 64, 64},    {128, 128, 128}, {256, 256, 256},
  };
  for (const auto& s : shapes) {
    std::vector<double> out_serial, out_omp;
    double ts = bench_gemm(s[0], s[1], s[2], false, out_serial);
    double tp = bench_gemm(s[0], s[1], s[2], true, out_omp);
    char name[40];
    std::snprintf(name, sizeof(name), "%d x %d x %d", s[0], s[1], s[2]);
    std::printf("%-26s %12.4f %12.4f %8.2fx %12g\n", name, ts * 1e3, tp * 1e3,
                ts / tp, max_abs_diff(out_serial, out_omp));
  }

  std::printf("\nfull model forward+backward (16 instances, 4 layers)\n");
  double loss_serial = 0.0, loss_omp = 0.0;
  double ts = bench_model(false, loss_serial);
  double tp = bench_model(true, loss_omp);
  kernels::set_parallel(true);
  std::printf("%-26s %12.1f %12.1f %8.2fx %12g\n", "batch pass (ms)", ts * 1e3,
              tp * 1e3, ts / tp, std::fabs(loss_serial - loss_omp));
  return 0;
}
