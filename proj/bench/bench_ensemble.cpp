// Serial vs OpenMP ensemble timing. Exits 1 if the two reports differ.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include <omp.h>

#include "urnfield/mc.hpp"

using namespace urnfield;

namespace {

template <class F>
double time_it(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  mc::EnsembleConfig cfg;
  cfg.m = 3;
  cfg.p = 0.3;
  cfg.n_steps = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 20000;
  cfg.n_runs = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 64;
  cfg.master_seed = 1;

  mc::McReport serial, parallel;
  const double ts = time_it([&] { serial = mc::run_ensemble_serial(cfg); });
  const double tp = time_it([&] { parallel = mc::run_ensemble(cfg); });
  const bool same = nlohmann::json(serial) == nlohmann::json(parallel);
  std::printf("runs=%llu steps=%llu threads=%d\n", (unsigned long long)cfg.n_runs,
              (unsigned long long)cfg.n_steps, omp_get_max_threads());
  std::printf("serial   %.3f s\nparallel %.3f s (speedup %.2fx)\nreports %s\n", ts, tp, ts / tp,
              same ? "identical" : "DIFFER");
  return same ? 0 : 1;
}
