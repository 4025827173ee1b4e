#pragma once

#include <cstdint>
#include <vector>

#include "funfuse/ecm.hpp"
#include "funfuse/selection.hpp"
#include "funfuse/simulate.hpp"

namespace funfuse {

/// Replicated generate -> cross-validate -> refit -> evaluate pipeline.
/// Replicate r derives its seeds from the master scenario seed, so the
/// outcome is independent of the parallelism degree.
struct StudySpec {
  ScenarioSpec scenario;  // scenario.seed is the master seed
  SelectionGrid grid;
  FitConfig base_config;
  int replicates = 10;
  int n_threads = 0;  // 0 = hardware concurrency
};

struct ReplicateOutcome {
  std::uint64_t seed = 0;
  int chosen_g = 0;
  double chosen_lambda_s = 0.0;
  double chosen_lambda_l = 0.0;
  double arand = 0.0;
  // NaN when the chosen cluster count differs from the generating one,
  // since mean alignment is undefined then.
  double rmse = 0.0;
  double noninf_fraction = 0.0;
  bool converged = false;
};

struct StudyResult {
  std::vector<ReplicateOutcome> replicates;
  double mean_g = 0.0;
  double mean_arand = 0.0;
  double mean_rmse = 0.0;            // over replicates with matching G
  double mean_noninf_fraction = 0.0;  // likewise
  int n_matching_g = 0;
};

StudyResult run_study(const StudySpec& spec);

}  // namespace funfuse
