#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "golden.hpp"
#include "model.hpp"
#include "segmentation.hpp"

namespace gpuval {

// Checks one runtime trace against a golden model: segment, decode the kernel
// sequence, then correlate every segment with its reference. A trace is
// Compromised once policy.reject_run_len consecutive segments miss the
// correlation threshold; flagged_kernel is the first segment of the first such
// run. Traces whose decoded sequence diverges from the model (missing,
// extra or wrong kernels, or undecodable markers) come back Incomplete with
// divergence_ordinal set where applicable.
Verdict validate_trace(const Trace& trace, const GoldenModel& model);

// Same check under a different policy (threshold sweeps and the like).
Verdict validate_trace(const Trace& trace, const GoldenModel& model,
                       const ValidationPolicy& policy);

// Continuous-monitoring variant: rejection runs carry across trace
// boundaries, so a compromise that straddles two submissions is still caught.
class StreamValidator {
 public:
  explicit StreamValidator(const GoldenModel& model);

  Verdict next(const Trace& trace);
  void reset() { carry_ = 0; }
  std::uint32_t pending_run() const { return carry_; }

 private:
  const GoldenModel* model_;
  std::uint32_t carry_ = 0;
};

struct TraceOutcome {
  std::string trace_id;
  bool attack = false;
  Verdict verdict;
  std::optional<double> min_coefficient;  // lowest per-segment score, if any
};

struct CampaignReport {
  std::size_t normal_count = 0;
  std::size_t attack_count = 0;
  std::optional<double> tpr;  // unset when no attack traces were supplied
  double fpr = 0.0;
  std::vector<TraceOutcome> outcomes;
};

// Batch evaluation: every non-Benign verdict counts as a detection. tpr is
// the detected share of attack traces, fpr the flagged share of normal ones.
CampaignReport run_campaign(const GoldenModel& model, const std::vector<Trace>& normal,
                            const std::vector<Trace>& attacks);

}  // namespace gpuval
