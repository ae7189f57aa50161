#pragma once

#include <stdexcept>
#include <string>

namespace gpuval {

enum class errc {
  io_failure,
  parse_error,
  version_mismatch,
  unknown_event,
  missing_instance,
  unknown_configuration,
  duplicate_configuration,
  marker_event_absent,
  unpaired_marker,
  segmentation_failure,
  ambiguous_amplitude,
  unknown_amplitude,
  degenerate_input,
  inconsistent_kernel_sequence,
  no_reference_for_config,
  invalid_target,
  missing_memory_events,
  cache_capacity_exceeded,
  golden_unavailable,
  invalid_argument,
};

const char* errc_name(errc code);

// Single exception type for the library. The C layer maps code() to a status
// value and what() to the last-error string.
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message);
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] void raise(errc code, const std::string& message);

}  // namespace gpuval
