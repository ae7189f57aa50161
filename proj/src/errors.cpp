#include "errors.hpp"

namespace gpuval {

const char* errc_name(errc code) {
  switch (code) {
    case errc::io_failure: return "io_failure";
    case errc::parse_error: return "parse_error";
    case errc::version_mismatch: return "version_mismatch";
    case errc::unknown_event: return "unknown_event";
    case errc::missing_instance: return "missing_instance";
    case errc::unknown_configuration: return "unknown_configuration";
    case errc::duplicate_configuration: return "duplicate_configuration";
    case errc::marker_event_absent: return "marker_event_absent";
    case errc::unpaired_marker: return "unpaired_marker";
    case errc::segmentation_failure: return "segmentation_failure";
    case errc::ambiguous_amplitude: return "ambiguous_amplitude";
    case errc::unknown_amplitude: return "unknown_amplitude";
    case errc::degenerate_input: return "degenerate_input";
    case errc::inconsistent_kernel_sequence: return "inconsistent_kernel_sequence";
    case errc::no_reference_for_config: return "no_reference_for_config";
    case errc::invalid_target: return "invalid_target";
    case errc::missing_memory_events: return "missing_memory_events";
    case errc::cache_capacity_exceeded: return "cache_capacity_exceeded";
    case errc::golden_unavailable: return "golden_unavailable";
    case errc::invalid_argument: return "invalid_argument";
  }
  return "unknown";
}

Error::Error(errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

void raise(errc code, const std::string& message) { throw Error(code, message); }

}  // namespace gpuval
