#include "gpuval.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "golden.hpp"
#include "model.hpp"
#include "runner.hpp"
#include "trace_io.hpp"
#include "validator.hpp"

struct gv_config {
  nlohmann::json doc;
};

struct gv_trace {
  gpuval::Trace trace;
};

struct gv_golden {
  gpuval::GoldenModel model;
};

namespace {

thread_local std::string t_last_error;

gv_status status_from(gpuval::errc code) {
  // gv_status mirrors errc value for value; both sides are pinned.
  return static_cast<gv_status>(static_cast<int>(code) + 1);
}

char* copy_string(const std::string& value) {
  char* out = static_cast<char*>(std::malloc(value.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, value.c_str(), value.size() + 1);
  return out;
}

// Runs fn, translating exceptions into status codes and the thread-local
// error message.
template <typename Fn>
gv_status guarded(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return GV_OK;
  } catch (const gpuval::Error& error) {
    t_last_error = error.what();
    return status_from(error.code());
  } catch (const std::exception& error) {
    t_last_error = error.what();
    return GV_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return GV_ERR_INTERNAL;
  }
}

gv_status required(bool ok, const char* what) {
  if (ok) return GV_OK;
  t_last_error = std::string("null ") + what;
  return GV_ERR_INVALID_ARGUMENT;
}

std::string joined(const std::vector<std::string>& paths) {
  std::string out;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (i != 0) out += '\n';
    out += paths[i];
  }
  return out;
}

}  // namespace

extern "C" {

const char* gv_version(void) { return "1.0.0"; }

const char* gv_last_error(void) { return t_last_error.c_str(); }

void gv_string_free(char* s) { std::free(s); }

gv_status gv_config_create(gv_config** out) {
  if (gv_status s = required(out != nullptr, "out"); s != GV_OK) return s;
  return guarded([&] { *out = new gv_config{gpuval::default_run_config()}; });
}

gv_status gv_config_load(const char* path, gv_config** out) {
  if (gv_status s = required(path != nullptr, "path"); s != GV_OK) return s;
  if (gv_status s = required(out != nullptr, "out"); s != GV_OK) return s;
  return guarded([&] { *out = new gv_config{gpuval::load_run_config(path, {})}; });
}

gv_status gv_config_set(gv_config* config, const char* assignment) {
  if (gv_status s = required(config != nullptr, "config"); s != GV_OK) return s;
  if (gv_status s = required(assignment != nullptr, "assignment"); s != GV_OK) return s;
  return guarded([&] { gpuval::apply_config_override(config->doc, assignment); });
}

gv_status gv_config_dump(const gv_config* config, char** out_json) {
  if (gv_status s = required(config != nullptr, "config"); s != GV_OK) return s;
  if (gv_status s = required(out_json != nullptr, "out"); s != GV_OK) return s;
  return guarded([&] { *out_json = copy_string(config->doc.dump(2) + "\n"); });
}

void gv_config_free(gv_config* config) { delete config; }

gv_status gv_trace_read(const char* path, gv_trace** out) {
  if (gv_status s = required(path != nullptr, "path"); s != GV_OK) return s;
  if (gv_status s = required(out != nullptr, "out"); s != GV_OK) return s;
  return guarded([&] { *out = new gv_trace{gpuval::read_trace(path)}; });
}

gv_status gv_trace_write(const gv_trace* trace, const char* path) {
  if (gv_status s = required(trace != nullptr, "trace"); s != GV_OK) return s;
  if (gv_status s = required(path != nullptr, "path"); s != GV_OK) return s;
  return guarded([&] { gpuval::write_trace(trace->trace, path); });
}

void gv_trace_free(gv_trace* trace) { delete trace; }

gv_status gv_golden_read(const char* path, gv_golden** out) {
  if (gv_status s = required(path != nullptr, "path"); s != GV_OK) return s;
  if (gv_status s = required(out != nullptr, "out"); s != GV_OK) return s;
  return guarded([&] { *out = new gv_golden{gpuval::read_golden(path)}; });
}

void gv_golden_free(gv_golden* model) { delete model; }

gv_status gv_validate(const gv_golden* model, const gv_trace* trace,
                      char** out_json) {
  if (gv_status s = required(model != nullptr, "model"); s != GV_OK) return s;
  if (gv_status s = required(trace != nullptr, "trace"); s != GV_OK) return s;
  if (gv_status s = required(out_json != nullptr, "out"); s != GV_OK) return s;
  return guarded([&] {
    const gpuval::Verdict verdict = gpuval::validate_trace(trace->trace, model->model);
    nlohmann::json doc;
    doc["decision"] = gpuval::decision_name(verdict.decision);
    doc["max_consecutive_rejections"] = verdict.max_consecutive_rejections;
    doc["flagged_kernel"] = nullptr;
    if (verdict.flagged_kernel) doc["flagged_kernel"] = *verdict.flagged_kernel;
    doc["divergence_ordinal"] = nullptr;
    if (verdict.divergence_ordinal) {
      doc["divergence_ordinal"] = *verdict.divergence_ordinal;
    }
    doc["diagnostic"] = verdict.diagnostic;
    doc["segments"] = nlohmann::json::array();
    for (const auto& check : verdict.per_segment) {
      doc["segments"].push_back(
          nlohmann::json{{"kernel_ordinal", check.kernel_ordinal},
                         {"config_id", check.config_id},
                         {"coefficient", check.coefficient},
                         {"matched", check.matched}});
    }
    *out_json = copy_string(doc.dump(2) + "\n");
  });
}

gv_status gv_run_build_golden(const gv_config* config, const char* out_dir,
                              char** out_paths) {
  if (gv_status s = required(config != nullptr, "config"); s != GV_OK) return s;
  if (gv_status s = required(out_dir != nullptr, "out_dir"); s != GV_OK) return s;
  if (gv_status s = required(out_paths != nullptr, "out"); s != GV_OK) return s;
  return guarded([&] {
    *out_paths = copy_string(joined(gpuval::cmd_build_golden(config->doc, out_dir)));
  });
}

gv_status gv_run_campaign(const gv_config* config, const char* out_dir,
                          char** out_paths) {
  if (gv_status s = required(config != nullptr, "config"); s != GV_OK) return s;
  if (gv_status s = required(out_dir != nullptr, "out_dir"); s != GV_OK) return s;
  if (gv_status s = required(out_paths != nullptr, "out"); s != GV_OK) return s;
  return guarded([&] {
    *out_paths = copy_string(joined(gpuval::cmd_campaign(config->doc, out_dir)));
  });
}

gv_status gv_run_noise_study(const gv_config* config, const char* out_dir,
                             char** out_paths) {
  if (gv_status s = required(config != nullptr, "config"); s != GV_OK) return s;
  if (gv_status s = required(out_dir != nullptr, "out_dir"); s != GV_OK) return s;
  if (gv_status s = required(out_paths != nullptr, "out"); s != GV_OK) return s;
  return guarded([&] {
    *out_paths = copy_string(joined(gpuval::cmd_noise_study(config->doc, out_dir)));
  });
}

gv_status gv_run_hwsim(const gv_config* config, const char* out_dir,
                       char** out_paths) {
  if (gv_status s = required(config != nullptr, "config"); s != GV_OK) return s;
  if (gv_status s = required(out_dir != nullptr, "out_dir"); s != GV_OK) return s;
  if (gv_status s = required(out_paths != nullptr, "out"); s != GV_OK) return s;
  return guarded([&] {
    *out_paths = copy_string(joined(gpuval::cmd_hwsim(config->doc, out_dir)));
  });
}

gv_status gv_validate_files(const char* golden_path, const char* trace_path,
                            char** out_json) {
  if (gv_status s = required(golden_path != nullptr, "golden_path"); s != GV_OK) {
    return s;
  }
  if (gv_status s = required(trace_path != nullptr, "trace_path"); s != GV_OK) {
    return s;
  }
  if (gv_status s = required(out_json != nullptr, "out"); s != GV_OK) return s;
  return guarded([&] {
    *out_json = copy_string(gpuval::cmd_validate(golden_path, trace_path));
  });
}

gv_status gv_ingest_csv(const gv_config* config, const char* csv_path,
                        const char* out_path) {
  if (gv_status s = required(config != nullptr, "config"); s != GV_OK) return s;
  if (gv_status s = required(csv_path != nullptr, "csv_path"); s != GV_OK) return s;
  if (gv_status s = required(out_path != nullptr, "out_path"); s != GV_OK) return s;
  return guarded([&] { gpuval::cmd_ingest(config->doc, csv_path, out_path); });
}

}  // extern "C"
