// Command-line front end. Everything goes through the C API on purpose: the
// binary is a second client of the exact surface other tools would embed.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gpuval.h"

namespace {

int exit_code_for(gv_status status) {
  if (status == GV_OK) return 0;
  // I/O problems (unwritable output directory, missing input) exit 2 so
  // scripts can tell environment trouble from validation trouble.
  return status == GV_ERR_IO ? 2 : 1;
}

int fail(gv_status status) {
  std::fprintf(stderr, "gpuval: %s\n", gv_last_error());
  return exit_code_for(status);
}

struct ConfigHandle {
  gv_config* ptr = nullptr;
  ConfigHandle() = default;
  ConfigHandle(const ConfigHandle&) = delete;
  ConfigHandle& operator=(const ConfigHandle&) = delete;
  ~ConfigHandle() { gv_config_free(ptr); }
};

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::string preset;
};

void add_common(CLI::App* cmd, CommonOptions& options, bool with_out = true) {
  cmd->add_option("-c,--config", options.config_path,
                  "JSON config file merged over the defaults");
  cmd->add_option("-s,--set", options.sets,
                  "override, dotted.path=value (repeatable)");
  cmd->add_option("-p,--preset", options.preset, "workload preset name");
  if (with_out) {
    cmd->add_option("-o,--out", options.out_dir,
                    "output directory (default $GPUVAL_OUTPUT_DIR or .)");
  }
}

std::string resolved_out_dir(const std::string& out_dir) {
  if (!out_dir.empty()) return out_dir;
  if (const char* env = std::getenv("GPUVAL_OUTPUT_DIR"); env != nullptr && *env) {
    return env;
  }
  return ".";
}

gv_status make_config(const CommonOptions& options, ConfigHandle& config) {
  gv_status status = options.config_path.empty()
                         ? gv_config_create(&config.ptr)
                         : gv_config_load(options.config_path.c_str(), &config.ptr);
  if (status != GV_OK) return status;
  // -p first, so an explicit -s preset=... still wins
  if (!options.preset.empty()) {
    status = gv_config_set(config.ptr, ("preset=" + options.preset).c_str());
    if (status != GV_OK) return status;
  }
  for (const auto& assignment : options.sets) {
    status = gv_config_set(config.ptr, assignment.c_str());
    if (status != GV_OK) return status;
  }
  return GV_OK;
}

using Runner = gv_status (*)(const gv_config*, const char*, char**);

int run_driver(const CommonOptions& options, Runner runner) {
  ConfigHandle config;
  if (gv_status status = make_config(options, config); status != GV_OK) {
    return fail(status);
  }
  char* paths = nullptr;
  const gv_status status =
      runner(config.ptr, resolved_out_dir(options.out_dir).c_str(), &paths);
  if (status != GV_OK) return fail(status);
  std::printf("%s\n", paths);
  gv_string_free(paths);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic GPU counter traces, attack campaigns and golden-model validation"};
  app.require_subcommand(1);

  CommonOptions build_options;
  CLI::App* build = app.add_subcommand("build-golden",
                                       "simulate clean traces and store their model");
  add_common(build, build_options);

  CommonOptions campaign_options;
  std::string campaign_attack;
  CLI::App* campaign = app.add_subcommand("campaign",
                                          "normal + attacked traces scored as TPR/FPR");
  add_common(campaign, campaign_options);
  campaign->add_option("-a,--attack", campaign_attack,
                       "buffer-overflow, kernel-skip, rowhammer or slowdown");

  CommonOptions noise_options;
  CLI::App* noise = app.add_subcommand("noise-study",
                                       "shape similarity under concurrent tenants");
  add_common(noise, noise_options);

  CommonOptions hw_options;
  CLI::App* hw = app.add_subcommand("hwsim",
                                    "cycle-level validator: overhead sweep and trials");
  add_common(hw, hw_options);

  CommonOptions config_options;
  CLI::App* show = app.add_subcommand("config", "print the effective run config");
  add_common(show, config_options, false);

  std::string golden_path;
  std::string trace_path;
  CLI::App* validate = app.add_subcommand("validate", "check one trace against a model");
  validate->add_option("-g,--golden", golden_path, "golden model JSON")->required();
  validate->add_option("-t,--trace", trace_path, "trace file")->required();

  CommonOptions ingest_options;
  std::string csv_path;
  std::string ingest_out;
  CLI::App* ingest = app.add_subcommand("ingest", "profiler CSV export to trace file");
  add_common(ingest, ingest_options, false);
  ingest->add_option("--csv", csv_path, "profiler CSV export")->required();
  ingest->add_option("-o,--out", ingest_out, "trace file to write")->required();

  CLI11_PARSE(app, argc, argv);

  if (build->parsed()) return run_driver(build_options, gv_run_build_golden);
  if (campaign->parsed()) {
    if (!campaign_attack.empty()) {
      campaign_options.sets.push_back("campaign.attack=" + campaign_attack);
    }
    return run_driver(campaign_options, gv_run_campaign);
  }
  if (noise->parsed()) return run_driver(noise_options, gv_run_noise_study);
  if (hw->parsed()) return run_driver(hw_options, gv_run_hwsim);
  if (show->parsed()) {
    ConfigHandle config;
    if (gv_status status = make_config(config_options, config); status != GV_OK) {
      return fail(status);
    }
    char* text = nullptr;
    if (gv_status status = gv_config_dump(config.ptr, &text); status != GV_OK) {
      return fail(status);
    }
    std::printf("%s", text);
    gv_string_free(text);
    return 0;
  }
  if (validate->parsed()) {
    char* verdict = nullptr;
    const gv_status status =
        gv_validate_files(golden_path.c_str(), trace_path.c_str(), &verdict);
    if (status != GV_OK) return fail(status);
    std::printf("%s", verdict);
    gv_string_free(verdict);
    return 0;
  }
  if (ingest->parsed()) {
    ConfigHandle config;
    if (gv_status status = make_config(ingest_options, config); status != GV_OK) {
      return fail(status);
    }
    const gv_status status =
        gv_ingest_csv(config.ptr, csv_path.c_str(), ingest_out.c_str());
    if (status != GV_OK) return fail(status);
    std::printf("%s\n", ingest_out.c_str());
    return 0;
  }
  return 1;
}
