#include "runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "campaign.hpp"
#include "errors.hpp"
#include "trace_io.hpp"

namespace gpuval {

namespace {

using nlohmann::json;

json json_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(errc::io_failure, "cannot open config '" + path + "'");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) raise(errc::parse_error, "config '" + path + "' is not JSON");
  return doc;
}

}  // namespace

// "a.b.c=value" with the value parsed as JSON when possible.
void apply_config_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    raise(errc::invalid_argument, "override '" + assignment + "' is not path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &config;
  std::size_t begin = 0;
  for (;;) {
    const auto dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty()) raise(errc::invalid_argument, "override path '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

namespace {

std::string ensure_out_dir(const std::string& out_dir) {
  const std::string dir = out_dir.empty() ? "." : out_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) raise(errc::io_failure, "cannot create output directory '" + dir + "'");
  return dir;
}

std::string write_text_file(const std::string& dir, const std::string& name,
                            const std::string& content) {
  const auto path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::io_failure, "cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) raise(errc::io_failure, "short write to '" + path + "'");
  return path;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

double bandwidth_from(double value) {
  // Stored configs keep finite numbers; anything at or below zero stands for
  // an uncontended (infinite) link.
  return value <= 0.0 ? std::numeric_limits<double>::infinity() : value;
}

Preset preset_from(const json& config) {
  return make_preset(config.at("preset").get<std::string>());
}

SwCampaignOptions campaign_options_from(const json& config) {
  SwCampaignOptions options;
  options.seed = config.at("seed").get<std::uint64_t>();
  options.threads = config.at("threads").get<unsigned>();
  const json& c = config.at("campaign");
  options.attack = attack_kind_from_name(c.at("attack").get<std::string>());
  options.golden_traces = c.at("golden_traces").get<std::size_t>();
  options.normal_traces = c.at("normal_traces").get<std::size_t>();
  options.attack_traces = c.at("attack_traces").get<std::size_t>();
  if (!c.at("magnitude").is_null()) options.magnitude = c.at("magnitude").get<double>();
  options.payload_fraction = c.at("payload_fraction").get<double>();
  options.skip_target = c.at("skip_target").get<std::size_t>();
  options.keep_every = c.at("keep_every").get<std::size_t>();
  return options;
}

NoiseStudyOptions noise_options_from(const json& config) {
  NoiseStudyOptions options;
  options.seed = config.at("seed").get<std::uint64_t>();
  options.threads = config.at("threads").get<unsigned>();
  const json& n = config.at("noise");
  options.golden_traces = n.at("golden_traces").get<std::size_t>();
  options.traces_per_cell = n.at("traces_per_cell").get<std::size_t>();
  options.max_concurrency = n.at("max_concurrency").get<std::size_t>();
  options.occupancy = n.at("occupancy").get<double>();
  options.dispersion_scale = n.at("dispersion_scale").get<double>();
  return options;
}

HwStudyOptions hw_options_from(const json& config) {
  HwStudyOptions options;
  options.seed = config.at("seed").get<std::uint64_t>();
  const json& h = config.at("hw");
  options.config.num_sms = h.at("num_sms").get<std::uint32_t>();
  options.config.window_cycles = h.at("window_cycles").get<std::uint32_t>();
  options.config.link_bandwidth = bandwidth_from(h.at("link_bandwidth").get<double>());
  options.config.link_latency = h.at("link_latency").get<std::uint32_t>();
  options.config.background_traffic = h.at("background_traffic").get<double>();
  options.config.cache_entries = h.at("cache_entries").get<std::size_t>();
  options.config.fetch_entries = h.at("fetch_entries").get<std::size_t>();
  options.config.tau_scale = h.at("tau_scale").get<double>();
  options.config.noise_rel = h.at("noise_rel").get<double>();
  options.config.dtw_scale = h.at("dtw_scale").get<double>();
  options.golden_seeds = h.at("golden_seeds").get<std::size_t>();
  options.attack_trials = h.at("attack_trials").get<std::size_t>();
  options.attack_magnitude = h.at("attack_magnitude").get<double>();
  options.payload_fraction = h.at("payload_fraction").get<double>();
  options.bandwidth_sweep.clear();
  for (const auto& value : h.at("bandwidth_sweep")) {
    options.bandwidth_sweep.push_back(bandwidth_from(value.get<double>()));
  }
  return options;
}

json decision_counts(const std::vector<TraceOutcome>& outcomes, bool attack) {
  std::size_t benign = 0;
  std::size_t compromised = 0;
  std::size_t incomplete = 0;
  for (const auto& outcome : outcomes) {
    if (outcome.attack != attack) continue;
    switch (outcome.verdict.decision) {
      case Decision::benign: ++benign; break;
      case Decision::compromised: ++compromised; break;
      case Decision::incomplete: ++incomplete; break;
    }
  }
  return json{{"benign", benign}, {"compromised", compromised},
              {"incomplete", incomplete}};
}

}  // namespace

json default_run_config() {
  json config;
  config["preset"] = "vecadd";
  config["seed"] = 1;
  config["threads"] = 0;
  config["group"] = "standard";
  config["golden"] = {{"traces", 25}};
  config["campaign"] = {{"attack", "buffer-overflow"}, {"golden_traces", 25},
                        {"normal_traces", 100},        {"attack_traces", 100},
                        {"magnitude", nullptr},        {"payload_fraction", 0.5},
                        {"skip_target", 1},            {"keep_every", 1}};
  config["noise"] = {{"golden_traces", 20},
                     {"traces_per_cell", 20},
                     {"max_concurrency", 3},
                     {"occupancy", 0.4},
                     {"dispersion_scale", 1.0}};
  config["hw"] = {{"num_sms", 15},
                  {"window_cycles", 2048},
                  {"link_bandwidth", 0.04},
                  {"link_latency", 20},
                  {"background_traffic", 0.01},
                  {"cache_entries", 8},
                  {"fetch_entries", 4},
                  {"tau_scale", 6.0},
                  {"noise_rel", 0.02},
                  {"dtw_scale", 14.0},
                  {"golden_seeds", 25},
                  {"attack_trials", 20},
                  {"attack_magnitude", 4.0},
                  {"payload_fraction", 1.0},
                  // 0 stands for an uncontended link; stored configs stay
                  // finite so they survive JSON round trips.
                  {"bandwidth_sweep", {0.008, 0.016, 0.032, 0.064, 0}}};
  return config;
}

json load_run_config(const std::string& config_path,
                     const std::vector<std::string>& overrides) {
  json config = default_run_config();
  if (!config_path.empty()) config.merge_patch(json_from_file(config_path));
  for (const auto& assignment : overrides) apply_config_override(config, assignment);
  return config;
}

std::vector<std::string> cmd_build_golden(const json& config,
                                          const std::string& out_dir) {
  const std::string dir = ensure_out_dir(out_dir);
  const Preset preset = preset_from(config);
  const EventGroup& group =
      preset_group(preset, config.at("group").get<std::string>());
  const auto seed = config.at("seed").get<std::uint64_t>();
  const auto threads = config.at("threads").get<unsigned>();
  const auto count = config.at("golden").at("traces").get<std::size_t>();
  if (count == 0) raise(errc::invalid_argument, "golden.traces must be positive");

  std::vector<Trace> traces(count);
  parallel_for(count, threads, [&](std::size_t i) {
    traces[i] = simulate(preset.program, group, preset.device, preset.marker,
                         NoiseSpec{}, seed + i);
  });
  const GoldenModel model =
      build_golden(traces, preset.marker, preset.policy, preset.configs);
  std::ostringstream out;
  write_golden(model, out);
  return {write_text_file(dir, "golden.json", out.str())};
}

std::vector<std::string> cmd_campaign(const json& config, const std::string& out_dir) {
  const std::string dir = ensure_out_dir(out_dir);
  const Preset preset = preset_from(config);
  const SwCampaignOptions options = campaign_options_from(config);
  const SwCampaignResult result = run_sw_campaign(preset, options);

  json report;
  report["preset"] = result.preset;
  report["attack"] = result.attack;
  report["options"] = config.at("campaign");
  report["options"]["seed"] = options.seed;
  json results;
  results["normal_count"] = result.report.normal_count;
  results["attack_count"] = result.report.attack_count;
  if (result.report.tpr) {
    results["tpr"] = *result.report.tpr;
  } else {
    results["tpr"] = nullptr;
  }
  results["fpr"] = result.report.fpr;
  results["normal_decisions"] = decision_counts(result.report.outcomes, false);
  results["attack_decisions"] = decision_counts(result.report.outcomes, true);
  report["results"] = std::move(results);
  report["roc"] = json::array();
  for (const auto& point : result.roc) {
    report["roc"].push_back(
        json{{"tau", point.tau}, {"tpr", point.tpr}, {"fpr", point.fpr}});
  }

  std::string verdicts =
      "trace_id,attack,decision,flagged_kernel,divergence_ordinal,"
      "max_run,min_coefficient,diagnostic\n";
  for (const auto& outcome : result.report.outcomes) {
    verdicts += outcome.trace_id;
    verdicts += ',';
    verdicts += outcome.attack ? '1' : '0';
    verdicts += ',';
    verdicts += decision_name(outcome.verdict.decision);
    verdicts += ',';
    if (outcome.verdict.flagged_kernel) {
      verdicts += std::to_string(*outcome.verdict.flagged_kernel);
    }
    verdicts += ',';
    if (outcome.verdict.divergence_ordinal) {
      verdicts += std::to_string(*outcome.verdict.divergence_ordinal);
    }
    verdicts += ',';
    verdicts += std::to_string(outcome.verdict.max_consecutive_rejections);
    verdicts += ',';
    if (outcome.min_coefficient) verdicts += format_double(*outcome.min_coefficient);
    verdicts += ',';
    verdicts += csv_escape(outcome.verdict.diagnostic);
    verdicts += '\n';
  }

  std::string plot = "tau,tpr,fpr\n";
  for (const auto& point : result.roc) {
    plot += format_double(point.tau);
    plot += ',';
    plot += format_double(point.tpr);
    plot += ',';
    plot += format_double(point.fpr);
    plot += '\n';
  }

  return {write_text_file(dir, "report.json", report.dump(2) + "\n"),
          write_text_file(dir, "verdicts.csv", verdicts),
          write_text_file(dir, "plotdata.csv", plot)};
}

std::vector<std::string> cmd_noise_study(const json& config,
                                         const std::string& out_dir) {
  const std::string dir = ensure_out_dir(out_dir);
  const Preset preset = preset_from(config);
  const NoiseStudyResult result = run_noise_study(preset, noise_options_from(config));

  std::string csv = "source,concurrency,traces,mean_similarity,min_similarity,max_similarity\n";
  for (const auto& cell : result.cells) {
    csv += cell.source;
    csv += ',';
    csv += std::to_string(cell.concurrency);
    csv += ',';
    csv += std::to_string(cell.traces);
    csv += ',';
    csv += format_double(cell.mean_similarity);
    csv += ',';
    csv += format_double(cell.min_similarity);
    csv += ',';
    csv += format_double(cell.max_similarity);
    csv += '\n';
  }
  return {write_text_file(dir, "noise_study.csv", csv)};
}

std::vector<std::string> cmd_hwsim(const json& config, const std::string& out_dir) {
  const std::string dir = ensure_out_dir(out_dir);
  const Preset preset = preset_from(config);
  const HwStudyResult result = run_hw_study(preset, hw_options_from(config));

  std::string csv = "config,cycles_on,cycles_off,overhead,verdict,dtw\n";
  for (const auto& point : result.sweep) {
    csv += "bw=" + format_double(point.bandwidth);
    csv += ',';
    csv += std::to_string(point.cycles_on);
    csv += ',';
    csv += std::to_string(point.cycles_off);
    csv += ',';
    csv += format_double(point.overhead);
    csv += ',';
    csv += point.flagged ? "flagged" : "clean";
    csv += ',';
    csv += format_double(point.min_dtw);
    csv += '\n';
  }
  for (std::size_t t = 0; t < result.attacks.size(); ++t) {
    const auto& trial = result.attacks[t];
    csv += "attack-" + std::to_string(t);
    csv += ',';
    csv += std::to_string(trial.cycles_on);
    csv += ',';
    csv += std::to_string(trial.cycles_off);
    csv += ',';  // overhead is a clean-run notion; left empty here
    csv += ',';
    if (trial.flagged) {
      csv += "flagged@k" + std::to_string(trial.kernel) + "w" +
             std::to_string(trial.window);
    } else {
      csv += "missed";
    }
    csv += ',';
    csv += format_double(trial.min_dtw);
    csv += '\n';
  }
  return {write_text_file(dir, "hwsim.csv", csv)};
}

std::string cmd_validate(const std::string& golden_path, const std::string& trace_path) {
  const GoldenModel model = read_golden(golden_path);
  const Trace trace = read_trace(trace_path);
  const Verdict verdict = validate_trace(trace, model);

  json doc;
  doc["decision"] = decision_name(verdict.decision);
  doc["max_consecutive_rejections"] = verdict.max_consecutive_rejections;
  if (verdict.flagged_kernel) {
    doc["flagged_kernel"] = *verdict.flagged_kernel;
  } else {
    doc["flagged_kernel"] = nullptr;
  }
  if (verdict.divergence_ordinal) {
    doc["divergence_ordinal"] = *verdict.divergence_ordinal;
  } else {
    doc["divergence_ordinal"] = nullptr;
  }
  doc["diagnostic"] = verdict.diagnostic;
  doc["segments"] = json::array();
  for (const auto& check : verdict.per_segment) {
    doc["segments"].push_back(json{{"kernel_ordinal", check.kernel_ordinal},
                                   {"config_id", check.config_id},
                                   {"coefficient", check.coefficient},
                                   {"matched", check.matched}});
  }
  return doc.dump(2) + "\n";
}

std::string cmd_ingest(const json& config, const std::string& csv_path,
                       const std::string& out_path) {
  const Preset preset = preset_from(config);
  const EventGroup& group =
      preset_group(preset, config.at("group").get<std::string>());
  const Trace trace = ingest_profiler_csv(csv_path, group, preset.device);
  write_trace(trace, out_path);
  return out_path;
}

}  // namespace gpuval
