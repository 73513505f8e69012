#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli_support.hpp"
#include "dvinfer.hpp"

using namespace dvinfer;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kVerifyFailed = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model either loaded from a DVW1 file or generated from dimensions.
struct ModelSource {
  std::string path;
  std::uint32_t layers = 40, residual = 64, skip = 256, levels = 256, cycle = 10;
  std::uint64_t seed = 0;

  void add(CLI::App* cmd, const ModelConfig& defaults) {
    layers = defaults.num_layers;
    residual = defaults.residual_channels;
    skip = defaults.skip_channels;
    levels = defaults.audio_levels;
    cycle = defaults.dilation_cycle;
    cmd->add_option("--model", path, "DVW1 weight file (otherwise a random model is generated)");
    cmd->add_option("--layers", layers, "layers when generating")->capture_default_str();
    cmd->add_option("--residual", residual, "residual channels when generating")->capture_default_str();
    cmd->add_option("--skip", skip, "skip channels when generating")->capture_default_str();
    cmd->add_option("--levels", levels, "audio levels when generating")->capture_default_str();
    cmd->add_option("--cycle", cycle, "dilation cycle when generating")->capture_default_str();
    cmd->add_option("--model-seed", seed, "weight seed when generating")->capture_default_str();
  }

  [[nodiscard]] ModelConfig config() const {
    ModelConfig c;
    c.num_layers = layers;
    c.residual_channels = residual;
    c.skip_channels = skip;
    c.audio_levels = levels;
    c.dilation_cycle = cycle;
    return c;
  }

  [[nodiscard]] LoadedModel load(bool need_int16) const {
    LoadedModel m;
    if (!path.empty()) {
      m = load_model(path);
    } else {
      m.config = config();
      m.config.validate();
      m.weights = generate_random_model(m.config, seed);
    }
    if (need_int16 && !m.quantized) m.quantized = quantize_weights(m.weights);
    return m;
  }
};

PrecisionMode parse_precision(const std::string& s) {
  if (s == "float32") return PrecisionMode::Float32;
  if (s == "int16") return PrecisionMode::Int16;
  throw UsageError("--precision must be float32 or int16");
}

ApproxPolicy parse_approx(const std::string& s) {
  if (s == "exact") return ApproxPolicy::Exact;
  if (s == "approx") return ApproxPolicy::Approximate;
  throw UsageError("--approx must be exact or approx");
}

ThreadPlan make_plan(std::size_t main, std::size_t aux, bool pin) {
  ThreadPlan p;
  p.main_workers = main;
  p.aux_workers = aux;
  if (pin)
    for (std::size_t i = 0; i < main + aux; ++i) p.pin_cores.push_back(static_cast<int>(i));
  return p;
}

ThreadPlan parse_plan(const std::string& text) {
  const auto plus = text.find('+');
  if (plus == std::string::npos) throw UsageError("thread plan '" + text + "' must look like MAIN+AUX");
  try {
    return make_plan(std::stoul(text.substr(0, plus)), std::stoul(text.substr(plus + 1)), false);
  } catch (const std::logic_error&) {
    throw UsageError("thread plan '" + text + "' must look like MAIN+AUX");
  }
}

json config_json(const ModelConfig& c) {
  return {{"layers", c.num_layers},         {"residual", c.residual_channels}, {"skip", c.skip_channels},
          {"levels", c.audio_levels},       {"cycle", c.dilation_cycle},       {"audio_rate", c.audio_rate},
          {"conditioning_rate", c.conditioning_rate}};
}

void write_json(const std::string& path, const json& record) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw dvcli::InputError("cannot open " + path + " for writing");
  out << record.dump(2) << "\n";
}

std::string model_label(const ModelConfig& c) {
  return "l=" + std::to_string(c.num_layers) + " r=" + std::to_string(c.residual_channels) +
         " s=" + std::to_string(c.skip_channels) + " a=" + std::to_string(c.audio_levels);
}

// ---------------------------------------------------------------- gen-model

struct GenModelArgs {
  std::uint32_t layers = 40, residual = 64, skip = 256, levels = 256, cycle = 10, hidden = 128;
  std::uint64_t seed = 0;
  std::string out, json_path;
  bool int16 = false;
};

int cmd_gen_model(const GenModelArgs& a) {
  ModelConfig c;
  c.num_layers = a.layers;
  c.residual_channels = a.residual;
  c.skip_channels = a.skip;
  c.audio_levels = a.levels;
  c.dilation_cycle = a.cycle;
  c.conditioner_hidden = a.hidden;
  c.validate();
  const WeightSet w = generate_random_model(c, a.seed);
  std::optional<QuantizedWeightSet> q;
  if (a.int16) q = quantize_weights(w);
  save_model(w, c, a.out, q ? &*q : nullptr);
  const std::size_t ar = autoregressive_param_count(c), total = total_param_count(c);
  std::printf("wrote %s\n", a.out.c_str());
  std::printf("  %-28s %s\n", "model", model_label(c).c_str());
  std::printf("  %-28s %zu\n", "autoregressive params", ar);
  std::printf("  %-28s %zu\n", "total params (+conditioner)", total);
  std::printf("  %-28s %.0f\n", "float32 bytes per sample", model_bytes(c));
  std::printf("  %-28s %zu ms at 48 kHz\n", "receptive field",
              static_cast<std::size_t>(receptive_field_seconds(c, 48000.0) * 1000.0));
  write_json(a.json_path, {{"command", "gen-model"},
                           {"config", config_json(c)},
                           {"autoregressive_params", ar},
                           {"total_params", total},
                           {"model_bytes", model_bytes(c)},
                           {"int16", a.int16}});
  return kOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string model, phonemes, engine = "opt", precision = "float32", approx = "approx", sampling = "direct";
  std::string wav, mulaw, json_path;
  std::size_t unconditional = 0, threads_main = 1, threads_aux = 1;
  std::uint64_t seed = 0;
  bool pin = false;
};

int cmd_synth(const SynthArgs& a) {
  if (a.phonemes.empty() == (a.unconditional == 0))
    throw UsageError("give exactly one of --phonemes FILE or --unconditional N");
  const PrecisionMode precision = parse_precision(a.precision);
  const ApproxPolicy approx = parse_approx(a.approx);
  const SamplingPolicy sampling = SamplingPolicy::parse(a.sampling);
  if (a.engine != "ref" && a.engine != "opt") throw UsageError("--engine must be ref or opt");
  if (a.engine == "ref" && precision == PrecisionMode::Int16)
    throw UsageError("the reference engine runs in double precision; int16 needs --engine opt");

  LoadedModel m = load_model(a.model);
  if (precision == PrecisionMode::Int16 && !m.quantized) m.quantized = quantize_weights(m.weights);
  std::vector<std::string> warnings;
  ConditioningSignal cond;
  if (!a.phonemes.empty()) {
    const auto tokens = dvcli::parse_phonemes(dvcli::read_lines(a.phonemes));
    cond = build_conditioning(tokens, m.weights, m.config, F0Range{}, &warnings);
  } else {
    cond = ConditioningSignal::unconditional(a.unconditional, m.config);
  }
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const std::size_t n = cond.length();

  std::vector<int> codes;
  std::optional<TimingReport> timing;
  const auto t0 = std::chrono::steady_clock::now();
  if (a.engine == "ref") {
    codes = synthesize<double>(m.weights, m.config, cond, n, approx, sampling, a.seed);
  } else {
    PipelineResult r = run_pipeline(m.weights, m.quantized ? &*m.quantized : nullptr, m.config, cond, n,
                                    make_plan(a.threads_main, a.threads_aux, a.pin), precision, approx, sampling,
                                    a.seed);
    codes = std::move(r.codes);
    timing = r.timing;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto levels = static_cast<int>(m.config.audio_levels);
  dvcli::write_file(a.wav, dvcli::wav_bytes(codes, levels, m.config.audio_rate));
  const std::string mulaw_path = a.mulaw.empty() ? a.wav + ".u8" : a.mulaw;
  std::vector<char> raw(codes.begin(), codes.end());
  dvcli::write_file(mulaw_path, raw);

  const double audio_seconds = static_cast<double>(n) / m.config.audio_rate;
  std::printf("synthesized %zu samples (%.4f s of audio) with the %s engine\n", n, audio_seconds,
              a.engine == "ref" ? "reference" : "optimized");
  std::printf("  wav   %s\n  mulaw %s\n", a.wav.c_str(), mulaw_path.c_str());
  if (timing) std::printf("  speed-up over real-time %.3f\n", timing->speedup_over_realtime);
  write_json(a.json_path, {{"command", "synth"},
                           {"config", config_json(m.config)},
                           {"engine", a.engine},
                           {"precision", to_string(precision)},
                           {"approx", to_string(approx)},
                           {"sampling", sampling.to_string()},
                           {"seed", a.seed},
                           {"samples", n},
                           {"wall_seconds", seconds},
                           {"wav", a.wav},
                           {"mulaw", mulaw_path},
                           {"warnings", warnings}});
  return kOk;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  ModelSource source;
  std::size_t steps = 512;
  double tolerance = 1e-5;
  double approx_tolerance = 1e-2;
  double int16_tolerance = 3e-2;
  std::vector<std::string> plans = {"1+1", "2+2", "4+2"};
  std::uint64_t seed = 1;
  bool corrupt = false;
  std::string json_path;
};

int cmd_verify(const VerifyArgs& a) {
  if (a.steps == 0) throw UsageError("--steps must be positive");
  const LoadedModel m = a.source.load(true);
  const ModelConfig& c = m.config;
  std::vector<ThreadPlan> plans;
  for (const auto& p : a.plans) plans.push_back(parse_plan(p));
  for (const auto& p : plans) validate_plan(p, c);

  WeightSet opt_weights = m.weights;
  QuantizedWeightSet opt_quantized = *m.quantized;
  if (a.corrupt) {
    auto& gate = opt_weights.layers.front().w_cur.data;
    for (std::size_t i = 0; i < gate.size(); ++i) gate[i] += (i % 2 == 0) ? 0.25f : -0.25f;
    opt_quantized = quantize_weights(opt_weights);
  }

  // Ground truth: a sequence sampled from the reference engine itself.
  const ConditioningSignal cond = ConditioningSignal::unconditional(a.steps, c);
  const std::vector<int> truth =
      synthesize<double>(m.weights, c, cond, a.steps, ApproxPolicy::Exact, SamplingPolicy::direct(), a.seed);
  const ProbTrace ref_exact = teacher_forced_eval<double>(m.weights, c, truth, cond, ApproxPolicy::Exact);
  const ProbTrace ref_approx = teacher_forced_eval<double>(m.weights, c, truth, cond, ApproxPolicy::Approximate);

  struct Row {
    std::string pair;
    double diff;
    double tolerance;
    bool ok;
  };
  std::vector<Row> rows;
  auto add = [&](std::string pair, double diff, double tol) { rows.push_back({std::move(pair), diff, tol, diff <= tol}); };
  add("ref/exact vs ref/approx", max_abs_diff(ref_exact, ref_approx), a.approx_tolerance);

  struct Variant {
    PrecisionMode precision;
    ApproxPolicy approx;
    double tol;
  };
  const Variant variants[] = {{PrecisionMode::Float32, ApproxPolicy::Exact, a.tolerance},
                              {PrecisionMode::Float32, ApproxPolicy::Approximate, a.approx_tolerance},
                              {PrecisionMode::Int16, ApproxPolicy::Approximate, a.int16_tolerance}};
  bool deterministic = true;
  for (const auto& plan : plans) {
    for (const auto& v : variants) {
      PipelineEngine engine(opt_weights, c, plan, v.precision, v.approx, &opt_quantized);
      ProbTrace trace(a.steps, c.audio_levels);
      PipelineOptions opts;
      opts.teacher_codes = truth;
      opts.record = &trace;
      const auto first = engine.run(cond, a.steps, SamplingPolicy::direct(), a.seed, opts);
      const auto second = engine.run(cond, a.steps, SamplingPolicy::direct(), a.seed, opts);
      deterministic = deterministic && first.codes == second.codes;
      add("opt/" + std::string(to_string(v.precision)) + "/" + to_string(v.approx) + " plan " + plan.to_string() +
              " vs ref/exact",
          max_abs_diff(trace, ref_exact), v.tol);
    }
  }

  bool all_ok = deterministic;
  std::printf("teacher-forced comparison, %zu steps, model %s\n", a.steps, model_label(c).c_str());
  std::printf("  %-48s %12s %10s  %s\n", "pair", "max |dp|", "tolerance", "result");
  json records = json::array();
  for (const auto& r : rows) {
    std::printf("  %-48s %12.3e %10.1e  %s\n", r.pair.c_str(), r.diff, r.tolerance, r.ok ? "pass" : "FAIL");
    all_ok = all_ok && r.ok;
    records.push_back({{"pair", r.pair}, {"max_abs_diff", r.diff}, {"tolerance", r.tolerance}, {"pass", r.ok}});
  }
  std::printf("  %-48s %23s  %s\n", "repeated runs give identical codes", "", deterministic ? "pass" : "FAIL");
  std::printf("%s\n", all_ok ? "verify: pass" : "verify: FAIL");
  write_json(a.json_path, {{"command", "verify"},
                           {"config", config_json(c)},
                           {"steps", a.steps},
                           {"pairs", records},
                           {"deterministic", deterministic},
                           {"pass", all_ok}});
  return all_ok ? kOk : kVerifyFailed;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  ModelSource source;
  std::string engine = "opt", precision = "float32", approx = "approx", json_path;
  std::size_t threads_main = 1, threads_aux = 1, runs = 5;
  double seconds = 1.0;
  bool pin = false;
};

struct BenchRow {
  std::string engine;
  ThreadPlan plan;
  PrecisionMode precision;
  ApproxPolicy approx;
  std::size_t samples;
  std::uint64_t wall_ns;
  double samples_per_sec;
  double speedup;
  bool pinned;
};

template <class Fn>
std::uint64_t median_ns(std::size_t runs, Fn&& once) {
  once();  // warm-up
  std::vector<std::uint64_t> t;
  for (std::size_t i = 0; i < runs; ++i) t.push_back(once());
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

BenchRow bench_one(const std::string& engine, const LoadedModel& m, const BenchArgs& a, std::size_t n) {
  const ModelConfig& c = m.config;
  BenchRow row{engine, make_plan(a.threads_main, a.threads_aux, a.pin), parse_precision(a.precision),
               parse_approx(a.approx), n, 0, 0.0, 0.0, false};
  const ConditioningSignal cond = ConditioningSignal::unconditional(n, c);
  if (engine == "ref") {
    if (row.precision == PrecisionMode::Int16) throw UsageError("the reference engine has no int16 mode");
    row.wall_ns = median_ns(a.runs, [&] {
      const auto t0 = std::chrono::steady_clock::now();
      synthesize<double>(m.weights, c, cond, n, row.approx, SamplingPolicy::direct(), 0);
      return static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count());
    });
  } else {
    PipelineEngine eng(m.weights, c, row.plan, row.precision, row.approx, m.quantized ? &*m.quantized : nullptr);
    for (const auto& w : eng.plan().warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    row.wall_ns = median_ns(a.runs, [&] {
      const PipelineResult r = eng.run(cond, n, SamplingPolicy::direct(), 0);
      row.pinned = r.timing.pinned;
      return r.timing.wall_ns;
    });
  }
  const double seconds = static_cast<double>(std::max<std::uint64_t>(row.wall_ns, 1)) * 1e-9;
  row.samples_per_sec = static_cast<double>(n) / seconds;
  row.speedup = (static_cast<double>(n) / c.audio_rate) / seconds;
  return row;
}

int cmd_bench(const BenchArgs& a) {
  if (a.engine != "ref" && a.engine != "opt" && a.engine != "both") throw UsageError("--engine must be ref, opt or both");
  if (!(a.seconds > 0.0)) throw UsageError("--seconds must be positive");
  if (a.runs == 0) throw UsageError("--runs must be positive");
  const PrecisionMode precision = parse_precision(a.precision);
  const LoadedModel m = a.source.load(precision == PrecisionMode::Int16);
  const ModelConfig& c = m.config;
  validate_plan(make_plan(a.threads_main, a.threads_aux, a.pin), c, precision);
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(a.seconds * c.audio_rate));

  std::vector<BenchRow> rows;
  if (a.engine != "opt") rows.push_back(bench_one("ref", m, a, n));
  if (a.engine != "ref") rows.push_back(bench_one("opt", m, a, n));

  const std::string machine = dvcli::machine_descriptor();
  std::printf("%-26s | %-34s | %-9s | %-7s | %-6s | %12s | %s\n", "Model", "Platform", "Data type", "Threads",
              "Approx", "Samples/s", "Speed-up over real-time");
  json records = json::array();
  for (const auto& r : rows) {
    const std::string threads = r.engine == "ref" ? "1 (ref)" : r.plan.to_string();
    std::printf("%-26s | %-34.34s | %-9s | %-7s | %-6s | %12.0f | %.3f%s\n", model_label(c).c_str(), machine.c_str(),
                r.engine == "ref" ? "float64" : to_string(r.precision), threads.c_str(), to_string(r.approx),
                r.samples_per_sec, r.speedup, r.pinned ? " (pinned)" : "");
    records.push_back({{"engine", r.engine},
                       {"config", config_json(c)},
                       {"plan", r.engine == "ref" ? "1" : r.plan.to_string()},
                       {"precision", r.engine == "ref" ? "float64" : to_string(r.precision)},
                       {"approx", to_string(r.approx)},
                       {"samples", r.samples},
                       {"wall_ns", r.wall_ns},
                       {"samples_per_sec", r.samples_per_sec},
                       {"speedup_over_realtime", r.speedup},
                       {"pinned", r.pinned},
                       {"machine", machine}});
  }
  json record = {{"command", "bench"}, {"runs", a.runs}, {"results", records}};
  if (rows.size() == 2) {
    const double ratio = rows[1].samples_per_sec / rows[0].samples_per_sec;
    std::printf("optimized / reference throughput: %.2fx\n", ratio);
    record["throughput_ratio"] = ratio;
  }
  write_json(a.json_path, record);
  return kOk;
}

// ---------------------------------------------------------------- flops

struct FlopsArgs {
  ModelSource source;
  double fd = 10.0, fe = 10.0, machine_flops = 77e9, machine_bw = 140e9;
  std::string precision = "float32", json_path;
};

int cmd_flops(const FlopsArgs& a) {
  const PrecisionMode precision = parse_precision(a.precision);
  ModelConfig c;
  if (!a.source.path.empty()) {
    c = load_model(a.source.path).config;
  } else {
    c = a.source.config();
    c.validate();
  }
  const CostParams p{a.fd, a.fe};
  const PerfEstimate e = estimate(c, p, precision);
  const FeasibilityReport f = feasibility_report(c, p, MachineProfile{a.machine_flops, a.machine_bw}, precision);
  std::printf("model %s, %u Hz, f_d=%g f_e=%g, %s weights\n", model_label(c).c_str(), c.audio_rate, p.f_d, p.f_e,
              to_string(precision));
  std::printf("  %-30s %16.0f\n", "FLOPs per layer", e.flops_per_layer);
  std::printf("  %-30s %16.0f\n", "FLOPs per sample", e.flops_per_sample);
  std::printf("  %-30s %16.4e\n", "FLOPs per second", e.flops_per_second);
  std::printf("  %-30s %16zu\n", "parameters", e.param_count);
  std::printf("  %-30s %16.0f\n", "model bytes", e.model_bytes);
  std::printf("  %-30s %16.4e\n", "bandwidth (bytes/s)", e.bandwidth_bytes_per_sec);
  std::printf("  %-30s %16.3f\n", "time budget per sample (us)", e.time_budget_per_sample * 1e6);
  std::printf("  %-30s %16.3f\n", "time budget per layer (ns)", e.time_budget_per_layer * 1e9);
  std::printf("  %-30s %16.3f\n", "compute utilization", f.flops_fraction);
  std::printf("  %-30s %16.3f\n", "bandwidth utilization", f.bandwidth_fraction);
  std::printf("  %-30s %16s\n", "verdict", to_string(f.verdict));
  write_json(a.json_path, {{"command", "flops"},
                           {"config", config_json(c)},
                           {"f_d", p.f_d},
                           {"f_e", p.f_e},
                           {"flops_per_layer", e.flops_per_layer},
                           {"flops_per_sample", e.flops_per_sample},
                           {"flops_per_second", e.flops_per_second},
                           {"param_count", e.param_count},
                           {"model_bytes", e.model_bytes},
                           {"bandwidth_bytes_per_sec", e.bandwidth_bytes_per_sec},
                           {"flops_fraction", f.flops_fraction},
                           {"bandwidth_fraction", f.bandwidth_fraction},
                           {"verdict", to_string(f.verdict)}});
  return kOk;
}

// ---------------------------------------------------------------- loss

struct LossArgs {
  std::string pred, truth, json_path;
  double l1 = 1.0, l2 = 1.0, l3 = 1.0;
};

int cmd_loss(const LossArgs& a) {
  const auto pred = dvcli::parse_loss_rows(dvcli::read_lines(a.pred));
  const auto truth = dvcli::parse_loss_rows(dvcli::read_lines(a.truth));
  const auto preds = dvcli::as_predictions(pred);
  const auto targets = dvcli::as_targets(truth);
  const double loss = phoneme_joint_loss(preds, targets, LossWeights{a.l1, a.l2, a.l3});
  std::printf("%.10g\n", loss);
  write_json(a.json_path, {{"command", "loss"}, {"phonemes", preds.size()}, {"loss", loss}});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Autoregressive vocoder inference: model generation, synthesis, verification and benchmarks"};
  app.require_subcommand(1);

  GenModelArgs gen;
  auto* g = app.add_subcommand("gen-model", "write a random DVW1 model");
  g->add_option("--layers", gen.layers)->capture_default_str();
  g->add_option("--residual", gen.residual)->capture_default_str();
  g->add_option("--skip", gen.skip)->capture_default_str();
  g->add_option("--levels", gen.levels)->capture_default_str();
  g->add_option("--cycle", gen.cycle)->capture_default_str();
  g->add_option("--hidden", gen.hidden, "conditioner hidden units")->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--out", gen.out, "output file")->required();
  g->add_flag("--int16", gen.int16, "also store int16 weights");
  g->add_option("--json", gen.json_path, "write a JSON record here");

  SynthArgs syn;
  auto* s = app.add_subcommand("synth", "generate audio");
  s->add_option("--model", syn.model)->required();
  s->add_option("--phonemes", syn.phonemes, "lines of IDENT STRESS DURATION_MS VOICED F0_HZ");
  s->add_option("--unconditional", syn.unconditional, "samples of unconditional babble");
  s->add_option("--engine", syn.engine, "ref or opt")->capture_default_str();
  s->add_option("--precision", syn.precision, "float32 or int16")->capture_default_str();
  s->add_option("--approx", syn.approx, "exact or approx")->capture_default_str();
  s->add_option("--sampling", syn.sampling, "direct, mean, mode, temp:<t> or topk:<k>")->capture_default_str();
  s->add_option("--seed", syn.seed)->capture_default_str();
  s->add_option("--threads-main", syn.threads_main)->capture_default_str();
  s->add_option("--threads-aux", syn.threads_aux)->capture_default_str();
  s->add_flag("--pin", syn.pin, "pin workers to cores 0..N-1");
  s->add_option("--wav", syn.wav, "output WAV file")->required();
  s->add_option("--mulaw", syn.mulaw, "raw mu-law output (default: WAV path + .u8)");
  s->add_option("--json", syn.json_path, "write a JSON record here");

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "teacher-forced engine comparison");
  ver.source.add(v, tiny_config());
  v->add_option("--steps", ver.steps)->capture_default_str();
  v->add_option("--tolerance", ver.tolerance, "float32/exact tolerance")->capture_default_str();
  v->add_option("--approx-tolerance", ver.approx_tolerance)->capture_default_str();
  v->add_option("--int16-tolerance", ver.int16_tolerance)->capture_default_str();
  v->add_option("--plans", ver.plans, "thread plans as MAIN+AUX")->capture_default_str();
  v->add_option("--seed", ver.seed)->capture_default_str();
  v->add_flag("--corrupt-optimized", ver.corrupt, "perturb the optimized engine's weights (negative control)");
  v->add_option("--json", ver.json_path, "write a JSON record here");

  BenchArgs ben;
  auto* b = app.add_subcommand("bench", "throughput benchmark");
  ben.source.add(b, tiny_config(20, 32, 128, 256));
  b->add_option("--engine", ben.engine, "ref, opt or both")->capture_default_str();
  b->add_option("--threads-main", ben.threads_main)->capture_default_str();
  b->add_option("--threads-aux", ben.threads_aux)->capture_default_str();
  b->add_flag("--pin", ben.pin, "pin workers to cores 0..N-1");
  b->add_option("--precision", ben.precision, "float32 or int16")->capture_default_str();
  b->add_option("--approx", ben.approx, "exact or approx")->capture_default_str();
  b->add_option("--seconds", ben.seconds, "audio seconds per timed run")->capture_default_str();
  b->add_option("--runs", ben.runs, "timed runs (median reported)")->capture_default_str();
  b->add_option("--json", ben.json_path, "write a JSON record here");

  FlopsArgs fl;
  auto* f = app.add_subcommand("flops", "analytical FLOP and bandwidth model");
  fl.source.add(f, ModelConfig{});
  f->add_option("--fd", fl.fd, "FLOPs per division")->capture_default_str();
  f->add_option("--fe", fl.fe, "FLOPs per exponential")->capture_default_str();
  f->add_option("--machine-flops", fl.machine_flops)->capture_default_str();
  f->add_option("--machine-bw", fl.machine_bw, "bytes/sec")->capture_default_str();
  f->add_option("--precision", fl.precision)->capture_default_str();
  f->add_option("--json", fl.json_path, "write a JSON record here");

  LossArgs lo;
  auto* l = app.add_subcommand("loss", "joint duration/voicing/F0 loss");
  l->add_option("--pred", lo.pred)->required();
  l->add_option("--truth", lo.truth)->required();
  l->add_option("--l1", lo.l1, "voicing weight")->capture_default_str();
  l->add_option("--l2", lo.l2, "F0 weight")->capture_default_str();
  l->add_option("--l3", lo.l3, "F0 smoothness weight")->capture_default_str();
  l->add_option("--json", lo.json_path, "write a JSON record here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return cmd_gen_model(gen);
    if (*s) return cmd_synth(syn);
    if (*v) return cmd_verify(ver);
    if (*b) return cmd_bench(ben);
    if (*f) return cmd_flops(fl);
    if (*l) return cmd_loss(lo);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kValidation;
  }
  return kUsage;
}
