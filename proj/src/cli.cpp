// Copyright 2026 The MSG Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "msg/cli.h"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "msg/features.h"
#include "msg/metrics.h"
#include "msg/mixer.h"
#include "msg/trainer.h"

namespace msg {

namespace fs = std::filesystem;

int NumThreadsFromEnv() {
  const char *v = std::getenv("MSG_NUM_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  try {
    size_t pos = 0;
    const int n = std::stoi(v, &pos);
    if (pos != std::string(v).size() || n < 1) throw std::invalid_argument("range");
    return n;
  } catch (const std::exception &) {
    throw ConfigError(std::string("MSG_NUM_THREADS must be a positive integer, got '") + v + "'");
  }
}

std::vector<int> ParseIdList(const std::string &text) {
  std::vector<int> ids;
  std::string token;
  std::istringstream in(text);
  while (in >> std::ws && !in.eof()) {
    if (in.peek() == ',') {
      in.get();
      continue;
    }
    int v;
    if (!(in >> v)) throw std::invalid_argument("cannot parse id list '" + text + "'");
    ids.push_back(v);
  }
  if (ids.empty()) throw std::invalid_argument("empty id list");
  return ids;
}

std::vector<UtteranceRecord> BuildCorpus(const ExperimentConfig &config) {
  if (config.corpus.manifest.empty()) return GenerateSynthCorpus(config.corpus.synth).records;
  const auto entries = ReadManifest(config.corpus.manifest);
  const fs::path base = fs::path(config.corpus.manifest).parent_path();
  std::vector<UtteranceRecord> records;
  for (const auto &e : entries) {
    fs::path src(e.source);
    if (src.is_relative()) src = base / src;
    WavData wav = ReadWav(src.string());
    if (wav.sample_rate != MelOptions{}.sample_rate)
      throw FormatError(src.string() + ": expected 22050 Hz audio");
    records.push_back(RecordFromAudio(wav.samples, e.phonemes, e.speaker_id));
  }
  return records;
}

std::string RunDirectory(const std::string &root, const ExperimentConfig &config) {
  return (fs::path(root) / (HashHex(ConfigHash(config)) + "-s" + std::to_string(config.train.seed)))
      .string();
}

Matrix LoadReferenceMel(const std::string &spec) {
  const auto hash = spec.rfind('#');
  if (hash != std::string::npos) {
    const std::string path = spec.substr(0, hash);
    const int index = std::stoi(spec.substr(hash + 1));
    auto records = ReadCache(path);
    if (index < 0 || index >= static_cast<int>(records.size()))
      throw std::invalid_argument("reference index " + std::to_string(index) + " outside " + path);
    return records[static_cast<size_t>(index)].mel;
  }
  if (!fs::exists(spec)) throw std::invalid_argument("reference not found: " + spec);
  WavData wav = ReadWav(spec);
  return ExtractMel(wav.samples);
}

namespace {

struct Overrides {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> steps;
  std::optional<std::string> ablation;
  std::optional<int> tau;
  std::optional<std::string> mix_mode;
  std::optional<std::string> mix_scope;
};

ExperimentConfig ResolveConfig(const Overrides &o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : LoadConfig(o.config_path);
  if (o.seed) c.train.seed = *o.seed;
  if (o.steps) c.train.total_steps = *o.steps;
  try {
    if (o.ablation) c.train.ablation = ParseAblation(*o.ablation);
    if (o.mix_mode) c.train.mix_mode = ParseMixMode(*o.mix_mode);
    if (o.mix_scope) c.train.mix_scope = ParseMixScope(*o.mix_scope);
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  if (o.tau) c.discriminator.tau = *o.tau;
  c.Validate();
  return c;
}

void WriteText(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << "\n";
}

UtteranceRecord OutputRecord(const GeneratorOutput &o, const Generator &g,
                             const std::vector<int> &phonemes) {
  UtteranceRecord r;
  r.phonemes = phonemes;
  r.mel = o.mel.value();
  r.targets.duration = o.durations;
  for (size_t t = 0; t < o.variance.pitch_bins.size(); ++t) {
    r.targets.pitch.push_back(PitchHzFromBin(o.variance.pitch_bins[t], g.stats().pitch));
    r.targets.energy.push_back(Denormalize(BinCenterZ(o.variance.energy_bins[t]), g.stats().energy));
  }
  return r;
}

void WriteOutputs(const UtteranceRecord &r, const std::string &out, const std::string &wav_path,
                  const TrainState &state, std::ostream &os) {
  if (r.num_frames() <= 0) throw SynthesisError("synthesized spectrogram is empty");
  const fs::path p(out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::vector<UtteranceRecord> one{r};
  WriteCache(out, one);
  WriteText(out + ".config.json", ConfigToJson(state.config()));
  os << "wrote " << out << " (" << r.num_frames() << " frames)\n";
  if (!wav_path.empty()) {
    WavData wav;
    wav.sample_rate = MelOptions{}.sample_rate;
    wav.samples = GriffinLim(r.mel, MelOptions{});
    WriteWav(wav_path, wav);
    os << "wrote " << wav_path << "\n";
  }
}

int CmdPrepare(const Overrides &o, const std::string &out_dir, std::ostream &os) {
  ExperimentConfig c = ResolveConfig(o);
  if (o.seed) c.corpus.synth.seed = *o.seed;
  const auto records = BuildCorpus(c);
  const FeatureStats stats = FitFeatureStats(records);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  WriteCache((dir / "cache.msgc").string(), records);
  WriteStats((dir / "stats.json").string(), stats);
  std::vector<ManifestEntry> entries;
  for (size_t i = 0; i < records.size(); ++i) {
    ManifestEntry e;
    e.id = "utt" + std::to_string(i);
    e.speaker_id = records[i].speaker_id;
    e.phonemes = records[i].phonemes;
    e.source = c.corpus.manifest.empty() ? "synthetic" : c.corpus.manifest;
    entries.push_back(std::move(e));
  }
  WriteManifest((dir / "manifest.tsv").string(), entries);
  WriteText(dir / "config.json", ConfigToJson(c));
  os << "prepared " << records.size() << " utterances in " << out_dir << "\n";
  return 0;
}

int CmdTrain(const Overrides &o, const std::string &data_dir, const std::string &out_root,
             const std::string &resume, bool force, std::ostream &os) {
  ExperimentConfig c = ResolveConfig(o);
  std::vector<UtteranceRecord> records;
  FeatureStats stats;
  if (!data_dir.empty()) {
    records = ReadCache((fs::path(data_dir) / "cache.msgc").string());
    stats = ReadStats((fs::path(data_dir) / "stats.json").string());
  } else {
    records = BuildCorpus(c);
    stats = FitFeatureStats(records);
  }
  const std::string run_dir = RunDirectory(out_root, c);
  if (resume.empty() && !force && fs::exists(fs::path(run_dir) / "loss_history.csv"))
    throw std::runtime_error("run directory " + run_dir +
                             " already holds a run; pass --resume or --force");
  fs::create_directories(run_dir);
  WriteText(fs::path(run_dir) / "config.json", ConfigToJson(c));
  TrainOptions opts;
  opts.run_dir = run_dir;
  opts.resume_path = resume;
  const int total = c.train.total_steps;
  opts.on_step = [&](int step, const LossBundle &b) {
    if (step % 100 == 0 || step == total)
      os << "step " << step << " G=" << b.l_total << " D=" << b.l_total_d << "\n" << std::flush;
  };
  TrainResult r = Train(c, records, stats, opts);
  os << "run directory: " << run_dir << "\n";
  os << "final checkpoint: " << r.final_checkpoint << "\n";
  return 0;
}

int CmdSynthesize(const std::string &ckpt, const std::string &phonemes, const std::string &ref,
                  const std::string &durations, const std::string &out, const std::string &wav,
                  std::ostream &os) {
  auto state = LoadTrainState(ckpt);
  const auto ids = ParseIdList(phonemes);
  std::optional<std::vector<int>> dur;
  if (!durations.empty()) dur = ParseIdList(durations);
  nn::Context ctx;
  const Generator &g = state->generator();
  GeneratorOutput o = g.Synthesize(ids, LoadReferenceMel(ref), ctx, dur);
  WriteOutputs(OutputRecord(o, g, ids), out, wav, *state, os);
  return 0;
}

int CmdMix(const std::string &ckpt, const std::string &phonemes, const std::string &ref_a,
           const std::string &ref_b, double r_s, double r_p, double r_e,
           const std::string &durations, const std::string &out, const std::string &wav,
           std::ostream &os) {
  const MixSpec spec = MixSpec::Fixed(r_s, r_p, r_e);
  auto state = LoadTrainState(ckpt);
  const auto ids = ParseIdList(phonemes);
  std::optional<std::vector<int>> dur;
  if (!durations.empty()) dur = ParseIdList(durations);
  nn::Context ctx;
  const Generator &g = state->generator();
  Var s_a = g.EncodeStyle(LoadReferenceMel(ref_a), ctx);
  Var s_b = g.EncodeStyle(LoadReferenceMel(ref_b), ctx);
  GeneratorOutput o = g.Infer(ids, MixStyles(s_a, s_b, spec.r_s), MixStyles(s_a, s_b, spec.r_p),
                              MixStyles(s_a, s_b, spec.r_e), ctx, dur);
  WriteOutputs(OutputRecord(o, g, ids), out, wav, *state, os);
  return 0;
}

int CmdEvaluate(const std::string &ckpt, const std::string &data_dir, const std::string &out_dir,
                bool ground_truth, std::ostream &os) {
  const auto records = ReadCache((fs::path(data_dir) / "cache.msgc").string());
  MetricReport rep;
  std::string config_json;
  if (ground_truth) {
    rep = EvaluatePairs(records, records, records);
    const fs::path cfg = fs::path(data_dir) / "config.json";
    if (fs::exists(cfg)) {
      std::ifstream in(cfg);
      std::stringstream ss;
      ss << in.rdbuf();
      config_json = ss.str();
    } else {
      config_json = ConfigToJson(ExperimentConfig{});
    }
  } else {
    if (ckpt.empty()) throw std::invalid_argument("evaluate needs --checkpoint or --ground-truth");
    auto state = LoadTrainState(ckpt);
    rep = EvaluateGenerator(state->generator(), records, records);
    config_json = ConfigToJson(state->config());
  }
  fs::create_directories(out_dir);
  WriteText(fs::path(out_dir) / "metrics.csv", rep.ToCsv());
  WriteText(fs::path(out_dir) / "metrics.txt", rep.ToTable());
  WriteText(fs::path(out_dir) / "config.json", config_json);
  os << rep.ToTable();
  return 0;
}

}  // namespace

int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Multi-speaker adversarial text-to-speech toolkit", "msg"};
  app.require_subcommand(1);

  Overrides ov;
  std::string out_path, data_dir, resume, checkpoint, phonemes, ref, ref_b, durations, wav;
  double r_s = 1.0, r_p = 1.0, r_e = 1.0;
  bool force = false, ground_truth = false;

  auto add_common = [&](CLI::App *cmd) {
    cmd->add_option("--config", ov.config_path, "JSON config file");
    cmd->add_option("--seed", ov.seed, "random seed");
  };
  auto add_training = [&](CLI::App *cmd) {
    cmd->add_option("--steps", ov.steps, "total training steps");
    cmd->add_option("--ablation", ov.ablation, "full | no_fm | no_rec_no_fm | rec_only | plus_rec");
    cmd->add_option("--tau", ov.tau, "discriminator pooling factor");
    cmd->add_option("--mix-mode", ov.mix_mode, "bernoulli | mixup | off");
    cmd->add_option("--mix-scope", ov.mix_scope, "shared | per_variance");
  };

  auto *prepare = app.add_subcommand("prepare", "build the feature cache and statistics");
  add_common(prepare);
  prepare->add_option("--out", out_path, "output directory")->required();

  auto *train = app.add_subcommand("train", "train a model");
  add_common(train);
  add_training(train);
  train->add_option("--data", data_dir, "prepared directory (default: build from config)");
  train->add_option("--out", out_path, "root for run directories")->required();
  train->add_option("--resume", resume, "checkpoint to resume from");
  train->add_flag("--force", force, "reuse an existing run directory");

  auto *synth = app.add_subcommand("synthesize", "synthesize a spectrogram");
  add_common(synth);
  synth->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  synth->add_option("--phonemes", phonemes, "phoneme ids, e.g. 3,1,4")->required();
  synth->add_option("--ref", ref, "reference: cache.msgc#index or a wav file")->required();
  synth->add_option("--durations", durations, "frame counts per phoneme");
  synth->add_option("--out", out_path, "output cache file")->required();
  synth->add_option("--wav", wav, "optional 22050 Hz wav output");

  auto *mix = app.add_subcommand("mix", "synthesize with a combination of two styles");
  add_common(mix);
  mix->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  mix->add_option("--phonemes", phonemes, "phoneme ids")->required();
  mix->add_option("--ref", ref, "reference A")->required();
  mix->add_option("--ref-b", ref_b, "reference B")->required();
  mix->add_option("--r-s", r_s, "style ratio toward A");
  mix->add_option("--r-p", r_p, "pitch ratio toward A");
  mix->add_option("--r-e", r_e, "energy ratio toward A");
  mix->add_option("--durations", durations, "frame counts per phoneme");
  mix->add_option("--out", out_path, "output cache file")->required();
  mix->add_option("--wav", wav, "optional wav output");

  auto *eval = app.add_subcommand("evaluate", "objective metrics on a prepared corpus");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file");
  eval->add_option("--data", data_dir, "prepared directory")->required();
  eval->add_option("--out", out_path, "report directory")->required();
  eval->add_flag("--ground-truth", ground_truth, "score the references against themselves");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    NumThreadsFromEnv();
    if (*prepare) return CmdPrepare(ov, out_path, out);
    if (*train) return CmdTrain(ov, data_dir, out_path, resume, force, out);
    if (*synth) return CmdSynthesize(checkpoint, phonemes, ref, durations, out_path, wav, out);
    if (*mix) return CmdMix(checkpoint, phonemes, ref, ref_b, r_s, r_p, r_e, durations, out_path, wav, out);
    if (*eval) return CmdEvaluate(checkpoint, data_dir, out_path, ground_truth, out);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace msg
