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

#include "msg/config.h"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace msg {

using nlohmann::json;

std::string ConditionModeName(ConditionMode m) {
  return m == ConditionMode::kNoise ? "noise" : "learned";
}

ConditionMode ParseConditionMode(const std::string &s) {
  if (s == "learned") return ConditionMode::kLearned;
  if (s == "noise") return ConditionMode::kNoise;
  throw ConfigError("unknown condition mode '" + s + "' (expected learned, noise)");
}

void TrainConfig::Validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (total_steps < 0) throw ConfigError("train.total_steps must be >= 0");
  if (warmup_steps < 1) throw ConfigError("train.warmup_steps must be >= 1");
  if (!(base_lr >= 0.0)) throw ConfigError("train.base_lr must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw ConfigError("adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be > 0");
  if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
  try {
    weights.Validate();
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
}

void ExperimentConfig::Validate() const {
  try {
    generator.Validate();
    discriminator.Validate();
  } catch (const ConfigError &) {
    throw;
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
  train.Validate();
  if (discriminator.cond_dim != generator.d_model)
    throw ConfigError("discriminator.cond_dim must equal generator.d_model");
  if (discriminator.n_mels != generator.n_mels)
    throw ConfigError("discriminator.n_mels must equal generator.n_mels");
  if (corpus.synth.vocab_size != generator.vocab_size)
    throw ConfigError("corpus.vocab_size must equal generator.vocab_size");
  if (corpus.synth.n_speakers < 1 || corpus.synth.n_utterances < 1)
    throw ConfigError("corpus needs at least one speaker and one utterance");
  if (corpus.synth.min_phonemes < 1 || corpus.synth.max_phonemes < corpus.synth.min_phonemes)
    throw ConfigError("corpus phoneme count range is invalid");
}

namespace {

/// Binds config fields to keys of one JSON section.
class Section {
 public:
  using Reader = std::function<void(const json &)>;
  using Writer = std::function<json()>;

  template <typename T>
  void Field(const std::string &key, T *value) {
    readers_[key] = [value, key](const json &j) {
      try {
        *value = j.get<T>();
      } catch (const json::exception &) {
        throw ConfigError("bad value for '" + key + "': " + j.dump());
      }
    };
    writers_.emplace_back(key, [value]() { return json(*value); });
  }

  void Custom(const std::string &key, Reader r, Writer w) {
    readers_[key] = std::move(r);
    writers_.emplace_back(key, std::move(w));
  }

  void Read(const json &j, const std::string &section) const {
    if (!j.is_object()) throw ConfigError("section '" + section + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      auto r = readers_.find(it.key());
      if (r == readers_.end()) throw ConfigError("unknown config key '" + section + "." + it.key() + "'");
      r->second(it.value());
    }
  }

  json Write() const {
    json out = json::object();
    for (const auto &[key, w] : writers_) out[key] = w();
    return out;
  }

 private:
  std::map<std::string, Reader> readers_;
  std::vector<std::pair<std::string, Writer>> writers_;
};

template <typename E>
void EnumField(Section &s, const std::string &key, E *value, std::function<E(const std::string &)> parse,
               std::function<std::string(E)> name) {
  s.Custom(
      key,
      [=](const json &j) {
        if (!j.is_string()) throw ConfigError("'" + key + "' must be a string");
        try {
          *value = parse(j.get<std::string>());
        } catch (const ConfigError &) {
          throw;
        } catch (const std::invalid_argument &e) {
          throw ConfigError(e.what());
        }
      },
      [=]() { return json(name(*value)); });
}

struct Sections {
  Section corpus, generator, discriminator, train, loss, mix;
};

void Bind(ExperimentConfig &c, Sections &s) {
  s.corpus.Field("manifest", &c.corpus.manifest);
  s.corpus.Field("n_speakers", &c.corpus.synth.n_speakers);
  s.corpus.Field("n_utterances", &c.corpus.synth.n_utterances);
  s.corpus.Field("vocab_size", &c.corpus.synth.vocab_size);
  s.corpus.Field("min_phonemes", &c.corpus.synth.min_phonemes);
  s.corpus.Field("max_phonemes", &c.corpus.synth.max_phonemes);
  s.corpus.Field("noise", &c.corpus.synth.noise);
  s.corpus.Field("seed", &c.corpus.synth.seed);

  auto &g = c.generator;
  s.generator.Field("d_model", &g.d_model);
  s.generator.Field("attn_heads", &g.attn_heads);
  s.generator.Field("conv_kernel", &g.conv_kernel);
  s.generator.Field("ff_filter", &g.ff_filter);
  s.generator.Field("n_encoder_blocks", &g.n_encoder_blocks);
  s.generator.Field("n_decoder_blocks", &g.n_decoder_blocks);
  s.generator.Field("vocab_size", &g.vocab_size);
  s.generator.Field("n_mels", &g.n_mels);
  s.generator.Field("style_channels", &g.style_channels);
  s.generator.Field("predictor_filter", &g.predictor_filter);
  s.generator.Field("predictor_kernel", &g.predictor_kernel);
  s.generator.Field("dropout", &g.dropout);

  auto &d = c.discriminator;
  s.discriminator.Field("n_scales", &d.n_scales);
  s.discriminator.Field("tau", &d.tau);
  s.discriminator.Field("n_dblocks", &d.n_dblocks);
  s.discriminator.Field("channels", &d.channels);
  s.discriminator.Field("kernel", &d.kernel);
  s.discriminator.Field("leaky_slope", &d.leaky_slope);
  s.discriminator.Field("n_mels", &d.n_mels);
  s.discriminator.Field("cond_dim", &d.cond_dim);

  auto &t = c.train;
  s.train.Field("batch_size", &t.batch_size);
  s.train.Field("total_steps", &t.total_steps);
  s.train.Field("warmup_steps", &t.warmup_steps);
  s.train.Field("seed", &t.seed);
  s.train.Field("adam_beta1", &t.adam_beta1);
  s.train.Field("adam_beta2", &t.adam_beta2);
  s.train.Field("adam_eps", &t.adam_eps);
  s.train.Field("base_lr", &t.base_lr);
  s.train.Field("grad_clip", &t.grad_clip);
  s.train.Field("checkpoint_every", &t.checkpoint_every);
  EnumField<Ablation>(s.train, "ablation", &t.ablation, ParseAblation, AblationName);
  EnumField<ConditionMode>(s.train, "condition", &t.condition, ParseConditionMode, ConditionModeName);
  EnumField<FeatureMatchingScope>(
      s.train, "fm_scope", &t.fm_scope,
      [](const std::string &v) {
        if (v == "all") return FeatureMatchingScope::kAllScales;
        if (v == "first") return FeatureMatchingScope::kFirstScale;
        throw ConfigError("unknown fm_scope '" + v + "' (expected all, first)");
      },
      [](FeatureMatchingScope v) { return std::string(v == FeatureMatchingScope::kAllScales ? "all" : "first"); });

  s.loss.Field("lambda_fm", &t.weights.lambda_fm);
  s.loss.Field("mu_var", &t.weights.mu_var);
  s.loss.Field("nu_mix", &t.weights.nu_mix);
  s.loss.Field("rec", &t.weights.rec);

  EnumField<MixMode>(s.mix, "mode", &t.mix_mode, ParseMixMode, MixModeName);
  EnumField<MixScope>(s.mix, "scope", &t.mix_scope, ParseMixScope, MixScopeName);
}

json ToJsonObject(const ExperimentConfig &config) {
  ExperimentConfig copy = config;
  Sections s;
  Bind(copy, s);
  json j;
  j["corpus"] = s.corpus.Write();
  j["generator"] = s.generator.Write();
  j["discriminator"] = s.discriminator.Write();
  j["train"] = s.train.Write();
  j["loss"] = s.loss.Write();
  j["mix"] = s.mix.Write();
  return j;
}

}  // namespace

ExperimentConfig ConfigFromJson(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  Sections s;
  Bind(c, s);
  const std::map<std::string, const Section *> sections = {
      {"corpus", &s.corpus}, {"generator", &s.generator}, {"discriminator", &s.discriminator},
      {"train", &s.train},   {"loss", &s.loss},           {"mix", &s.mix}};
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto sec = sections.find(it.key());
    if (sec == sections.end()) throw ConfigError("unknown config section '" + it.key() + "'");
    sec->second->Read(it.value(), it.key());
  }
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ConfigFromJson(ss.str());
}

std::string ConfigToJson(const ExperimentConfig &config) { return ToJsonObject(config).dump(2); }

uint64_t Fnv1a64(const std::string &bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t ConfigHash(const ExperimentConfig &config) {
  json j = ToJsonObject(config);
  j["train"].erase("total_steps");
  j["train"].erase("checkpoint_every");
  j["corpus"].erase("manifest");
  return Fnv1a64(j.dump());
}

std::string HashHex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace msg
