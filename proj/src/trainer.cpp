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

#include "msg/trainer.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "msg/log.h"
#include "msg/mixer.h"

namespace msg {

namespace fs = std::filesystem;

double LrSchedule(int step, int warmup_steps, double base_lr) {
  if (step < 1) throw std::invalid_argument("learning-rate schedule needs step >= 1");
  if (warmup_steps < 1) throw std::invalid_argument("warmup_steps must be >= 1");
  const double s = step;
  const double w = warmup_steps;
  return base_lr * std::min(std::pow(s, -0.5), s * std::pow(w, -1.5)) / std::pow(w, -0.5);
}

Adam::Adam(const nn::ParamStore &params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto &[name, p] : params.params()) {
    m_.push_back(Matrix::Zero(p.rows(), p.cols()));
    v_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void Adam::Step(nn::ParamStore &params, double lr) {
  auto &list = params.params();
  if (list.size() != m_.size()) throw std::logic_error("optimizer/parameter count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < list.size(); ++i) {
    Var &p = list[i].second;
    if (!p.has_grad()) continue;
    const Matrix &g = p.grad();
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    if (lr == 0.0) continue;
    const auto mhat = m_[i].array() / c1;
    const auto vhat = v_[i].array() / c2;
    p.mutable_value().array() -= lr * mhat / (vhat.sqrt() + eps_);
  }
}

double GradientNorm(const nn::ParamStore &params) {
  double sq = 0.0;
  for (const auto &[name, p] : params.params()) {
    if (p.has_grad()) sq += p.grad().squaredNorm();
  }
  return std::sqrt(sq);
}

double ClipGradients(nn::ParamStore &params, double max_norm) {
  const double norm = GradientNorm(params);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto &[name, p] : params.params()) {
      if (p.has_grad()) p.node()->grad *= scale;
    }
  }
  return norm;
}

std::map<std::string, double> GradientMassByGroup(const nn::ParamStore &params,
                                                  const std::vector<std::string> &groups) {
  std::map<std::string, double> out;
  for (const auto &g : groups) out[g] = 0.0;
  for (const auto &[name, p] : params.params()) {
    if (!p.has_grad()) continue;
    for (const auto &g : groups) {
      if (name.rfind(g + ".", 0) == 0) out[g] += p.grad().squaredNorm();
    }
  }
  return out;
}

Matrix PitchTargets(const UtteranceRecord &r, const FeatureStats &stats) {
  Matrix m(static_cast<Eigen::Index>(r.targets.pitch.size()), 1);
  for (size_t t = 0; t < r.targets.pitch.size(); ++t)
    m(static_cast<Eigen::Index>(t), 0) = PitchTargetZ(r.targets.pitch[t], stats.pitch);
  return m;
}

Matrix EnergyTargets(const UtteranceRecord &r, const FeatureStats &stats) {
  Matrix m(static_cast<Eigen::Index>(r.targets.energy.size()), 1);
  for (size_t t = 0; t < r.targets.energy.size(); ++t)
    m(static_cast<Eigen::Index>(t), 0) = EnergyTargetZ(r.targets.energy[t], stats.energy);
  return m;
}

double HeldInMae(const Generator &generator, std::span<const UtteranceRecord> records) {
  if (records.empty()) throw std::invalid_argument("no records to evaluate");
  nn::Context ctx;
  double total = 0.0;
  for (const auto &r : records) {
    GeneratorOutput o = generator.TeacherForced(r, ctx);
    total += (o.mel.value() - r.mel).cwiseAbs().mean();
  }
  return total / static_cast<double>(records.size());
}

// ---------------------------------------------------------------------------

TrainState::TrainState(const ExperimentConfig &config, const FeatureStats &stats)
    : config_(config), stats_(stats) {
  config_.Validate();
  config_hash_ = ConfigHash(config_);
  const uint64_t seed = config_.train.seed;
  generator_ = std::make_unique<Generator>(config_.generator, DeriveSeed(seed, 1));
  generator_->SetStats(stats_);
  discriminator_ = std::make_unique<Discriminator>(config_.discriminator, DeriveSeed(seed, 2));
  const auto &t = config_.train;
  adam_g_ = Adam(generator_->params(), t.adam_beta1, t.adam_beta2, t.adam_eps);
  adam_d_ = Adam(discriminator_->params(), t.adam_beta1, t.adam_beta2, t.adam_eps);
  rng_ = Rng(DeriveSeed(seed, 3));
}

double TrainState::CurrentLr() const {
  if (lr_override_) return *lr_override_;
  return LrSchedule(step_ + 1, config_.train.warmup_steps, config_.train.base_lr);
}

namespace {

Matrix DurationColumn(const std::vector<int> &d) {
  Matrix m(static_cast<Eigen::Index>(d.size()), 1);
  for (size_t i = 0; i < d.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = d[i];
  return m;
}

Matrix NoiseLike(Eigen::Index rows, Eigen::Index cols, Rng &rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Normal();
  return m;
}

std::vector<std::vector<Var>> DetachAll(const std::vector<std::vector<Var>> &maps) {
  std::vector<std::vector<Var>> out(maps.size());
  for (size_t k = 0; k < maps.size(); ++k) {
    for (const auto &m : maps[k]) out[k].push_back(m.Detach());
  }
  return out;
}

Var SumInto(const Var &acc, const Var &term) { return acc.defined() ? ad::Add(acc, term) : term; }

std::string Describe(const LossBundle &b) {
  std::ostringstream os;
  os.precision(10);
  os << "l_duration=" << b.l_duration << " l_pitch=" << b.l_pitch << " l_energy=" << b.l_energy
     << " l_var=" << b.l_var << " l_rec=" << b.l_rec << " l_adv=" << b.l_adv << " l_fm=" << b.l_fm
     << " l_mix=" << b.l_mix << " l_total_G=" << b.l_total << " l_total_D=" << b.l_total_d;
  return os.str();
}

void CheckFinite(const LossBundle &b, int step, const char *phase) {
  const std::string bad = b.FirstNonFinite();
  if (bad.empty()) return;
  throw NonFiniteLossError("non-finite loss term " + bad + " at step " + std::to_string(step) +
                               " (" + phase + " update); " + Describe(b),
                           b);
}

/// Per-item forward products shared by the two updates.
struct ItemPass {
  const UtteranceRecord *record = nullptr;
  GeneratorOutput out;
  Matrix real_norm;
  Var d_condition;  // what the discriminator sees for real and fake
  bool has_mix = false;
  MixedBatch mix;
  Var mix_condition;
};

}  // namespace

LossBundle TrainState::TrainStep(std::span<const UtteranceRecord> batch,
                                 std::span<const UtteranceRecord> donors) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const auto &tc = config_.train;
  const bool asc = tc.mix_mode != MixMode::kOff;
  const LossMode mode = LossMode::From(tc.ablation, asc);
  const double lr = CurrentLr();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const int step_no = step_ + 1;

  Rng step_rng(rng_.NextU64());
  nn::Context ctx{true, &step_rng};

  Generator &g = *generator_;
  Discriminator &d = *discriminator_;

  // Generator forward passes (shared by both updates).
  std::vector<ItemPass> items(batch.size());
  for (size_t b = 0; b < batch.size(); ++b) {
    ItemPass &it = items[b];
    it.record = &batch[b];
    it.out = g.TeacherForced(batch[b], ctx);
    it.real_norm = g.NormalizeMel(batch[b].mel);
    if (tc.condition == ConditionMode::kNoise) {
      it.d_condition = Var(NoiseLike(it.out.condition.rows(), it.out.condition.cols(), step_rng));
    } else {
      it.d_condition = it.out.condition;
    }
    if (mode.mix) {
      std::vector<int> candidates;
      for (size_t i = 0; i < donors.size(); ++i) {
        if (donors[i].speaker_id != batch[b].speaker_id) candidates.push_back(static_cast<int>(i));
      }
      if (candidates.empty())
        throw std::invalid_argument("style combination needs a donor from another speaker");
      const auto &donor = donors[static_cast<size_t>(candidates[step_rng.Below(candidates.size())])];
      MixSpec spec = SampleMixRatios(tc.mix_mode, tc.mix_scope, step_rng);
      Var s_donor = g.EncodeStyle(donor.mel, ctx);
      it.mix = BuildMixedFromStyles(batch[b].phonemes, batch[b].targets.duration, it.out.style,
                                    s_donor, spec, g, ctx);
      it.has_mix = true;
      it.mix_condition = tc.condition == ConditionMode::kNoise
                             ? Var(NoiseLike(it.mix.condition.rows(), it.mix.condition.cols(), step_rng))
                             : it.mix.condition;
    }
  }

  LossBundle bundle;

  // Discriminator update.
  if (mode.trains_discriminator()) {
    d.params().ZeroGrad();
    Var d_total;
    for (auto &it : items) {
      Var cond = it.d_condition.Detach();
      auto real = d.Forward(Var(it.real_norm), cond);
      auto fake = d.Forward(it.out.mel_norm.Detach(), cond);
      Var loss;
      if (it.has_mix) {
        auto mixed = d.Forward(it.mix.mel_norm.Detach(), it.mix_condition.Detach());
        loss = DiscriminatorLoss(real.scores, fake.scores, &mixed.scores);
      } else {
        loss = DiscriminatorLoss(real.scores, fake.scores);
      }
      d_total = SumInto(d_total, loss);
    }
    d_total = ad::Scale(d_total, inv_b);
    bundle.l_total_d = d_total.item();
    CheckFinite(bundle, step_no, "discriminator");
    d_total.Backward();
    ClipGradients(d.params(), tc.grad_clip);
    adam_d_.Step(d.params(), lr);
  }

  // Generator update on the same batch, against the updated discriminator.
  g.params().ZeroGrad();
  d.params().ZeroGrad();
  GeneratorTerms terms;
  Var dur_sum, pitch_sum, energy_sum;
  double rec_value = 0.0;
  for (auto &it : items) {
    const UtteranceRecord &r = *it.record;
    VarianceLosses vl = VarianceLoss(DurationColumn(r.targets.duration), it.out.log_duration,
                                     Var(PitchTargets(r, stats_)), it.out.pitch_pred,
                                     Var(EnergyTargets(r, stats_)), it.out.energy_pred);
    dur_sum = SumInto(dur_sum, vl.duration);
    pitch_sum = SumInto(pitch_sum, vl.pitch);
    energy_sum = SumInto(energy_sum, vl.energy);
    terms.var = SumInto(terms.var, vl.total);

    if (mode.rec) {
      Var rec = ReconstructionLoss(Var(it.real_norm), it.out.mel_norm);
      terms.rec = SumInto(terms.rec, rec);
      rec_value += rec.item();
    } else {
      // Monitored only; never part of the graph.
      rec_value += (it.real_norm - it.out.mel_norm.value()).cwiseAbs().mean();
    }

    if (mode.adv) {
      auto fake = d.Forward(it.out.mel_norm, it.d_condition);
      terms.adv = SumInto(terms.adv, GeneratorAdversarialLoss(fake.scores));
      if (mode.fm) {
        auto real = d.Forward(Var(it.real_norm), it.d_condition.Detach());
        terms.fm = SumInto(terms.fm, FeatureMatchingLoss(DetachAll(real.features), fake.features,
                                                         tc.fm_scope));
      }
    }
    if (it.has_mix) {
      auto mixed = d.Forward(it.mix.mel_norm, it.mix_condition);
      terms.mix = SumInto(terms.mix, GeneratorAdversarialLoss(mixed.scores));
    }
  }
  auto avg = [&](Var &v) {
    if (v.defined()) v = ad::Scale(v, inv_b);
  };
  avg(dur_sum), avg(pitch_sum), avg(energy_sum);
  avg(terms.var), avg(terms.rec), avg(terms.adv), avg(terms.fm), avg(terms.mix);

  bundle.l_duration = dur_sum.item();
  bundle.l_pitch = pitch_sum.item();
  bundle.l_energy = energy_sum.item();
  bundle.l_var = terms.var.item();
  bundle.l_rec = rec_value * inv_b;
  bundle.l_adv = terms.adv.defined() ? terms.adv.item() : 0.0;
  bundle.l_fm = terms.fm.defined() ? terms.fm.item() : 0.0;
  bundle.l_mix = terms.mix.defined() ? terms.mix.item() : 0.0;
  Var g_total = GeneratorObjective(terms, tc.weights, mode);
  bundle.l_total = g_total.item();
  CheckFinite(bundle, step_no, "generator");

  g_total.Backward();
  ClipGradients(g.params(), tc.grad_clip);
  adam_g_.Step(g.params(), lr);
  // Gradients the generator pass left on the discriminator are discarded.
  d.params().ZeroGrad();

  step_ = step_no;
  return bundle;
}

LossBundle TrainState::Step(std::span<const UtteranceRecord> corpus) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  std::vector<UtteranceRecord> batch;
  for (int b = 0; b < config_.train.batch_size; ++b)
    batch.push_back(corpus[static_cast<size_t>(rng_.Below(corpus.size()))]);
  return TrainStep(batch, corpus);
}

// ---------------------------------------------------------------------------
// Checkpoint format.

namespace {

constexpr char kMagic[4] = {'M', 'S', 'G', 'K'};
constexpr uint32_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void Pod(T v) {
    out_.append(reinterpret_cast<const char *>(&v), sizeof(T));
  }
  void Str(const std::string &s) {
    Pod<uint64_t>(s.size());
    out_.append(s);
  }
  void Array(const std::string &name, const Matrix &m) {
    Str(name);
    Pod<int64_t>(m.rows());
    Pod<int64_t>(m.cols());
    out_.append(reinterpret_cast<const char *>(m.data()), sizeof(double) * static_cast<size_t>(m.size()));
  }
  std::string &bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  template <typename T>
  T Pod() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string Str() {
    const uint64_t n = Pod<uint64_t>();
    Need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::pair<std::string, Matrix> Array() {
    std::string name = Str();
    const int64_t rows = Pod<int64_t>();
    const int64_t cols = Pod<int64_t>();
    if (rows < 0 || cols < 0) throw FormatError("checkpoint: negative array shape");
    const size_t bytes = sizeof(double) * static_cast<size_t>(rows) * static_cast<size_t>(cols);
    Need(bytes);
    Matrix m(rows, cols);
    std::memcpy(m.data(), data_.data() + pos_, bytes);
    pos_ += bytes;
    return {std::move(name), std::move(m)};
  }
  bool AtEnd() const { return pos_ == data_.size(); }

 private:
  void Need(size_t n) const {
    if (pos_ + n > data_.size()) throw FormatError("checkpoint is truncated");
  }
  std::string data_;
  size_t pos_ = 0;
};

std::string ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointNotFoundError("checkpoint not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Parsed {
  CheckpointInfo info;
  std::string rng_state;
  int64_t adam_g_t = 0, adam_d_t = 0;
  std::map<std::string, Matrix> arrays;
};

Parsed ParseCheckpoint(const std::string &bytes, bool with_arrays) {
  Reader r(bytes);
  char magic[4];
  for (char &c : magic) c = r.Pod<char>();
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a checkpoint file (bad magic)");
  const uint32_t version = r.Pod<uint32_t>();
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  Parsed p;
  p.info.config_hash = r.Pod<uint64_t>();
  p.info.step = static_cast<int>(r.Pod<int64_t>());
  p.rng_state = r.Str();
  p.info.config_json = r.Str();
  p.info.stats_json = r.Str();
  if (!with_arrays) return p;
  p.adam_g_t = r.Pod<int64_t>();
  p.adam_d_t = r.Pod<int64_t>();
  const uint64_t n = r.Pod<uint64_t>();
  for (uint64_t i = 0; i < n; ++i) {
    auto [name, m] = r.Array();
    if (!p.arrays.emplace(name, std::move(m)).second)
      throw FormatError("checkpoint has duplicate array " + name);
  }
  if (!r.AtEnd()) throw FormatError("checkpoint has trailing bytes");
  return p;
}

}  // namespace

std::string TrainState::Serialize() const {
  Writer w;
  for (char c : kMagic) w.Pod<char>(c);
  w.Pod<uint32_t>(kVersion);
  w.Pod<uint64_t>(config_hash_);
  w.Pod<int64_t>(step_);
  w.Str(rng_.SerializeState());
  w.Str(ConfigToJson(config_));
  w.Str(StatsToJson(stats_));
  w.Pod<int64_t>(adam_g_.steps());
  w.Pod<int64_t>(adam_d_.steps());
  const auto &gp = generator_->params().params();
  const auto &dp = discriminator_->params().params();
  w.Pod<uint64_t>(3 * (gp.size() + dp.size()));
  for (size_t i = 0; i < gp.size(); ++i) w.Array("generator/" + gp[i].first, gp[i].second.value());
  for (size_t i = 0; i < dp.size(); ++i) w.Array("discriminator/" + dp[i].first, dp[i].second.value());
  for (size_t i = 0; i < gp.size(); ++i) w.Array("adam_g.m/" + gp[i].first, adam_g_.first_moments()[i]);
  for (size_t i = 0; i < gp.size(); ++i) w.Array("adam_g.v/" + gp[i].first, adam_g_.second_moments()[i]);
  for (size_t i = 0; i < dp.size(); ++i) w.Array("adam_d.m/" + dp[i].first, adam_d_.first_moments()[i]);
  for (size_t i = 0; i < dp.size(); ++i) w.Array("adam_d.v/" + dp[i].first, adam_d_.second_moments()[i]);
  return std::move(w.bytes());
}

void TrainState::Save(const std::string &path) const {
  const std::string bytes = Serialize();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write on checkpoint: " + path);
  }
  fs::rename(tmp, path);
}

void TrainState::Load(const std::string &path) {
  Parsed p = ParseCheckpoint(ReadFile(path), true);
  if (p.info.config_hash != config_hash_)
    throw CheckpointIncompatibleError("checkpoint " + path + " was written for config " +
                                      HashHex(p.info.config_hash) + " but this run uses " +
                                      HashHex(config_hash_));
  auto take = [&](const std::string &name, Matrix &dst) {
    auto it = p.arrays.find(name);
    if (it == p.arrays.end()) throw FormatError("checkpoint lacks array " + name);
    if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols())
      throw FormatError("checkpoint array " + name + " has the wrong shape");
    dst = it->second;
  };
  auto &gp = generator_->params().params();
  auto &dp = discriminator_->params().params();
  for (size_t i = 0; i < gp.size(); ++i) {
    take("generator/" + gp[i].first, gp[i].second.mutable_value());
    take("adam_g.m/" + gp[i].first, adam_g_.first_moments()[i]);
    take("adam_g.v/" + gp[i].first, adam_g_.second_moments()[i]);
  }
  for (size_t i = 0; i < dp.size(); ++i) {
    take("discriminator/" + dp[i].first, dp[i].second.mutable_value());
    take("adam_d.m/" + dp[i].first, adam_d_.first_moments()[i]);
    take("adam_d.v/" + dp[i].first, adam_d_.second_moments()[i]);
  }
  if (p.arrays.size() != 3 * (gp.size() + dp.size()))
    throw FormatError("checkpoint has unexpected extra arrays");
  stats_ = StatsFromJson(p.info.stats_json);
  generator_->SetStats(stats_);
  adam_g_.set_steps(p.adam_g_t);
  adam_d_.set_steps(p.adam_d_t);
  rng_.RestoreState(p.rng_state);
  step_ = p.info.step;
}

CheckpointInfo ReadCheckpointInfo(const std::string &path) {
  return ParseCheckpoint(ReadFile(path), false).info;
}

std::unique_ptr<TrainState> LoadTrainState(const std::string &path) {
  CheckpointInfo info = ReadCheckpointInfo(path);
  ExperimentConfig config = ConfigFromJson(info.config_json);
  auto state = std::make_unique<TrainState>(config, StatsFromJson(info.stats_json));
  state->Load(path);
  return state;
}

// ---------------------------------------------------------------------------

std::string LossHistoryHeader() {
  return "step,l_duration,l_pitch,l_energy,l_var,l_rec,l_adv,l_fm,l_mix,l_total_G,l_total_D,lr";
}

std::string FormatLossRow(int step, const LossBundle &b, double lr) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                step, b.l_duration, b.l_pitch, b.l_energy, b.l_var, b.l_rec, b.l_adv, b.l_fm,
                b.l_mix, b.l_total, b.l_total_d, lr);
  return buf;
}

TrainResult Train(const ExperimentConfig &config, std::span<const UtteranceRecord> corpus,
                  const FeatureStats &stats, const TrainOptions &options) {
  if (corpus.empty()) throw ConfigError("training corpus is empty");
  if (config.train.mix_mode != MixMode::kOff) {
    std::set<int> speakers;
    for (const auto &r : corpus) speakers.insert(r.speaker_id);
    if (speakers.size() < 2)
      throw ConfigError("style combination is enabled but the corpus has a single speaker");
  }
  TrainResult result;
  result.state = std::make_unique<TrainState>(config, stats);
  TrainState &state = *result.state;
  if (!options.resume_path.empty()) state.Load(options.resume_path);

  std::string history_path;
  std::ofstream history;
  if (!options.run_dir.empty()) {
    fs::create_directories(options.run_dir);
    history_path = (fs::path(options.run_dir) / "loss_history.csv").string();
    std::vector<std::string> kept;
    if (!options.resume_path.empty()) {
      std::ifstream in(history_path);
      std::string line;
      bool header = true;
      while (std::getline(in, line)) {
        if (header) {
          header = false;
          continue;
        }
        if (line.empty()) continue;
        if (std::stoi(line.substr(0, line.find(','))) <= state.step()) kept.push_back(line);
      }
    }
    history.open(history_path, std::ios::trunc);
    if (!history) throw std::runtime_error("cannot write " + history_path);
    history << LossHistoryHeader() << "\n";
    for (const auto &l : kept) history << l << "\n";
  }

  auto checkpoint = [&](const std::string &name) {
    if (options.run_dir.empty()) return std::string();
    const std::string path = (fs::path(options.run_dir) / name).string();
    state.Save(path);
    return path;
  };

  const int every = config.train.checkpoint_every;
  while (state.step() < config.train.total_steps) {
    const double lr = state.CurrentLr();
    LossBundle b = state.Step(corpus);
    result.history.push_back(b);
    if (history.is_open()) history << FormatLossRow(state.step(), b, lr) << "\n" << std::flush;
    if (options.on_step) options.on_step(state.step(), b);
    if (every > 0 && state.step() % every == 0)
      checkpoint("checkpoint_" + std::to_string(state.step()) + ".msgk");
  }
  result.final_checkpoint = checkpoint("checkpoint_final.msgk");
  return result;
}

}  // namespace msg
