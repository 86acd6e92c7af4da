#include "qasl/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "json_codec.h"
#include "qasl/errors.h"
#include "qasl/io.h"
#include "qasl/random.h"

namespace qasl {

using json_codec::Json;

bool IsStageLabel(std::string_view label) {
  return std::find(std::begin(kStageLabels), std::end(kStageLabels), label) !=
         std::end(kStageLabels);
}

std::string TrainReport::ToJson() const {
  Json j;
  j["stage"] = stage;
  j["corpus"] = corpus;
  j["regime"] = regime;
  j["seed"] = seed;
  j["examples"] = examples;
  j["steps"] = steps;
  j["trainable_count"] = trainable_count;
  j["loss_curve"] = loss_curve;
  j["epoch_losses"] = epoch_losses;
  j["wall_seconds"] = wall_seconds;
  j["checkpoint"] = checkpoint;
  return j.dump(2) + "\n";
}

namespace {

struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<Eigen::MatrixXd> m, v;
  int64_t t = 0;

  explicit Adam(const ParameterStore& ps, const std::vector<bool>& flags) {
    m.resize(ps.size());
    v.resize(ps.size());
    for (size_t i = 0; i < ps.size(); ++i) {
      if (!flags[i]) continue;
      m[i] = Eigen::MatrixXd::Zero(ps.value(i).rows(), ps.value(i).cols());
      v[i] = m[i];
    }
  }

  void Step(ParameterStore& ps, const GradientBuffer& grads, const std::vector<bool>& flags,
            double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < ps.size(); ++i) {
      if (!flags[i]) continue;
      const Eigen::MatrixXd& g = grads[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g.cwiseProduct(g);
      ps.at(i).value.array() -=
          lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + eps);
    }
  }
};

double LearningRate(const FineTuneConfig& cfg, size_t step, size_t total) {
  const size_t warmup =
      static_cast<size_t>(std::ceil(cfg.warmup_fraction * static_cast<double>(total)));
  if (step < warmup) return cfg.learning_rate * static_cast<double>(step + 1) / warmup;
  if (!cfg.linear_decay || total == warmup) return cfg.learning_rate;
  return cfg.learning_rate * static_cast<double>(total - step) /
         static_cast<double>(total - warmup);
}

}  // namespace

StageResult run_stage(const SpanModel& model, const QADataset& qa, const FineTuneConfig& cfg,
                      uint64_t seed, std::string_view stage_label, const StepCallback& on_step) {
  cfg.Validate();
  if (qa.examples.empty()) {
    throw ConfigError("stage '" + std::string(stage_label) + "' has an empty corpus");
  }
  const auto start_time = std::chrono::steady_clock::now();

  StageResult result{model, {}, {}};
  SpanModel& m = result.model;
  if (cfg.regime == Regime::kAdapters) {
    if (!m.has_adapters()) {
      m.InsertAdapters(*cfg.adapter, DeriveSeed(seed, 2));
    } else if (*m.adapter_config() != *cfg.adapter) {
      throw ConfigError("model already carries adapters with a different configuration");
    }
  }
  if (cfg.reinit_head) m.ReinitializeHead(DeriveSeed(seed, 3));

  result.mask = select_trainable(m, cfg.regime, cfg.bitfit_all_biases);
  const std::vector<bool> flags = MaskFlags(m.parameters(), result.mask);

  TrainReport& report = result.report;
  report.stage = std::string(stage_label);
  report.corpus = qa.name;
  report.regime = std::string(RegimeName(cfg.regime));
  report.seed = seed;
  report.examples = qa.size();
  report.trainable_count = count_trainable(m, result.mask);

  const size_t n = qa.size();
  const size_t batch = static_cast<size_t>(cfg.batch_size);
  const size_t per_epoch = (n + batch - 1) / batch;
  const size_t total = per_epoch * static_cast<size_t>(cfg.epochs);

  Adam adam(m.parameters(), flags);
  Rng rng(DeriveSeed(seed, 1));
  std::vector<size_t> order(n);
  size_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = 0; i < n; ++i) order[i] = i;
    rng.Shuffle(order);
    double epoch_sum = 0.0;
    for (size_t b = 0; b < per_epoch; ++b) {
      const size_t lo = b * batch;
      const size_t hi = std::min(n, lo + batch);
      GradientBuffer grads = m.parameters().ZeroGradients();
      const nn::GradSink sink{&grads, &flags};
      double batch_sum = 0.0;
      for (size_t k = lo; k < hi; ++k) {
        const QAExample& ex = qa.examples[order[k]];
        const double loss = m.LossAndGradient(ex, sink);
        if (!std::isfinite(loss)) {
          throw TrainingError("non-finite loss at " + report.stage + " step " +
                              std::to_string(step) + " (example '" + ex.qid + "')");
        }
        batch_sum += loss;
      }
      const double scale = 1.0 / static_cast<double>(hi - lo);
      for (size_t i = 0; i < grads.size(); ++i) {
        if (flags[i]) grads[i] *= scale;
      }
      adam.Step(m.mutable_parameters(), grads, flags, LearningRate(cfg, step, total));
      report.loss_curve.push_back(batch_sum * scale);
      epoch_sum += batch_sum;
      if (on_step) on_step(step, batch_sum * scale);
      ++step;
    }
    report.epoch_losses.push_back(epoch_sum / static_cast<double>(n));
  }
  report.steps = step;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return result;
}

void StageSchedule::Validate() const {
  if (stages.empty()) throw ConfigError("schedule has no stages");
  for (size_t i = 0; i < stages.size(); ++i) {
    const std::string& label = stages[i].label;
    if (!IsStageLabel(label)) throw ConfigError("unknown stage label '" + label + "'");
    if (label == "stage2" && i + 1 != stages.size()) {
      throw ConfigError("stage2 must be the last stage of a schedule");
    }
    stages[i].config.Validate();
  }
}

uint64_t StageSeed(uint64_t seed, size_t index) { return DeriveSeed(seed, 100 + index); }

ScheduleResult run_schedule(const SpanModel& model, const StageSchedule& schedule,
                            uint64_t seed) {
  schedule.Validate();
  ScheduleResult out{model, {}, {}};
  for (size_t i = 0; i < schedule.stages.size(); ++i) {
    const ScheduleEntry& entry = schedule.stages[i];
    StageResult r = run_stage(out.model, entry.corpus, entry.config, StageSeed(seed, i),
                              entry.label);
    if (!entry.corpus_ref.empty()) r.report.corpus = entry.corpus_ref;
    out.model = std::move(r.model);
    out.reports.push_back(std::move(r.report));
    out.last_mask = std::move(r.mask);
  }
  return out;
}

ScheduleFile parse_schedule_file(std::string_view text, const std::filesystem::path& base_dir) {
  const Json root = json_codec::ParseText(text);
  if (!root.is_object()) throw ParseError("expected a top-level object", 1, "");
  ScheduleFile file;
  if (root.contains("model")) file.model = json_codec::ModelConfigFromJson(root["model"], "model");
  if (root.contains("seed")) file.seed = json_codec::GetIndex(root, "seed", "");
  if (root.contains("mode")) file.mode = ParseContextMode(json_codec::GetString(root, "mode", ""));
  if (root.contains("include_requested")) {
    file.include_requested = json_codec::GetBool(root, "include_requested", "");
  }
  if (root.contains("init_checkpoint")) {
    file.init_checkpoint = base_dir / json_codec::GetString(root, "init_checkpoint", "");
  }
  const Json& stages = json_codec::Field(root, "stages", "");
  if (!stages.is_array()) throw ParseError("expected an array", 0, "stages");
  for (size_t i = 0; i < stages.size(); ++i) {
    const std::string path = "stages[" + std::to_string(i) + "]";
    const Json& s = stages[i];
    ScheduleFile::Stage stage;
    stage.label = json_codec::GetString(s, "label", path);
    stage.corpus = base_dir / json_codec::GetString(s, "corpus", path);
    if (s.contains("fraction")) stage.fraction = ParseFraction(json_codec::GetString(s, "fraction", path));
    if (s.contains("subsample")) stage.subsample = json_codec::GetIndex(s, "subsample", path);
    FineTuneConfig base = stage.label == "stage2" ? FineTuneConfig::Stage2Defaults()
                                                  : FineTuneConfig::Stage1Defaults();
    if (s.contains("regime") && json_codec::GetString(s, "regime", path) == "adapters" &&
        stage.label == "stage2") {
      base = FineTuneConfig::AdapterDefaults();
    }
    stage.config = json_codec::FineTuneConfigFromJson(s, base, path);
    file.stages.push_back(std::move(stage));
  }
  return file;
}

ScheduleFile load_schedule_file(const std::filesystem::path& path) {
  return parse_schedule_file(ReadFile(path), path.parent_path());
}

StageSchedule materialize_schedule(const ScheduleFile& file) {
  StageSchedule schedule;
  for (size_t i = 0; i < file.stages.size(); ++i) {
    const auto& s = file.stages[i];
    const std::string text = ReadFile(s.corpus);
    const Json probe = json_codec::ParseText(text);
    ScheduleEntry entry;
    entry.label = s.label;
    entry.corpus_ref = s.corpus.string();
    entry.config = s.config;
    if (probe.is_object() && probe.contains("turns")) {
      SLDataset ds = parse_sl_json(text);
      if (ds.name.empty()) ds.name = s.corpus.stem().string();
      if (s.fraction) ds = sample_split(ds, *s.fraction, DeriveSeed(file.seed, 200 + i));
      PromptSpec spec = PromptSpec::ForOntology(ds.ontology);
      spec.include_requested = file.include_requested;
      entry.corpus = sl_to_qa(ds, spec, file.mode);
    } else {
      entry.corpus = parse_squad_json(text);
      if (s.fraction) throw ConfigError("fraction applies to SL corpora only");
      if (s.subsample) {
        entry.corpus = subsample_qa(entry.corpus, *s.subsample, DeriveSeed(file.seed, 300 + i));
      }
    }
    schedule.stages.push_back(std::move(entry));
  }
  schedule.Validate();
  return schedule;
}

}  // namespace qasl
