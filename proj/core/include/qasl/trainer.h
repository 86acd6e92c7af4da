#ifndef QASL_TRAINER_H_
#define QASL_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qasl/corpus.h"
#include "qasl/span_model.h"
#include "qasl/types.h"

namespace qasl {

// Stage labels a schedule may use.
inline constexpr std::string_view kStageLabels[] = {"stage1a", "stage1b", "stage1", "stage2"};
bool IsStageLabel(std::string_view label);

struct TrainReport {
  std::string stage;
  std::string corpus;
  std::string regime;
  uint64_t seed = 0;
  size_t examples = 0;
  size_t steps = 0;
  size_t trainable_count = 0;
  std::vector<double> loss_curve;    // mean batch loss per optimizer step
  std::vector<double> epoch_losses;  // mean example loss per epoch
  double wall_seconds = 0.0;
  std::string checkpoint;  // filled in by whoever saves the model

  std::string ToJson() const;
};

struct StageResult {
  SpanModel model;
  TrainReport report;
  TrainableMask mask;
};

// Called after every optimizer step with (step index, batch loss).
using StepCallback = std::function<void(size_t, double)>;

// Adam over the parameters select_trainable picks for cfg.regime, for
// exactly epochs * ceil(N / batch_size) steps. The adapters regime inserts
// adapters first when the model has none. Throws TrainingError on a
// non-finite loss and ConfigError on an empty corpus or an incompatible
// model.
StageResult run_stage(const SpanModel& model, const QADataset& qa, const FineTuneConfig& cfg,
                      uint64_t seed, std::string_view stage_label = "stage2",
                      const StepCallback& on_step = nullptr);

struct ScheduleEntry {
  std::string label;
  std::string corpus_ref;  // for reports
  QADataset corpus;
  FineTuneConfig config;
};

// Non-empty; labels drawn from kStageLabels; at most one stage2, and only
// in the last position.
struct StageSchedule {
  std::vector<ScheduleEntry> stages;

  void Validate() const;  // ConfigError
};

// Seed handed to stage `index` of a schedule run with `seed`.
uint64_t StageSeed(uint64_t seed, size_t index);

struct ScheduleResult {
  SpanModel model;
  std::vector<TrainReport> reports;
  TrainableMask last_mask;
};

// Applies the stages in order, each starting from the previous output.
ScheduleResult run_schedule(const SpanModel& model, const StageSchedule& schedule,
                            uint64_t seed);

// On-disk schedule file (JSON). See docs/schedule.schema.json.
struct ScheduleFile {
  struct Stage {
    std::string label;
    std::filesystem::path corpus;  // SL or SQuAD JSON; relative to the file
    std::optional<Fraction> fraction;  // SL corpora only
    std::optional<size_t> subsample;   // SQuAD corpora only
    FineTuneConfig config;
  };
  ModelConfig model;
  uint64_t seed = 0;
  ContextMode mode = ContextMode::kUserOnly;
  bool include_requested = true;
  std::optional<std::filesystem::path> init_checkpoint;
  std::vector<Stage> stages;
};

ScheduleFile parse_schedule_file(std::string_view text,
                                 const std::filesystem::path& base_dir = {});
ScheduleFile load_schedule_file(const std::filesystem::path& path);

// Loads every corpus and converts SL data to QA form.
StageSchedule materialize_schedule(const ScheduleFile& file);

}  // namespace qasl

#endif  // QASL_TRAINER_H_
