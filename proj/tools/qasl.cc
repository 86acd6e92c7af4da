// Command-line front end. Every subcommand accepts --seed and --config; a
// config file is a JSON object with a "seed" key and one object per
// subcommand holding default flag values, e.g.
//   {"seed": 3, "predict": {"mode": "with_system", "threshold": 0.5}}
// Flags given on the command line win over the file.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qasl/auditor.h"
#include "qasl/checkpoint.h"
#include "qasl/corpus.h"
#include "qasl/decoder.h"
#include "qasl/errors.h"
#include "qasl/evaluator.h"
#include "qasl/io.h"
#include "qasl/synthetic.h"
#include "qasl/trainer.h"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// Reads the JSON config layout described at the top of this file.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    const Json root = Json::parse(input);
    if (!root.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    Collect(root, {}, items);
    return items;
  }

 private:
  static std::string Scalar(const Json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }

  static void Collect(const Json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        Collect(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(Scalar(v));
      } else {
        item.inputs.push_back(Scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

void PrintError(const std::string& code, const std::string& message, Json extra = Json::object()) {
  Json j;
  j["error"] = code;
  j["message"] = message;
  for (const auto& [k, v] : extra.items()) j[k] = v;
  std::cerr << j.dump() << "\n";
}

qasl::ContextMode ModeOf(const std::string& s) { return qasl::ParseContextMode(s); }

qasl::PromptSpec SpecFor(const qasl::SLDataset& ds, bool no_requested) {
  qasl::PromptSpec spec = qasl::PromptSpec::ForOntology(ds.ontology);
  spec.include_requested = !no_requested;
  return spec;
}

struct Options {
  uint64_t seed = 0;
  std::string in, out, mode = "user_only";
  bool no_requested = false;
  std::string fraction = "1/128";
  std::string schedule, report, ckpt;
  double threshold = 0.0;
  int max_span = 30;
  std::string preds, gold, subset = "all";
  bool table = false;
  std::string rules, slot_pairs;
  long max_findings = -1;
  size_t n = 0;
  std::string kind = "sl", prefix = "r", name;
  double bare_fraction = 0.25;
};

int RunConvert(const Options& o) {
  const qasl::SLDataset ds = qasl::load_sl(o.in);
  const qasl::QADataset qa = qasl::sl_to_qa(ds, SpecFor(ds, o.no_requested), ModeOf(o.mode));
  qasl::WriteFileAtomic(o.out, qasl::emit_squad_json(qa));
  return 0;
}

int RunSplit(const Options& o) {
  const qasl::SLDataset ds = qasl::load_sl(o.in);
  const qasl::Fraction smallest = qasl::ParseFraction(o.fraction);
  const qasl::SplitFamily family = qasl::FamilyForName(ds.name);
  fs::create_directories(o.out);
  const std::string stem = fs::path(o.in).stem().string();
  Json manifest;
  manifest["source"] = fs::path(o.in).filename().string();
  manifest["seed"] = o.seed;
  Json files = Json::array();
  for (const auto& f : qasl::StandardFractions()) {
    if (f.value() < smallest.value()) continue;
    qasl::SplitSize(family, ds.size(), f);  // rejects fractions the family lacks
    const qasl::SLDataset split = qasl::sample_split(ds, f, o.seed);
    const std::string file =
        stem + "_" + std::to_string(f.num) + "_" + std::to_string(f.den) + ".json";
    qasl::WriteFileAtomic(fs::path(o.out) / file, qasl::emit_sl_json(split));
    files.push_back({{"fraction", f.ToString()}, {"file", file}, {"turns", split.size()}});
  }
  manifest["splits"] = std::move(files);
  qasl::WriteFileAtomic(fs::path(o.out) / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

int RunTrain(const Options& o, bool seed_given) {
  qasl::ScheduleFile file = qasl::load_schedule_file(o.schedule);
  if (seed_given) file.seed = o.seed;
  const qasl::StageSchedule schedule = qasl::materialize_schedule(file);
  const qasl::SpanModel initial = file.init_checkpoint
                                      ? qasl::LoadCheckpoint(*file.init_checkpoint)
                                      : qasl::SpanModel(file.model, qasl::DeriveSeed(file.seed, 0));
  qasl::ScheduleResult result = qasl::run_schedule(initial, schedule, file.seed);
  qasl::SaveCheckpoint(o.out, result.model, result.last_mask);
  Json reports = Json::array();
  for (auto& r : result.reports) {
    r.checkpoint = o.out;
    reports.push_back(Json::parse(r.ToJson()));
  }
  const std::string report_path = o.report.empty() ? o.out + ".report.json" : o.report;
  qasl::WriteFileAtomic(report_path, reports.dump(2) + "\n");
  return 0;
}

int RunPredict(const Options& o) {
  const qasl::SpanModel model = qasl::LoadCheckpoint(o.ckpt);
  const qasl::SLDataset ds = qasl::load_sl(o.in);
  qasl::DecodeConfig cfg;
  cfg.no_answer_threshold = o.threshold;
  cfg.max_span_tokens = o.max_span;
  const auto preds =
      qasl::predict_turns(model, ds, SpecFor(ds, o.no_requested), ModeOf(o.mode), cfg);
  qasl::WriteFileAtomic(o.out, qasl::emit_predictions_jsonl(preds));
  return 0;
}

int RunEval(const Options& o) {
  const auto preds = qasl::parse_predictions_jsonl(qasl::ReadFile(o.preds));
  const qasl::SLDataset ds = qasl::load_sl(o.gold);
  qasl::TurnFilter filter;
  if (o.subset == "requested") {
    filter = qasl::RequestedNonEmpty();
  } else if (o.subset != "all") {
    throw qasl::ConfigError("subset must be 'all' or 'requested'");
  }
  const qasl::MetricsReport report = qasl::evaluate(preds, ds, filter, o.subset);
  if (o.out.empty()) {
    std::cout << report.ToJson();
  } else {
    qasl::WriteFileAtomic(o.out, report.ToJson());
  }
  if (o.table) std::cout << report.ToTable();
  return 0;
}

int RunAudit(const Options& o) {
  const qasl::SLDataset ds = qasl::load_sl(o.in);
  qasl::AuditOptions options;
  if (!o.rules.empty()) options.rules = qasl::ParseRuleList(o.rules);
  std::stringstream pairs(o.slot_pairs);
  std::string pair;
  while (std::getline(pairs, pair, ',')) {
    const size_t colon = pair.find(':');
    if (colon == std::string::npos) throw qasl::ConfigError("slot pair must be 'a:b'");
    options.slot_pairs.emplace_back(pair.substr(0, colon), pair.substr(colon + 1));
  }
  if (!options.slot_pairs.empty() && o.rules.empty()) {
    options.rules.insert(qasl::AllRules().begin(), qasl::AllRules().end());
  }
  const qasl::AuditReport report = qasl::audit(ds, options);
  if (o.out.empty()) {
    std::cout << report.ToJson();
  } else {
    qasl::WriteFileAtomic(o.out, report.ToJson());
  }
  if (o.table) std::cout << report.ToTable();
  if (o.max_findings >= 0 && report.findings.size() > static_cast<size_t>(o.max_findings)) {
    std::cerr << Json{{"error", "audit_threshold"},
                      {"message", std::to_string(report.findings.size()) +
                                      " findings exceed the threshold of " +
                                      std::to_string(o.max_findings)}}
                     .dump()
              << "\n";
    return 3;
  }
  return 0;
}

int RunSubsample(const Options& o) {
  const qasl::QADataset qa = qasl::load_squad(o.in);
  qasl::WriteFileAtomic(o.out, qasl::emit_squad_json(qasl::subsample_qa(qa, o.n, o.seed)));
  return 0;
}

int RunSynth(const Options& o) {
  if (o.kind == "sl") {
    qasl::SyntheticSLOptions opts;
    if (o.n) opts.turns = o.n;
    if (!o.name.empty()) opts.name = o.name;
    opts.id_prefix = o.prefix;
    opts.bare_number_fraction = o.bare_fraction;
    qasl::WriteFileAtomic(o.out, qasl::emit_sl_json(qasl::generate_restaurant_sl(opts, o.seed)));
  } else if (o.kind == "qa") {
    qasl::SyntheticQAOptions opts;
    if (o.n) opts.examples = o.n;
    if (!o.name.empty()) opts.name = o.name;
    qasl::WriteFileAtomic(o.out, qasl::emit_squad_json(qasl::generate_generic_qa(opts, o.seed)));
  } else {
    throw qasl::ConfigError("kind must be 'sl' or 'qa'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slot labelling as extractive question answering", "qasl"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with default flag values");
  app.require_subcommand(1);

  Options o;
  auto* seed_opt = app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  // Subcommands see --seed too, so it can follow the subcommand name.
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Random seed");
    return sub;
  };
  auto add_mode = [&](CLI::App* sub) {
    sub->add_option("--mode", o.mode, "user_only or with_system")->capture_default_str();
    sub->add_flag("--no-requested", o.no_requested, "Leave requested slots out of questions");
  };

  auto* convert = add_seed(app.add_subcommand("convert", "SL dataset to SQuAD2.0 JSON"));
  convert->add_option("--in", o.in, "SL JSON")->required()->check(CLI::ExistingFile);
  convert->add_option("--out", o.out, "SQuAD JSON output")->required();
  add_mode(convert);

  auto* split = add_seed(app.add_subcommand("split", "Nested few-shot splits"));
  split->add_option("--in", o.in, "SL JSON")->required()->check(CLI::ExistingFile);
  split->add_option("--fraction", o.fraction, "Smallest fraction to emit")->capture_default_str();
  split->add_option("--out", o.out, "Output directory")->required();

  auto* train = add_seed(app.add_subcommand("train", "Run a training schedule"));
  train->add_option("--schedule", o.schedule, "Schedule JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "Checkpoint output")->required();
  train->add_option("--report", o.report, "Report JSON (default <out>.report.json)");

  auto* predict = add_seed(app.add_subcommand("predict", "Decode every turn and slot"));
  predict->add_option("--ckpt", o.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("--in", o.in, "SL JSON")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", o.out, "Predictions JSONL")->required();
  predict->add_option("--threshold", o.threshold, "No-answer margin tau")->capture_default_str();
  predict->add_option("--max-span", o.max_span, "Longest span in tokens")->capture_default_str();
  add_mode(predict);

  auto* eval = add_seed(app.add_subcommand("eval", "Per-slot and macro F1"));
  eval->add_option("--preds", o.preds, "Predictions JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--gold", o.gold, "Gold SL JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--subset", o.subset, "all or requested")->capture_default_str();
  eval->add_option("--out", o.out, "Metrics JSON")->required();
  eval->add_flag("--table", o.table, "Print a table to stdout");

  auto* audit = add_seed(app.add_subcommand("audit", "Annotation consistency audit"));
  audit->add_option("--in", o.in, "SL JSON")->required()->check(CLI::ExistingFile);
  audit->add_option("--rules", o.rules, "Comma-separated rule ids, or 'all'");
  audit->add_option("--slot-pairs", o.slot_pairs, "Comma-separated a:b slot pairs");
  audit->add_option("--out", o.out, "Report JSON (stdout when absent)");
  audit->add_option("--max-findings", o.max_findings, "Exit 3 above this many findings");
  audit->add_flag("--table", o.table, "Print a table to stdout");

  auto* subsample = add_seed(app.add_subcommand("subsample", "Sample a SQuAD corpus"));
  subsample->add_option("--in", o.in, "SQuAD JSON")->required()->check(CLI::ExistingFile);
  subsample->add_option("--n", o.n, "Examples to keep")->required();
  subsample->add_option("--out", o.out, "SQuAD JSON output")->required();

  auto* synth = add_seed(app.add_subcommand("synth", "Generate synthetic corpora"));
  synth->add_option("--kind", o.kind, "sl or qa")->capture_default_str();
  synth->add_option("--n", o.n, "Turns (sl) or examples (qa)");
  synth->add_option("--name", o.name, "Dataset name");
  synth->add_option("--prefix", o.prefix, "Turn id prefix (sl)")->capture_default_str();
  synth->add_option("--bare-fraction", o.bare_fraction, "Share of bare-number turns (sl)")
      ->capture_default_str();
  synth->add_option("--out", o.out, "Output JSON")->required();

  // --config belongs to the top-level app; move it in front of the
  // subcommand so it may be written anywhere on the line.
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> hoisted;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      hoisted.insert(hoisted.end(), {args[i], args[i + 1]});
      args.erase(args.begin() + i, args.begin() + i + 2);
      --i;
    } else if (args[i].rfind("--config=", 0) == 0) {
      hoisted.push_back(args[i]);
      args.erase(args.begin() + i);
      --i;
    }
  }
  args.insert(args.begin(), hoisted.begin(), hoisted.end());
  std::reverse(args.begin(), args.end());

  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    PrintError("usage_error", e.what());
    return 2;
  } catch (const std::exception& e) {
    PrintError("config_error", e.what());
    return 2;
  }

  bool seed_given = seed_opt->count() > 0;
  for (auto* sub : app.get_subcommands()) seed_given = seed_given || sub->count("--seed") > 0;

  try {
    if (*convert) return RunConvert(o);
    if (*split) return RunSplit(o);
    if (*train) return RunTrain(o, seed_given);
    if (*predict) return RunPredict(o);
    if (*eval) return RunEval(o);
    if (*audit) return RunAudit(o);
    if (*subsample) return RunSubsample(o);
    if (*synth) return RunSynth(o);
  } catch (const qasl::ParseError& e) {
    PrintError(e.code(), e.what(), {{"line", e.line()}, {"field", e.field()}});
    return 1;
  } catch (const qasl::ValidationError& e) {
    PrintError(e.code(), e.what(), {{"violations", e.violations()}});
    return 1;
  } catch (const qasl::Error& e) {
    PrintError(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    PrintError("internal_error", e.what());
    return 1;
  }
  return 0;
}
