#include "json_codec.h"

#include <algorithm>

#include "qasl/errors.h"

namespace qasl::json_codec {

int LineOfByte(std::string_view text, size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + byte, '\n'));
}

Json ParseText(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    const size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    throw ParseError(std::string("malformed JSON: ") + e.what(),
                     LineOfByte(text, byte), "");
  }
}

const Json& Field(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError("expected an object", 0, path);
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(std::string("missing field '") + key + "'", 0, path);
  }
  return *it;
}

std::string GetString(const Json& obj, const char* key, const std::string& path) {
  const Json& v = Field(obj, key, path);
  if (!v.is_string()) throw ParseError("expected a string", 0, path + "." + key);
  return v.get<std::string>();
}

size_t GetIndex(const Json& obj, const char* key, const std::string& path) {
  const Json& v = Field(obj, key, path);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError("expected a non-negative integer", 0, path + "." + key);
  }
  return v.get<size_t>();
}

double GetNumber(const Json& obj, const char* key, const std::string& path) {
  const Json& v = Field(obj, key, path);
  if (!v.is_number()) throw ParseError("expected a number", 0, path + "." + key);
  return v.get<double>();
}

bool GetBool(const Json& obj, const char* key, const std::string& path) {
  const Json& v = Field(obj, key, path);
  if (!v.is_boolean()) throw ParseError("expected a boolean", 0, path + "." + key);
  return v.get<bool>();
}

Json TurnToJson(const DialogTurn& turn) {
  Json j;
  j["turn_id"] = turn.turn_id;
  if (turn.system_text) j["system_text"] = *turn.system_text;
  j["user_text"] = turn.user_text;
  j["requested_slots"] = turn.requested_slots;
  Json labels = Json::array();
  for (const auto& l : turn.gold_labels) {
    Json lj;
    lj["slot"] = l.slot;
    lj["start"] = l.start;
    lj["end"] = l.end;
    lj["value"] = l.value;
    labels.push_back(std::move(lj));
  }
  j["labels"] = std::move(labels);
  return j;
}

DialogTurn TurnFromJson(const Json& j, const std::string& path) {
  DialogTurn turn;
  turn.turn_id = GetString(j, "turn_id", path);
  if (j.contains("system_text") && !j["system_text"].is_null()) {
    turn.system_text = GetString(j, "system_text", path);
  }
  turn.user_text = GetString(j, "user_text", path);
  if (j.contains("requested_slots")) {
    const Json& req = j["requested_slots"];
    if (!req.is_array()) throw ParseError("expected an array", 0, path + ".requested_slots");
    for (size_t i = 0; i < req.size(); ++i) {
      if (!req[i].is_string()) {
        throw ParseError("expected a string", 0,
                         path + ".requested_slots[" + std::to_string(i) + "]");
      }
      turn.requested_slots.push_back(req[i].get<std::string>());
    }
  }
  if (j.contains("labels")) {
    const Json& labels = j["labels"];
    if (!labels.is_array()) throw ParseError("expected an array", 0, path + ".labels");
    for (size_t i = 0; i < labels.size(); ++i) {
      const std::string lp = path + ".labels[" + std::to_string(i) + "]";
      SpanLabel l;
      l.slot = GetString(labels[i], "slot", lp);
      l.start = GetIndex(labels[i], "start", lp);
      l.end = GetIndex(labels[i], "end", lp);
      l.value = GetString(labels[i], "value", lp);
      turn.gold_labels.push_back(std::move(l));
    }
  }
  return turn;
}

Json OntologyToJson(const SlotOntology& ontology) {
  Json slots = Json::object();
  for (const auto& s : ontology.slots()) {
    Json sj;
    sj["questions"] = s.questions;
    sj["kind"] = std::string(SlotKindName(s.kind));
    slots[s.name] = std::move(sj);
  }
  return slots;
}

SlotOntology OntologyFromJson(const Json& slots, const std::string& separator,
                              const std::string& path) {
  if (!slots.is_object()) throw ParseError("expected an object", 0, path);
  SlotOntology ontology;
  try {
    ontology.set_separator_token(separator);
  } catch (const ValidationError&) {
    throw ParseError("separator token is empty", 0, "separator_token");
  }
  for (auto it = slots.begin(); it != slots.end(); ++it) {
    const std::string sp = path + "." + it.key();
    SlotDefinition def;
    def.name = it.key();
    const Json* questions = &it.value();
    if (it.value().is_object()) {
      questions = &Field(it.value(), "questions", sp);
      if (it.value().contains("kind")) {
        const std::string kind = GetString(it.value(), "kind", sp);
        auto parsed = ParseSlotKind(kind);
        if (!parsed) throw ParseError("unknown slot kind '" + kind + "'", 0, sp + ".kind");
        def.kind = *parsed;
      }
    }
    if (questions->is_string()) {
      def.questions.push_back(questions->get<std::string>());
    } else if (questions->is_array()) {
      for (size_t i = 0; i < questions->size(); ++i) {
        if (!(*questions)[i].is_string()) {
          throw ParseError("expected a string", 0, sp + "[" + std::to_string(i) + "]");
        }
        def.questions.push_back((*questions)[i].get<std::string>());
      }
    } else {
      throw ParseError("expected a question string or list", 0, sp);
    }
    try {
      ontology.AddSlot(std::move(def));
    } catch (const ValidationError& e) {
      throw ParseError(e.violations().front(), 0, sp);
    }
  }
  return ontology;
}

Json PredictionToJson(const SpanPrediction& pred) {
  Json j;
  j["qid"] = pred.qid;
  if (pred.has_answer()) {
    j["text"] = *pred.text;
    j["start"] = *pred.start;
    j["end"] = *pred.end;
  } else {
    j["text"] = nullptr;
    j["start"] = nullptr;
    j["end"] = nullptr;
  }
  j["score"] = pred.score;
  j["no_answer_score"] = pred.no_answer_score;
  return j;
}

SpanPrediction PredictionFromJson(const Json& j, const std::string& path) {
  SpanPrediction p;
  p.qid = GetString(j, "qid", path);
  const bool has_text = j.contains("text") && !j["text"].is_null();
  const bool has_start = j.contains("start") && !j["start"].is_null();
  const bool has_end = j.contains("end") && !j["end"].is_null();
  if (has_text != has_start || has_start != has_end) {
    throw ParseError("text, start and end must be all present or all null", 0, path);
  }
  if (has_text) {
    p.text = GetString(j, "text", path);
    p.start = GetIndex(j, "start", path);
    p.end = GetIndex(j, "end", path);
    if (*p.start >= *p.end) throw ParseError("start must be < end", 0, path);
  }
  if (j.contains("score")) p.score = GetNumber(j, "score", path);
  if (j.contains("no_answer_score")) p.no_answer_score = GetNumber(j, "no_answer_score", path);
  return p;
}

Json ModelConfigToJson(const ModelConfig& cfg) {
  Json j;
  j["hidden_size"] = cfg.hidden_size;
  j["num_layers"] = cfg.num_layers;
  j["num_heads"] = cfg.num_heads;
  j["ffn_size"] = cfg.ffn_size;
  j["vocab_size"] = cfg.vocab_size;
  j["max_positions"] = cfg.max_positions;
  j["head_variant"] = std::string(HeadVariantName(cfg.head_variant));
  j["head_hidden_size"] = cfg.head_hidden_size;
  j["tokenizer"] = cfg.tokenizer;
  j["init_stddev"] = cfg.init_stddev;
  return j;
}

namespace {

int GetInt(const Json& j, const char* key, const std::string& path, int fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j[key];
  if (!v.is_number_integer()) throw ParseError("expected an integer", 0, path + "." + key);
  return v.get<int>();
}

double GetDouble(const Json& j, const char* key, const std::string& path,
                 double fallback) {
  if (!j.contains(key)) return fallback;
  return GetNumber(j, key, path);
}

}  // namespace

ModelConfig ModelConfigFromJson(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError("expected an object", 0, path);
  ModelConfig cfg;
  cfg.hidden_size = GetInt(j, "hidden_size", path, cfg.hidden_size);
  cfg.num_layers = GetInt(j, "num_layers", path, cfg.num_layers);
  cfg.num_heads = GetInt(j, "num_heads", path, cfg.num_heads);
  cfg.ffn_size = GetInt(j, "ffn_size", path, cfg.ffn_size);
  cfg.vocab_size = GetInt(j, "vocab_size", path, cfg.vocab_size);
  cfg.max_positions = GetInt(j, "max_positions", path, cfg.max_positions);
  if (j.contains("head_variant")) {
    cfg.head_variant = ParseHeadVariant(GetString(j, "head_variant", path));
  }
  cfg.head_hidden_size = GetInt(j, "head_hidden_size", path, cfg.head_hidden_size);
  if (j.contains("tokenizer")) cfg.tokenizer = GetString(j, "tokenizer", path);
  cfg.init_stddev = GetDouble(j, "init_stddev", path, cfg.init_stddev);
  cfg.Validate();
  return cfg;
}

Json AdapterConfigToJson(const AdapterConfig& cfg) {
  Json j;
  j["default_reduction_factor"] = cfg.default_reduction_factor;
  j["boundary_reduction_factor"] = cfg.boundary_reduction_factor;
  j["nonlinearity"] = std::string(NonlinearityName(cfg.nonlinearity));
  return j;
}

AdapterConfig AdapterConfigFromJson(const Json& j, const std::string& path) {
  AdapterConfig cfg;
  if (j.is_null()) return cfg;
  if (!j.is_object()) throw ParseError("expected an object", 0, path);
  cfg.default_reduction_factor =
      GetInt(j, "default_reduction_factor", path, cfg.default_reduction_factor);
  cfg.boundary_reduction_factor =
      GetInt(j, "boundary_reduction_factor", path, cfg.boundary_reduction_factor);
  if (j.contains("nonlinearity")) {
    cfg.nonlinearity = ParseNonlinearity(GetString(j, "nonlinearity", path));
  }
  return cfg;
}

Json FineTuneConfigToJson(const FineTuneConfig& cfg) {
  Json j;
  j["regime"] = std::string(RegimeName(cfg.regime));
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  if (cfg.adapter) j["adapter"] = AdapterConfigToJson(*cfg.adapter);
  j["no_answer_threshold"] = cfg.no_answer_threshold;
  j["warmup_fraction"] = cfg.warmup_fraction;
  j["linear_decay"] = cfg.linear_decay;
  j["bitfit_all_biases"] = cfg.bitfit_all_biases;
  j["reinit_head"] = cfg.reinit_head;
  return j;
}

FineTuneConfig FineTuneConfigFromJson(const Json& j, FineTuneConfig cfg,
                                      const std::string& path) {
  if (!j.is_object()) throw ParseError("expected an object", 0, path);
  if (j.contains("regime")) {
    cfg.regime = ParseRegime(GetString(j, "regime", path));
    if (cfg.regime == Regime::kAdapters) {
      if (!cfg.adapter) cfg.adapter = AdapterConfig{};
    } else {
      cfg.adapter.reset();
    }
  }
  cfg.learning_rate = GetDouble(j, "learning_rate", path, cfg.learning_rate);
  cfg.batch_size = GetInt(j, "batch_size", path, cfg.batch_size);
  cfg.epochs = GetInt(j, "epochs", path, cfg.epochs);
  if (j.contains("adapter")) cfg.adapter = AdapterConfigFromJson(j["adapter"], path + ".adapter");
  cfg.no_answer_threshold =
      GetDouble(j, "no_answer_threshold", path, cfg.no_answer_threshold);
  cfg.warmup_fraction = GetDouble(j, "warmup_fraction", path, cfg.warmup_fraction);
  if (j.contains("linear_decay")) cfg.linear_decay = GetBool(j, "linear_decay", path);
  if (j.contains("bitfit_all_biases")) {
    cfg.bitfit_all_biases = GetBool(j, "bitfit_all_biases", path);
  }
  if (j.contains("reinit_head")) cfg.reinit_head = GetBool(j, "reinit_head", path);
  return cfg;
}

}  // namespace qasl::json_codec
