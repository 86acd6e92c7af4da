#include "qasl/corpus.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <set>

#include "json_codec.h"
#include "qasl/errors.h"
#include "qasl/io.h"
#include "qasl/random.h"
#include "qasl/utf8.h"

namespace qasl {

using json_codec::Json;

std::vector<std::string> DatasetViolations(const SLDataset& ds) {
  std::vector<std::string> out;
  std::set<std::string> ids;
  for (const auto& turn : ds.turns) {
    if (!ids.insert(turn.turn_id).second) {
      out.push_back("turn '" + turn.turn_id + "': duplicate turn_id");
    }
    for (const auto& v : validate_turn(turn, ds.ontology)) out.push_back(v.ToString());
  }
  return out;
}

SLDataset parse_sl_json(std::string_view text) {
  const Json root = json_codec::ParseText(text);
  if (!root.is_object()) throw ParseError("expected a top-level object", 1, "");
  SLDataset ds;
  if (root.contains("name")) ds.name = json_codec::GetString(root, "name", "");
  std::string separator(SlotOntology::kDefaultSeparator);
  if (root.contains("separator_token")) {
    separator = json_codec::GetString(root, "separator_token", "");
  }
  ds.ontology = json_codec::OntologyFromJson(json_codec::Field(root, "slots", ""),
                                             separator, "slots");
  const Json& turns = json_codec::Field(root, "turns", "");
  if (!turns.is_array()) throw ParseError("expected an array", 0, "turns");
  ds.turns.reserve(turns.size());
  for (size_t i = 0; i < turns.size(); ++i) {
    ds.turns.push_back(
        json_codec::TurnFromJson(turns[i], "turns[" + std::to_string(i) + "]"));
  }
  auto violations = DatasetViolations(ds);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return ds;
}

std::string emit_sl_json(const SLDataset& ds) {
  Json root;
  root["name"] = ds.name;
  root["separator_token"] = ds.ontology.separator_token();
  root["slots"] = json_codec::OntologyToJson(ds.ontology);
  Json turns = Json::array();
  for (const auto& t : ds.turns) turns.push_back(json_codec::TurnToJson(t));
  root["turns"] = std::move(turns);
  return root.dump(1) + "\n";
}

SLDataset load_sl(const std::filesystem::path& path) {
  SLDataset ds = parse_sl_json(ReadFile(path));
  if (ds.name.empty()) ds.name = path.stem().string();
  return ds;
}

QADataset sl_to_qa(const SLDataset& ds, const PromptSpec& spec, ContextMode mode) {
  QADataset qa;
  qa.name = ds.name;
  qa.examples.reserve(ds.turns.size() * ds.ontology.size());
  for (const auto& turn : ds.turns) {
    auto examples = turn_to_qa(turn, ds.ontology, spec, mode);
    std::move(examples.begin(), examples.end(), std::back_inserter(qa.examples));
  }
  return qa;
}

std::string emit_squad_json(const QADataset& qa) {
  Json paragraphs = Json::array();
  Json* current = nullptr;
  const std::string* current_context = nullptr;
  for (const auto& ex : qa.examples) {
    if (current == nullptr || *current_context != ex.context) {
      Json p;
      p["context"] = ex.context;
      p["qas"] = Json::array();
      paragraphs.push_back(std::move(p));
      current = &paragraphs.back();
      current_context = &ex.context;
    }
    Json q;
    q["id"] = ex.qid;
    q["question"] = ex.question;
    q["is_impossible"] = ex.is_impossible;
    Json answers = Json::array();
    if (!ex.is_impossible) {
      Json a;
      a["text"] = *ex.answer_text;
      a["answer_start"] = *ex.answer_start;
      answers.push_back(std::move(a));
    }
    q["answers"] = std::move(answers);
    (*current)["qas"].push_back(std::move(q));
  }
  Json article;
  article["title"] = qa.name;
  article["paragraphs"] = std::move(paragraphs);
  Json root;
  root["version"] = "v2.0";
  root["data"] = Json::array({std::move(article)});
  return root.dump();
}

QADataset parse_squad_json(std::string_view text) {
  const Json root = json_codec::ParseText(text);
  if (!root.is_object()) throw ParseError("expected a top-level object", 1, "");
  json_codec::GetString(root, "version", "");
  const Json& data = json_codec::Field(root, "data", "");
  if (!data.is_array()) throw ParseError("expected an array", 0, "data");

  QADataset qa;
  std::set<std::string> ids;
  for (size_t d = 0; d < data.size(); ++d) {
    const std::string dp = "data[" + std::to_string(d) + "]";
    const std::string title = json_codec::GetString(data[d], "title", dp);
    if (d == 0) qa.name = title;
    const Json& paragraphs = json_codec::Field(data[d], "paragraphs", dp);
    if (!paragraphs.is_array()) throw ParseError("expected an array", 0, dp + ".paragraphs");
    for (size_t p = 0; p < paragraphs.size(); ++p) {
      const std::string pp = dp + ".paragraphs[" + std::to_string(p) + "]";
      const std::string context = json_codec::GetString(paragraphs[p], "context", pp);
      const Json& qas = json_codec::Field(paragraphs[p], "qas", pp);
      if (!qas.is_array()) throw ParseError("expected an array", 0, pp + ".qas");
      for (size_t k = 0; k < qas.size(); ++k) {
        const std::string qp = pp + ".qas[" + std::to_string(k) + "]";
        QAExample ex;
        ex.qid = json_codec::GetString(qas[k], "id", qp);
        ex.question = json_codec::GetString(qas[k], "question", qp);
        ex.context = context;
        const Json& answers = json_codec::Field(qas[k], "answers", qp);
        if (!answers.is_array()) throw ParseError("expected an array", 0, qp + ".answers");
        ex.is_impossible = qas[k].contains("is_impossible")
                               ? json_codec::GetBool(qas[k], "is_impossible", qp)
                               : answers.empty();
        if (!ex.is_impossible) {
          if (answers.empty()) throw ParseError("answerable question without answers", 0, qp);
          // Multi-reference dev sets: the first reference is used.
          const std::string ap = qp + ".answers[0]";
          ex.answer_text = json_codec::GetString(answers[0], "text", ap);
          ex.answer_start = json_codec::GetIndex(answers[0], "answer_start", ap);
        }
        if (!ids.insert(ex.qid).second) throw ParseError("duplicate id '" + ex.qid + "'", 0, qp);
        if (std::string problem = CheckQAExample(ex); !problem.empty()) {
          throw ParseError(problem, 0, qp);
        }
        qa.examples.push_back(std::move(ex));
      }
    }
  }
  return qa;
}

QADataset load_squad(const std::filesystem::path& path) {
  return parse_squad_json(ReadFile(path));
}

std::string Fraction::ToString() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

Fraction ParseFraction(std::string_view text) {
  auto parse_int = [&](std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ConfigError("invalid fraction '" + std::string(text) + "'");
    }
    return v;
  };
  Fraction f;
  const size_t slash = text.find('/');
  if (slash == std::string_view::npos) {
    f.num = parse_int(text);
  } else {
    f.num = parse_int(text.substr(0, slash));
    f.den = parse_int(text.substr(slash + 1));
  }
  const auto& standard = StandardFractions();
  if (std::find(standard.begin(), standard.end(), f) == standard.end()) {
    throw ConfigError("fraction must be one of 1/128 ... 1, got '" + std::string(text) + "'");
  }
  return f;
}

const std::vector<Fraction>& StandardFractions() {
  static const std::vector<Fraction> kFractions = {
      {1, 128}, {1, 64}, {1, 32}, {1, 16}, {1, 8}, {1, 4}, {1, 2}, {1, 1}};
  return kFractions;
}

namespace {

// Published split sizes, indexed like StandardFractions(). 0 marks a
// fraction the family does not offer.
struct FamilyTable {
  SplitFamily family;
  std::array<size_t, 8> sizes;
};

constexpr std::array<FamilyTable, 5> kPublishedSplits = {{
    {SplitFamily::kRestaurants8k, {64, 128, 256, 512, 1024, 2049, 4099, 8198}},
    {SplitFamily::kBuses, {0, 0, 34, 70, 141, 283, 566, 1133}},
    {SplitFamily::kEvents, {0, 0, 46, 93, 187, 374, 749, 1498}},
    {SplitFamily::kRentalCars, {0, 0, 64, 129, 258, 516, 1032, 2064}},
    {SplitFamily::kHomes, {0, 0, 26, 54, 109, 218, 437, 874}},
}};

size_t FractionIndex(Fraction f) {
  const auto& standard = StandardFractions();
  auto it = std::find(standard.begin(), standard.end(), f);
  if (it == standard.end()) throw ConfigError("unsupported fraction " + f.ToString());
  return static_cast<size_t>(it - standard.begin());
}

}  // namespace

SplitFamily FamilyForName(std::string_view dataset_name) {
  std::string norm;
  for (char c : dataset_name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  auto has = [&](std::string_view key) { return norm.find(key) != std::string::npos; };
  if (has("restaurants8k") || norm == "r8k") return SplitFamily::kRestaurants8k;
  if (has("dstc8") || has("sgd")) {
    if (has("bus")) return SplitFamily::kBuses;
    if (has("event")) return SplitFamily::kEvents;
    if (has("rentalcar")) return SplitFamily::kRentalCars;
    if (has("home")) return SplitFamily::kHomes;
  }
  return SplitFamily::kGeneric;
}

size_t SplitSize(SplitFamily family, size_t n, Fraction fraction) {
  const size_t idx = FractionIndex(fraction);
  for (const auto& table : kPublishedSplits) {
    if (table.family != family) continue;
    if (table.sizes[idx] == 0) {
      throw ConfigError("fraction " + fraction.ToString() +
                        " is not defined for this dataset family");
    }
    if (n == table.sizes.back()) return table.sizes[idx];
  }
  const size_t k = n * static_cast<size_t>(fraction.num) / static_cast<size_t>(fraction.den);
  if (k == 0) {
    throw ConfigError("fraction " + fraction.ToString() + " is larger than the dataset of " +
                      std::to_string(n) + " turns allows");
  }
  return k;
}

SLDataset sample_split(const SLDataset& ds, Fraction fraction, uint64_t seed) {
  const size_t k = SplitSize(FamilyForName(ds.name), ds.size(), fraction);
  if (k >= ds.size()) return ds;
  Rng rng(seed);
  std::vector<size_t> chosen = rng.Permutation(ds.size());
  chosen.resize(k);
  std::sort(chosen.begin(), chosen.end());
  SLDataset out;
  out.name = ds.name;
  out.ontology = ds.ontology;
  out.turns.reserve(k);
  for (size_t i : chosen) out.turns.push_back(ds.turns[i]);
  return out;
}

QADataset subsample_qa(const QADataset& qa, size_t n, uint64_t seed) {
  if (n > qa.size()) {
    throw ConfigError("cannot sample " + std::to_string(n) + " examples from " +
                      std::to_string(qa.size()));
  }
  Rng rng(seed);
  std::vector<size_t> chosen = rng.Permutation(qa.size());
  chosen.resize(n);
  std::sort(chosen.begin(), chosen.end());
  QADataset out;
  out.name = qa.name;
  out.examples.reserve(n);
  for (size_t i : chosen) out.examples.push_back(qa.examples[i]);
  return out;
}

}  // namespace qasl
