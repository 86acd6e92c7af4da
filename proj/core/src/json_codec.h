// Private JSON helpers shared by the core translation units.
#ifndef QASL_SRC_JSON_CODEC_H_
#define QASL_SRC_JSON_CODEC_H_

#include <string>
#include <string_view>

#include "json.hpp"
#include "qasl/types.h"

namespace qasl::json_codec {

using Json = nlohmann::ordered_json;

// Parses text, converting nlohmann errors into ParseError with a line.
Json ParseText(std::string_view text);

int LineOfByte(std::string_view text, size_t byte);

const Json& Field(const Json& obj, const char* key, const std::string& path);
std::string GetString(const Json& obj, const char* key, const std::string& path);
size_t GetIndex(const Json& obj, const char* key, const std::string& path);
double GetNumber(const Json& obj, const char* key, const std::string& path);
bool GetBool(const Json& obj, const char* key, const std::string& path);

Json TurnToJson(const DialogTurn& turn);
DialogTurn TurnFromJson(const Json& j, const std::string& path);

Json OntologyToJson(const SlotOntology& ontology);
SlotOntology OntologyFromJson(const Json& slots, const std::string& separator,
                              const std::string& path);

Json PredictionToJson(const SpanPrediction& pred);
SpanPrediction PredictionFromJson(const Json& j, const std::string& path);

Json ModelConfigToJson(const ModelConfig& cfg);
ModelConfig ModelConfigFromJson(const Json& j, const std::string& path);

Json AdapterConfigToJson(const AdapterConfig& cfg);
AdapterConfig AdapterConfigFromJson(const Json& j, const std::string& path);

Json FineTuneConfigToJson(const FineTuneConfig& cfg);
// Missing keys keep the values already in `base`.
FineTuneConfig FineTuneConfigFromJson(const Json& j, FineTuneConfig base,
                                      const std::string& path);

}  // namespace qasl::json_codec

#endif  // QASL_SRC_JSON_CODEC_H_
