#include "qasl/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>

#include "json_codec.h"
#include "qasl/errors.h"
#include "qasl/io.h"

namespace qasl {
namespace {

using json_codec::Json;

constexpr char kMagic[8] = {'Q', 'A', 'S', 'L', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void Append(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T Read(std::string_view bytes, size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw ParseError("truncated checkpoint", 0, "");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string SerializeCheckpoint(const SpanModel& model, const TrainableMask& provenance) {
  Json header;
  header["format"] = "qasl-checkpoint";
  header["encoder"] = std::string(model.encoder().kind());
  header["model_config"] = json_codec::ModelConfigToJson(model.config());
  header["separator_token"] = model.separator();
  header["adapter"] = model.adapter_config()
                          ? json_codec::AdapterConfigToJson(*model.adapter_config())
                          : Json(nullptr);
  Json table = Json::array();
  const ParameterStore& ps = model.parameters();
  for (size_t i = 0; i < ps.size(); ++i) {
    const auto& spec = ps.at(i).spec;
    table.push_back({{"path", spec.path},
                     {"kind", std::string(ParamKindName(spec.kind))},
                     {"group", std::string(ParamGroupName(spec.group))},
                     {"rows", spec.rows},
                     {"cols", spec.cols}});
  }
  header["parameters"] = std::move(table);
  header["trainable_mask"] = Json(provenance.paths);
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  Append<uint32_t>(out, kVersion);
  Append<uint64_t>(out, header_text.size());
  out += header_text;
  for (size_t i = 0; i < ps.size(); ++i) {
    const auto& v = ps.value(i);
    out.append(reinterpret_cast<const char*>(v.data()),
               sizeof(double) * static_cast<size_t>(v.size()));
  }
  return out;
}

SpanModel DeserializeCheckpoint(std::string_view bytes, TrainableMask* provenance) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a qasl checkpoint", 0, "");
  }
  size_t pos = sizeof(kMagic);
  const auto version = Read<uint32_t>(bytes, pos);
  if (version != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version), 0, "");
  }
  const auto header_len = Read<uint64_t>(bytes, pos);
  if (pos + header_len > bytes.size()) throw ParseError("truncated checkpoint header", 0, "");
  const Json header = json_codec::ParseText(bytes.substr(pos, header_len));
  pos += header_len;

  const ModelConfig cfg =
      json_codec::ModelConfigFromJson(json_codec::Field(header, "model_config", ""), "model_config");
  const std::string separator = json_codec::GetString(header, "separator_token", "");
  std::optional<AdapterConfig> adapters;
  if (header.contains("adapter") && !header["adapter"].is_null()) {
    adapters = json_codec::AdapterConfigFromJson(header["adapter"], "adapter");
  }
  ParameterStore store;
  const Json& table = json_codec::Field(header, "parameters", "");
  for (size_t i = 0; i < table.size(); ++i) {
    const std::string p = "parameters[" + std::to_string(i) + "]";
    ParameterSpec spec;
    spec.path = json_codec::GetString(table[i], "path", p);
    spec.kind = ParseParamKind(json_codec::GetString(table[i], "kind", p));
    spec.group = ParseParamGroup(json_codec::GetString(table[i], "group", p));
    spec.rows = static_cast<int>(json_codec::GetIndex(table[i], "rows", p));
    spec.cols = static_cast<int>(json_codec::GetIndex(table[i], "cols", p));
    const size_t idx = store.Add(spec);
    const size_t nbytes = sizeof(double) * spec.count();
    if (pos + nbytes > bytes.size()) throw ParseError("truncated checkpoint payload", 0, p);
    std::memcpy(store.at(idx).value.data(), bytes.data() + pos, nbytes);
    pos += nbytes;
  }
  if (pos != bytes.size()) throw ParseError("trailing bytes after checkpoint payload", 0, "");
  if (provenance != nullptr) {
    provenance->paths.clear();
    for (const auto& p : json_codec::Field(header, "trainable_mask", "")) {
      provenance->paths.insert(p.get<std::string>());
    }
  }
  return SpanModel(cfg, separator, adapters, std::move(store));
}

void SaveCheckpoint(const std::filesystem::path& path, const SpanModel& model,
                    const TrainableMask& provenance) {
  WriteFileAtomic(path, SerializeCheckpoint(model, provenance));
}

SpanModel LoadCheckpoint(const std::filesystem::path& path, TrainableMask* provenance) {
  return DeserializeCheckpoint(ReadFile(path), provenance);
}

}  // namespace qasl
