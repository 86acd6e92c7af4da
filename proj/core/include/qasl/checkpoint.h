#ifndef QASL_CHECKPOINT_H_
#define QASL_CHECKPOINT_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "qasl/parameters.h"
#include "qasl/span_model.h"

namespace qasl {

// Binary checkpoint layout:
//   8 bytes  magic "QASLCKPT"
//   u32      format version (1), little endian
//   u64      header length N, little endian
//   N bytes  JSON header: model config, separator, adapter config, the
//            ordered parameter table (path, kind, group, rows, cols) and
//            the trainable mask that produced the weights
//   payload  IEEE-754 doubles, little endian, column-major per tensor, in
//            table order
// Round trips are bitwise.
std::string SerializeCheckpoint(const SpanModel& model, const TrainableMask& provenance);
SpanModel DeserializeCheckpoint(std::string_view bytes, TrainableMask* provenance = nullptr);

void SaveCheckpoint(const std::filesystem::path& path, const SpanModel& model,
                    const TrainableMask& provenance);
SpanModel LoadCheckpoint(const std::filesystem::path& path, TrainableMask* provenance = nullptr);

}  // namespace qasl

#endif  // QASL_CHECKPOINT_H_
