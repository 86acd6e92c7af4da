#ifndef QASL_SYNTHETIC_H_
#define QASL_SYNTHETIC_H_

#include <cstdint>
#include <string>

#include "qasl/corpus.h"

namespace qasl {

// Templated restaurant-booking turns with slots date, time, people,
// first_name and last_name. A share of turns answer a system request with
// a bare number or a bare name, which only the requested slot resolves.
struct SyntheticSLOptions {
  std::string name = "restaurants-synth";
  std::string id_prefix = "r";
  size_t turns = 500;
  double bare_number_fraction = 0.25;
  double bare_name_fraction = 0.10;
};

SlotOntology RestaurantOntology();
SLDataset generate_restaurant_sl(const SyntheticSLOptions& options, uint64_t seed);

// SQuAD2.0-style reading comprehension over short event descriptions
// (hosts, party sizes, dates, times). Used as a QA-tuning corpus.
struct SyntheticQAOptions {
  std::string name = "generic-qa-synth";
  size_t examples = 2000;
  double unanswerable_fraction = 0.25;
};

QADataset generate_generic_qa(const SyntheticQAOptions& options, uint64_t seed);

}  // namespace qasl

#endif  // QASL_SYNTHETIC_H_
