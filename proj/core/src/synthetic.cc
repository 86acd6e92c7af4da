#include "qasl/synthetic.h"

#include <cmath>
#include <cstdio>
#include <map>
#include <span>

#include "qasl/errors.h"
#include "qasl/random.h"
#include "qasl/utf8.h"

namespace qasl {

namespace {

constexpr const char* kFirstNames[] = {"Anna", "Peter", "Maria", "David", "Sofia", "Lukas",
                                       "Emma", "Oliver", "Chloe", "Mateo", "Nina", "Samuel",
                                       "Ines", "Hugo", "Clara", "Felix"};
constexpr const char* kLastNames[] = {"Novak", "Garcia", "Schmidt", "Rossi", "Kowalski",
                                      "Dubois", "Jensen", "Moreau", "Silva", "Fischer",
                                      "Horvat", "Weber", "Costa", "Lindqvist", "Bauer", "Petrov"};
// Usable as either a first or a last name; only bare-name replies use them.
constexpr const char* kSharedNames[] = {"Taylor", "Morgan", "Jordan", "Lee",    "Grant",
                                        "James",  "Parker", "Casey",  "Quinn",  "Reese",
                                        "Riley",  "Avery"};
constexpr const char* kWeekdays[] = {"monday", "tuesday", "wednesday", "thursday",
                                     "friday", "saturday", "sunday"};
constexpr const char* kMonths[] = {"january", "february", "march",     "april",   "may",
                                   "june",    "july",     "august",    "september", "october",
                                   "november", "december"};
constexpr const char* kNumberWords[] = {"one", "two",   "three", "four", "five",  "six",
                                        "seven", "eight", "nine", "ten", "eleven", "twelve"};

template <typename T, size_t N>
const T& Pick(Rng& rng, const T (&items)[N]) {
  return items[rng.UniformIndex(N)];
}

int Between(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.UniformIndex(static_cast<uint64_t>(hi - lo + 1)));
}

std::string Ordinal(int d) {
  const char* suffix = "th";
  if (d % 100 < 11 || d % 100 > 13) {
    if (d % 10 == 1) suffix = "st";
    if (d % 10 == 2) suffix = "nd";
    if (d % 10 == 3) suffix = "rd";
  }
  return std::to_string(d) + suffix;
}

std::string RandomDate(Rng& rng) {
  switch (rng.UniformIndex(7)) {
    case 0: return rng.Uniform() < 0.5 ? "tomorrow" : "today";
    case 1: return Pick(rng, kWeekdays);
    case 2: return std::string("next ") + Pick(rng, kWeekdays);
    case 3: return std::string("this ") + Pick(rng, kWeekdays);
    case 4: return std::string(Pick(rng, kMonths)) + " " + std::to_string(Between(rng, 1, 28));
    case 5: return "the " + Ordinal(Between(rng, 1, 28));
    default: return Ordinal(Between(rng, 1, 28)) + " of " + Pick(rng, kMonths);
  }
}

std::string RandomTime(Rng& rng) {
  const int h = Between(rng, 1, 12);
  const char* minutes[] = {"00", "15", "30", "45"};
  switch (rng.UniformIndex(5)) {
    case 0: return std::to_string(h) + " pm";
    case 1: return std::to_string(h) + ":" + Pick(rng, minutes) + " pm";
    case 2: return std::to_string(h) + ":" + Pick(rng, minutes);
    case 3: return std::to_string(h) + " o'clock";
    default: return "half past " + std::to_string(h);
  }
}

std::string RandomPeople(Rng& rng) {
  const int n = Between(rng, 1, 12);
  return rng.Uniform() < 0.7 ? std::to_string(n) : kNumberWords[n - 1];
}

std::string RandomFirst(Rng& rng) { return Pick(rng, kFirstNames); }
std::string RandomLast(Rng& rng) { return Pick(rng, kLastNames); }

// Fills "{slot}" placeholders and records each filled value as a label.
class Filler {
 public:
  explicit Filler(Rng& rng) : rng_(rng) {}

  std::string Fill(std::string_view tmpl, std::vector<SpanLabel>& labels) {
    std::string out;
    size_t i = 0;
    while (i < tmpl.size()) {
      if (tmpl[i] != '{') {
        out.push_back(tmpl[i++]);
        continue;
      }
      const size_t close = tmpl.find('}', i);
      const std::string slot(tmpl.substr(i + 1, close - i - 1));
      const std::string value = Value(slot);
      const size_t start = utf8::Length(out);
      out += value;
      labels.push_back({slot, start, start + utf8::Length(value), value});
      i = close + 1;
    }
    return out;
  }

 private:
  std::string Value(const std::string& slot) {
    if (slot == "date") return RandomDate(rng_);
    if (slot == "time") return RandomTime(rng_);
    if (slot == "people") return RandomPeople(rng_);
    if (slot == "first_name") return RandomFirst(rng_);
    return RandomLast(rng_);
  }

  Rng& rng_;
};

struct Template {
  const char* text;
  // Slot a preceding system turn may have asked for ("" for none).
  const char* asked;
};

constexpr Template kSentenceTemplates[] = {
    {"I would like to book a table for {people} people on {date} at {time}", "people"},
    {"Can I get a table for {people} at {time} please", "time"},
    {"Table for {people} on {date}", "date"},
    {"We are {people} people and would like to come {date}", "people"},
    {"Book it under {first_name} {last_name} please", "first_name"},
    {"My name is {first_name} {last_name}", "last_name"},
    {"Could we come at {time} on {date}", "time"},
    {"{date} at {time} for {people} people", "date"},
    {"Is there anything available at {time}", "time"},
    {"I need a reservation for {people} guests {date}", "people"},
    {"The booking is for {first_name}", "first_name"},
    {"It will be {people} of us at {time}", "people"},
    {"Put it under {last_name}, thanks", "last_name"},
    {"Please reserve {date} for {first_name} {last_name}", "date"},
    {"Around {time} would be great", "time"},
    {"Hi, I want to make a reservation", ""},
    {"Do you have outdoor seating", ""},
    {"Thanks, that is all", ""},
    {"Can I bring a dog", ""},
};

const std::map<std::string, std::vector<std::string>>& SystemPrompts() {
  static const std::map<std::string, std::vector<std::string>> kPrompts = {
      {"date", {"Which day would you like to come?", "For what date?"}},
      {"time", {"What time would you like the table?", "At what time?"}},
      {"people", {"How many people will be dining?", "For how many guests?"}},
      {"first_name", {"What is your first name?", "Could I have your first name?"}},
      {"last_name", {"And your last name?", "What surname should I use?"}},
  };
  return kPrompts;
}

std::string PromptFor(Rng& rng, const std::string& slot) {
  const auto& options = SystemPrompts().at(slot);
  return options[rng.UniformIndex(options.size())];
}

std::string TurnId(const std::string& prefix, size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05zu", i);
  return prefix + "-" + buf;
}

}  // namespace

SlotOntology RestaurantOntology() {
  SlotOntology o;
  o.AddSlot({"date",
             {"What date is the booking for?", "Which day is the reservation on?"},
             SlotKind::kDate});
  o.AddSlot({"time",
             {"What time is the booking for?", "At what time is the reservation?"},
             SlotKind::kTime});
  o.AddSlot({"people",
             {"How many people is the booking for?", "What is the party size?"},
             SlotKind::kCount});
  o.AddSlot({"first_name",
             {"What is the first name of the guest?", "Which first name is the booking under?"},
             SlotKind::kText});
  o.AddSlot({"last_name",
             {"What is the last name of the guest?", "Which surname is the booking under?"},
             SlotKind::kText});
  return o;
}

SLDataset generate_restaurant_sl(const SyntheticSLOptions& options, uint64_t seed) {
  Rng rng(seed);
  Filler filler(rng);
  SLDataset ds;
  ds.name = options.name;
  ds.ontology = RestaurantOntology();
  ds.turns.reserve(options.turns);

  for (size_t i = 0; i < options.turns; ++i) {
    DialogTurn turn;
    turn.turn_id = TurnId(options.id_prefix, i);
    const double u = rng.Uniform();
    if (u < options.bare_number_fraction) {
      const std::string slot = rng.Uniform() < 0.5 ? "time" : "people";
      const std::string value = std::to_string(Between(rng, 1, 12));
      turn.system_text = PromptFor(rng, slot);
      turn.requested_slots = {slot};
      turn.user_text = value;
      turn.gold_labels.push_back({slot, 0, utf8::Length(value), value});
    } else if (u < options.bare_number_fraction + options.bare_name_fraction) {
      const std::string slot = rng.Uniform() < 0.5 ? "first_name" : "last_name";
      const std::string value = Pick(rng, kSharedNames);
      turn.system_text = PromptFor(rng, slot);
      turn.requested_slots = {slot};
      turn.user_text = value;
      turn.gold_labels.push_back({slot, 0, utf8::Length(value), value});
    } else {
      const Template& t = Pick(rng, kSentenceTemplates);
      turn.user_text = filler.Fill(t.text, turn.gold_labels);
      if (*t.asked != '\0' && rng.Uniform() < 0.6) {
        turn.system_text = PromptFor(rng, t.asked);
        turn.requested_slots = {t.asked};
      } else if (rng.Uniform() < 0.5) {
        turn.system_text = "How can I help you?";
      }
    }
    ds.turns.push_back(std::move(turn));
  }
  return ds;
}

namespace {

struct EventTemplate {
  const char* text;
  const char* event;  // noun used in the questions
};

constexpr EventTemplate kEventTemplates[] = {
    {"{first_name} {last_name} is hosting a dinner for {people} people on {date} at {time}.",
     "dinner"},
    {"The meeting with {first_name} {last_name} starts at {time} on {date}.", "meeting"},
    {"On {date}, {people} friends of {first_name} {last_name} will meet at {time}.",
     "gathering"},
    {"A concert for {people} guests is planned for {date}. Doors open at {time}.", "concert"},
    {"{first_name} booked a flight for {date} leaving at {time}.", "flight"},
    {"The party of {first_name} {last_name} has {people} guests.", "party"},
    {"Tickets for {people} adults were bought by {last_name} for {date}.", "show"},
};

std::string QuestionFor(Rng& rng, const std::string& slot, const std::string& event) {
  if (slot == "date") {
    return rng.Uniform() < 0.5 ? "What date is the " + event + " on?"
                               : "Which day is the " + event + "?";
  }
  if (slot == "time") {
    return rng.Uniform() < 0.5 ? "What time is the " + event + "?"
                               : "At what time does the " + event + " start?";
  }
  if (slot == "people") return "How many people are at the " + event + "?";
  if (slot == "first_name") return "What is the first name of the person at the " + event + "?";
  return "What is the last name of the person at the " + event + "?";
}

}  // namespace

QADataset generate_generic_qa(const SyntheticQAOptions& options, uint64_t seed) {
  static const std::string kSlots[] = {"date", "time", "people", "first_name", "last_name"};
  Rng rng(seed);
  Filler filler(rng);
  QADataset qa;
  qa.name = options.name;
  qa.examples.reserve(options.examples);
  if (!(options.unanswerable_fraction >= 0.0 && options.unanswerable_fraction <= 1.0)) {
    throw ConfigError("unanswerable_fraction must lie in [0, 1]");
  }
  // Exact quotas so the unanswerable share does not depend on the template mix.
  const size_t want_unanswerable = static_cast<size_t>(
      std::llround(static_cast<double>(options.examples) * options.unanswerable_fraction));
  const size_t want_answerable = options.examples - want_unanswerable;
  size_t answerable = 0, unanswerable = 0;
  size_t paragraph = 0;
  while (qa.examples.size() < options.examples) {
    const EventTemplate& t = Pick(rng, kEventTemplates);
    std::vector<SpanLabel> labels;
    const std::string context = filler.Fill(t.text, labels);
    for (const auto& slot : kSlots) {
      if (qa.examples.size() >= options.examples) break;
      const SpanLabel* label = nullptr;
      for (const auto& l : labels) {
        if (l.slot == slot) label = &l;
      }
      const std::string qid = "g" + std::to_string(paragraph) + ":" + slot;
      const std::string question = QuestionFor(rng, slot, t.event);
      if (label) {
        if (answerable == want_answerable) continue;
        qa.examples.push_back(
            QAExample::Answerable(qid, context, question, label->value, label->start));
        ++answerable;
      } else if (unanswerable < want_unanswerable && rng.Uniform() < 0.5) {
        qa.examples.push_back(QAExample::Unanswerable(qid, context, question));
        ++unanswerable;
      }
    }
    ++paragraph;
  }
  return qa;
}

}  // namespace qasl
