#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "multirecv/model.hpp"

namespace multirecv {

// Actor labels <-> contiguous indices 0..A-1.
class ActorMap {
 public:
  ActorMap() = default;
  explicit ActorMap(std::vector<std::string> labels);

  [[nodiscard]] std::size_t size() const { return labels_.size(); }
  [[nodiscard]] const std::vector<std::string>& labels() const { return labels_; }
  [[nodiscard]] const std::string& label(int index) const { return labels_.at(static_cast<std::size_t>(index)); }
  [[nodiscard]] std::optional<int> find(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

struct RawEvent {
  double timestamp = 0.0;
  int sender = 0;
  std::vector<int> receivers;
  std::size_t line = 0;  // source line, 1-based
};

// Events sorted by timestamp (stable), actors mapped through `actors`.
struct RawEventLog {
  ActorMap actors;
  std::vector<RawEvent> events;
};

// Delimited text: header "timestamp,sender,receivers", one event per line,
// receivers separated by ';'. Blank lines and lines starting with '#' are
// skipped. Throws ParseError with the line number on unknown labels, empty
// receiver lists and self-addressed events.
RawEventLog parse_events_csv(std::istream& in, const ActorMap& actors);

// {"events": [{"timestamp": t, "sender": "a", "receivers": ["b", ...]}, ...]}
RawEventLog parse_events_json(std::istream& in, const ActorMap& actors);

// Dispatches on the extension (.json, anything else is delimited text).
RawEventLog load_events(const std::filesystem::path& path, const ActorMap& actors);

// Sorted unique labels appearing anywhere in an event file.
ActorMap collect_actors(const std::filesystem::path& path);

// Categorical fields per actor, indexed like an ActorMap.
class ActorAttributes {
 public:
  ActorAttributes() = default;
  ActorAttributes(std::vector<std::string> fields, std::vector<std::vector<std::string>> rows);

  [[nodiscard]] const std::vector<std::string>& fields() const { return fields_; }
  [[nodiscard]] bool has_field(const std::string& field) const;
  [[nodiscard]] std::size_t num_actors() const { return rows_.size(); }
  [[nodiscard]] const std::string& value(int actor, const std::string& field) const;

 private:
  std::vector<std::string> fields_;
  std::vector<std::vector<std::string>> rows_;
};

// Delimited text with header "actor,<field>,...". Row order defines the
// actor indices returned in `actors`.
ActorAttributes parse_attributes_csv(std::istream& in, ActorMap& actors);
ActorAttributes load_attributes(const std::filesystem::path& path, ActorMap& actors);

struct AttributeMatch {
  std::string field;
  std::string value;
};

struct CovariateTerm {
  enum class Kind {
    SenderReceiver,     // 1(sender matches) * 1(receiver matches)
    ReceiverAttribute,  // 1(receiver matches)
    Same,               // 1(sender and receiver share the field value)
    Inertia,            // past s -> r messages in [t - window, t)
    Reciprocity,        // past r -> s messages in [t - window, t)
  };
  Kind kind = Kind::Same;
  AttributeMatch sender;
  AttributeMatch receiver;
  std::string field;
  double window = 0.0;
  std::string name;

  [[nodiscard]] bool is_count() const { return kind == Kind::Inertia || kind == Kind::Reciprocity; }
};

struct CovariateSpec {
  std::vector<CovariateTerm> terms;
  // log1p then z-score every count column over all (message, receiver) rows.
  bool transform_counts = false;

  [[nodiscard]] int size() const { return static_cast<int>(terms.size()); }
  [[nodiscard]] std::vector<std::string> names() const;
  void validate(const ActorAttributes* attributes) const;
};

// JSON form:
// {"transform_counts": false,
//  "terms": [{"type": "sender_receiver", "sender": {"field": f, "value": v},
//             "receiver": {"field": f, "value": v}},
//            {"type": "sender_receiver_grid", "indicators": [{"field": f, "value": v}, ...]},
//            {"type": "receiver_attribute", "field": f, "value": v},
//            {"type": "same", "field": f},
//            {"type": "inertia", "windows": [3600, 86400]},
//            {"type": "reciprocity", "window": 3600}]}
// Grids expand to every ordered pair of indicators; window lists expand to
// one term per window.
CovariateSpec parse_covariate_spec(const std::string& json_text);

// Dataset with one (A-1) x K covariate block per event. Count covariates
// only see strictly earlier timestamps.
EventDataset build_covariates(const RawEventLog& log, const ActorAttributes* attributes, const CovariateSpec& spec);

}  // namespace multirecv
