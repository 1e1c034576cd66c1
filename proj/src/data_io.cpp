#include "multirecv/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "multirecv/errors.hpp"

namespace multirecv {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(s);
  while (std::getline(in, field, delim)) out.push_back(trim(field));
  if (!s.empty() && s.back() == delim) out.emplace_back();
  return out;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << "line " << line << ": " << what;
  throw ParseError(msg.str());
}

bool skippable(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

RawEvent make_event(double timestamp, const std::string& sender, const std::vector<std::string>& receivers,
                    std::size_t line, const ActorMap& actors) {
  RawEvent ev;
  ev.timestamp = timestamp;
  ev.line = line;
  if (!std::isfinite(timestamp)) parse_fail(line, "timestamp is not finite");
  const auto s = actors.find(sender);
  if (!s) parse_fail(line, "unknown sender '" + sender + "'");
  ev.sender = *s;
  for (const auto& label : receivers) {
    if (label.empty()) continue;
    const auto r = actors.find(label);
    if (!r) parse_fail(line, "unknown receiver '" + label + "'");
    if (*r == ev.sender) parse_fail(line, "sender '" + sender + "' listed among its receivers");
    ev.receivers.push_back(*r);
  }
  if (ev.receivers.empty()) parse_fail(line, "empty receiver list");
  std::sort(ev.receivers.begin(), ev.receivers.end());
  if (std::adjacent_find(ev.receivers.begin(), ev.receivers.end()) != ev.receivers.end()) {
    parse_fail(line, "duplicate receiver");
  }
  return ev;
}

void sort_log(RawEventLog& log) {
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const RawEvent& a, const RawEvent& b) { return a.timestamp < b.timestamp; });
}

bool is_json_path(const std::filesystem::path& path) { return path.extension() == ".json"; }

json read_json(std::istream& in) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

AttributeMatch parse_match(const json& j, const char* context) {
  if (!j.is_object() || !j.contains("field") || !j.contains("value")) {
    throw ConfigError(std::string("covariate spec: ") + context + " needs \"field\" and \"value\"");
  }
  return {j.at("field").get<std::string>(), j.at("value").get<std::string>()};
}

std::vector<double> windows_of(const json& term) {
  std::vector<double> out;
  if (term.contains("windows")) {
    for (const auto& w : term.at("windows")) out.push_back(w.get<double>());
  }
  if (term.contains("window")) out.push_back(term.at("window").get<double>());
  if (out.empty()) throw ConfigError("covariate spec: count term needs \"window\" or \"windows\"");
  for (double w : out) {
    if (!(w > 0.0)) throw ConfigError("covariate spec: windows must be positive");
  }
  return out;
}

std::string format_window(double w) {
  std::ostringstream out;
  out << w;
  return out.str();
}

}  // namespace

ActorMap::ActorMap(std::vector<std::string> labels) : labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].empty()) throw ParseError("empty actor label");
    if (!index_.emplace(labels_[i], static_cast<int>(i)).second) {
      throw ParseError("duplicate actor label '" + labels_[i] + "'");
    }
  }
}

std::optional<int> ActorMap::find(const std::string& label) const {
  const auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

RawEventLog parse_events_csv(std::istream& in, const ActorMap& actors) {
  RawEventLog log;
  log.actors = actors;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto fields = split(line, ',');
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "timestamp" || fields[1] != "sender" || fields[2] != "receivers") {
        parse_fail(line_no, "expected header 'timestamp,sender,receivers'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) parse_fail(line_no, "expected 3 fields");
    double timestamp = 0.0;
    try {
      std::size_t used = 0;
      timestamp = std::stod(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      parse_fail(line_no, "bad timestamp '" + fields[0] + "'");
    }
    log.events.push_back(make_event(timestamp, fields[1], split(fields[2], ';'), line_no, actors));
  }
  if (!header_seen) throw ParseError("event file has no header");
  sort_log(log);
  return log;
}

RawEventLog parse_events_json(std::istream& in, const ActorMap& actors) {
  const json doc = read_json(in);
  if (!doc.is_object() || !doc.contains("events") || !doc.at("events").is_array()) {
    throw ParseError("event document needs an \"events\" array");
  }
  RawEventLog log;
  log.actors = actors;
  std::size_t index = 0;
  for (const auto& e : doc.at("events")) {
    ++index;
    try {
      std::vector<std::string> receivers;
      for (const auto& r : e.at("receivers")) receivers.push_back(r.get<std::string>());
      log.events.push_back(
          make_event(e.at("timestamp").get<double>(), e.at("sender").get<std::string>(), receivers, index, actors));
    } catch (const json::exception& ex) {
      parse_fail(index, std::string("malformed event: ") + ex.what());
    }
  }
  sort_log(log);
  return log;
}

RawEventLog load_events(const std::filesystem::path& path, const ActorMap& actors) {
  auto in = open_input(path);
  return is_json_path(path) ? parse_events_json(in, actors) : parse_events_csv(in, actors);
}

ActorMap collect_actors(const std::filesystem::path& path) {
  std::set<std::string> labels;
  auto in = open_input(path);
  if (is_json_path(path)) {
    const json doc = read_json(in);
    try {
      for (const auto& e : doc.at("events")) {
        labels.insert(e.at("sender").get<std::string>());
        for (const auto& r : e.at("receivers")) labels.insert(r.get<std::string>());
      }
    } catch (const json::exception& ex) {
      throw ParseError(std::string("malformed event document: ") + ex.what());
    }
  } else {
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
      ++line_no;
      if (skippable(line)) continue;
      if (!header_seen) {
        header_seen = true;
        continue;
      }
      const auto fields = split(line, ',');
      if (fields.size() != 3) parse_fail(line_no, "expected 3 fields");
      if (!fields[1].empty()) labels.insert(fields[1]);
      for (const auto& r : split(fields[2], ';')) {
        if (!r.empty()) labels.insert(r);
      }
    }
  }
  return ActorMap(std::vector<std::string>(labels.begin(), labels.end()));
}

ActorAttributes::ActorAttributes(std::vector<std::string> fields, std::vector<std::vector<std::string>> rows)
    : fields_(std::move(fields)), rows_(std::move(rows)) {
  for (const auto& row : rows_) {
    if (row.size() != fields_.size()) throw ParseError("attribute row width does not match the header");
  }
}

bool ActorAttributes::has_field(const std::string& field) const {
  return std::find(fields_.begin(), fields_.end(), field) != fields_.end();
}

const std::string& ActorAttributes::value(int actor, const std::string& field) const {
  const auto it = std::find(fields_.begin(), fields_.end(), field);
  if (it == fields_.end()) throw ConfigError("unknown attribute field '" + field + "'");
  return rows_.at(static_cast<std::size_t>(actor))[static_cast<std::size_t>(it - fields_.begin())];
}

ActorAttributes parse_attributes_csv(std::istream& in, ActorMap& actors) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<std::string> labels;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    auto fields = split(line, ',');
    if (header.empty()) {
      if (fields.empty() || fields[0] != "actor") parse_fail(line_no, "expected header starting with 'actor'");
      header = std::move(fields);
      continue;
    }
    if (fields.size() != header.size()) parse_fail(line_no, "row width does not match the header");
    labels.push_back(fields[0]);
    rows.emplace_back(fields.begin() + 1, fields.end());
  }
  if (header.empty()) throw ParseError("attribute file has no header");
  actors = ActorMap(std::move(labels));
  return ActorAttributes(std::vector<std::string>(header.begin() + 1, header.end()), std::move(rows));
}

ActorAttributes load_attributes(const std::filesystem::path& path, ActorMap& actors) {
  auto in = open_input(path);
  return parse_attributes_csv(in, actors);
}

std::vector<std::string> CovariateSpec::names() const {
  std::vector<std::string> out;
  for (const auto& t : terms) out.push_back(t.name);
  return out;
}

void CovariateSpec::validate(const ActorAttributes* attributes) const {
  for (const auto& t : terms) {
    std::vector<std::string> needed;
    switch (t.kind) {
      case CovariateTerm::Kind::SenderReceiver:
        needed = {t.sender.field, t.receiver.field};
        break;
      case CovariateTerm::Kind::ReceiverAttribute:
        needed = {t.receiver.field};
        break;
      case CovariateTerm::Kind::Same:
        needed = {t.field};
        break;
      case CovariateTerm::Kind::Inertia:
      case CovariateTerm::Kind::Reciprocity:
        if (!(t.window > 0.0)) throw ConfigError("covariate '" + t.name + "': window must be positive");
        break;
    }
    for (const auto& f : needed) {
      if (attributes == nullptr || !attributes->has_field(f)) {
        throw ConfigError("covariate '" + t.name + "': attribute field '" + f + "' is missing");
      }
    }
  }
}

CovariateSpec parse_covariate_spec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("covariate spec is not valid JSON: ") + e.what());
  }
  CovariateSpec spec;
  try {
    spec.transform_counts = doc.value("transform_counts", false);
    if (!doc.contains("terms")) return spec;
    for (const auto& term : doc.at("terms")) {
      const auto type = term.at("type").get<std::string>();
      if (type == "sender_receiver") {
        CovariateTerm t;
        t.kind = CovariateTerm::Kind::SenderReceiver;
        t.sender = parse_match(term.at("sender"), "sender");
        t.receiver = parse_match(term.at("receiver"), "receiver");
        t.name = term.value("name", "s." + t.sender.field + "=" + t.sender.value + ":r." + t.receiver.field + "=" +
                                        t.receiver.value);
        spec.terms.push_back(t);
      } else if (type == "sender_receiver_grid") {
        std::vector<AttributeMatch> indicators;
        for (const auto& m : term.at("indicators")) indicators.push_back(parse_match(m, "indicator"));
        for (const auto& s : indicators) {
          for (const auto& r : indicators) {
            CovariateTerm t;
            t.kind = CovariateTerm::Kind::SenderReceiver;
            t.sender = s;
            t.receiver = r;
            t.name = "s." + s.field + "=" + s.value + ":r." + r.field + "=" + r.value;
            spec.terms.push_back(t);
          }
        }
      } else if (type == "receiver_attribute") {
        CovariateTerm t;
        t.kind = CovariateTerm::Kind::ReceiverAttribute;
        t.receiver = parse_match(term, "receiver_attribute");
        t.name = term.value("name", "r." + t.receiver.field + "=" + t.receiver.value);
        spec.terms.push_back(t);
      } else if (type == "same") {
        CovariateTerm t;
        t.kind = CovariateTerm::Kind::Same;
        t.field = term.at("field").get<std::string>();
        t.name = term.value("name", "same." + t.field);
        spec.terms.push_back(t);
      } else if (type == "inertia" || type == "reciprocity") {
        for (double w : windows_of(term)) {
          CovariateTerm t;
          t.kind = type == "inertia" ? CovariateTerm::Kind::Inertia : CovariateTerm::Kind::Reciprocity;
          t.window = w;
          t.name = type + "." + format_window(w);
          spec.terms.push_back(t);
        }
      } else {
        throw ConfigError("covariate spec: unknown term type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("covariate spec: ") + e.what());
  }
  return spec;
}

EventDataset build_covariates(const RawEventLog& log, const ActorAttributes* attributes, const CovariateSpec& spec) {
  spec.validate(attributes);
  const int A = static_cast<int>(log.actors.size());
  if (A < 2) throw InvalidArgument("build_covariates: need at least two actors");
  if (attributes != nullptr && attributes->num_actors() != log.actors.size()) {
    throw ConfigError("build_covariates: attribute table does not cover every actor");
  }
  const int K = spec.size();

  // Timestamps of s -> r messages, ascending because the log is sorted.
  std::vector<std::vector<double>> history(static_cast<std::size_t>(A) * static_cast<std::size_t>(A));
  for (const auto& ev : log.events) {
    for (int r : ev.receivers) history[static_cast<std::size_t>(ev.sender) * A + r].push_back(ev.timestamp);
  }
  auto count_in_window = [&](int from, int to, double t, double window) {
    const auto& times = history[static_cast<std::size_t>(from) * A + to];
    const auto hi = std::lower_bound(times.begin(), times.end(), t);
    const auto lo = std::lower_bound(times.begin(), hi, t - window);
    return static_cast<double>(hi - lo);
  };
  auto matches = [&](int actor, const AttributeMatch& m) { return attributes->value(actor, m.field) == m.value; };

  std::vector<Message> messages;
  messages.reserve(log.events.size());
  for (const auto& ev : log.events) {
    Message m;
    m.sender = ev.sender;
    m.receivers = ev.receivers;
    m.timestamp = ev.timestamp;
    m.covariates.resize(A - 1, K);
    const int s = ev.sender;
    for (int j = 0; j < A - 1; ++j) {
      const int r = receiver_actor(s, j);
      for (int k = 0; k < K; ++k) {
        const CovariateTerm& t = spec.terms[static_cast<std::size_t>(k)];
        double x = 0.0;
        switch (t.kind) {
          case CovariateTerm::Kind::SenderReceiver:
            x = (matches(s, t.sender) && matches(r, t.receiver)) ? 1.0 : 0.0;
            break;
          case CovariateTerm::Kind::ReceiverAttribute:
            x = matches(r, t.receiver) ? 1.0 : 0.0;
            break;
          case CovariateTerm::Kind::Same:
            x = attributes->value(s, t.field) == attributes->value(r, t.field) ? 1.0 : 0.0;
            break;
          case CovariateTerm::Kind::Inertia:
            x = count_in_window(s, r, ev.timestamp, t.window);
            break;
          case CovariateTerm::Kind::Reciprocity:
            x = count_in_window(r, s, ev.timestamp, t.window);
            break;
        }
        m.covariates(j, k) = x;
      }
    }
    messages.push_back(std::move(m));
  }

  if (spec.transform_counts && !messages.empty()) {
    for (int k = 0; k < K; ++k) {
      if (!spec.terms[static_cast<std::size_t>(k)].is_count()) continue;
      double sum = 0.0;
      double sum_sq = 0.0;
      double rows = 0.0;
      for (auto& m : messages) {
        for (int j = 0; j < A - 1; ++j) {
          const double v = std::log1p(m.covariates(j, k));
          m.covariates(j, k) = v;
          sum += v;
          sum_sq += v * v;
          rows += 1.0;
        }
      }
      const double mean = sum / rows;
      const double var = std::max(0.0, sum_sq / rows - mean * mean);
      const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
      for (auto& m : messages) m.covariates.col(k) = (m.covariates.col(k).array() - mean) / sd;
    }
  }
  return EventDataset(A, K, std::move(messages));
}

}  // namespace multirecv
