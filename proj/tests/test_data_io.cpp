#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "multirecv/data_io.hpp"
#include "multirecv/errors.hpp"

using namespace multirecv;

namespace {

ActorMap abc() { return ActorMap({"a", "b", "c", "d"}); }

std::string parse_error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_events_csv(in, abc());
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

ActorAttributes attributes_of(const std::string& text, ActorMap& actors) {
  std::istringstream in(text);
  return parse_attributes_csv(in, actors);
}

RawEventLog log_of(const std::string& text, const ActorMap& actors) {
  std::istringstream in(text);
  return parse_events_csv(in, actors);
}

}  // namespace

TEST_SUITE("data-io") {

TEST_CASE("well-formed event file") {
  const auto log = log_of("timestamp,sender,receivers\n# comment\n1,a,b\n\n2,b,a;c\n3,c,d\n", abc());
  REQUIRE(log.events.size() == 3);
  CHECK(log.events[1].sender == 1);
  CHECK(log.events[1].receivers == std::vector<int>{0, 2});
  CHECK(log.events[2].line == 6);
}

TEST_CASE("malformed events report their line") {
  CHECK(parse_error_of("timestamp,sender,receivers\n1,a,b\n2,b,b;c\n").find("line 3") != std::string::npos);
  CHECK(parse_error_of("timestamp,sender,receivers\n1,a,zz\n").find("line 2") != std::string::npos);
  CHECK(parse_error_of("timestamp,sender,receivers\n1,a,\n").find("line 2") != std::string::npos);
  CHECK(parse_error_of("timestamp,sender,receivers\nxx,a,b\n").find("line 2") != std::string::npos);
  CHECK(parse_error_of("time,from,to\n1,a,b\n").find("line 1") != std::string::npos);
  CHECK_FALSE(parse_error_of("").empty());
}

TEST_CASE("unsorted timestamps are sorted stably") {
  const std::string text = "timestamp,sender,receivers\n5,a,b\n1,b,c\n5,c,d\n3,d,a\n1,a,c\n";
  const auto log = log_of(text, abc());
  struct Row {
    double t;
    std::size_t line;
  };
  std::vector<Row> expect{{5, 2}, {1, 3}, {5, 4}, {3, 5}, {1, 6}};
  std::stable_sort(expect.begin(), expect.end(), [](const Row& x, const Row& y) { return x.t < y.t; });
  REQUIRE(log.events.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) {
    CHECK(log.events[i].timestamp == expect[i].t);
    CHECK(log.events[i].line == expect[i].line);
  }
}

TEST_CASE("json event documents") {
  std::istringstream in(R"({"events": [{"timestamp": 2, "sender": "b", "receivers": ["a"]},
                                       {"timestamp": 1, "sender": "a", "receivers": ["c", "d"]}]})");
  const auto log = parse_events_json(in, abc());
  REQUIRE(log.events.size() == 2);
  CHECK(log.events[0].sender == 0);
  CHECK(log.events[0].receivers == std::vector<int>{2, 3});
  std::istringstream self(R"({"events": [{"timestamp": 1, "sender": "a", "receivers": ["a"]}]})");
  CHECK_THROWS_AS(parse_events_json(self, abc()), ParseError);
  std::istringstream broken("{\"events\": [");
  CHECK_THROWS_AS(parse_events_json(broken, abc()), ParseError);
}

TEST_CASE("attributes define the actor map") {
  ActorMap actors;
  const auto attrs = attributes_of("actor,dept,gender\nx,legal,f\ny,trading,m\nz,legal,m\n", actors);
  CHECK(actors.size() == 3);
  CHECK(*actors.find("y") == 1);
  CHECK(attrs.value(2, "dept") == "legal");
  CHECK_THROWS_AS(attrs.value(0, "title"), ConfigError);
  ActorMap again;
  CHECK_THROWS_AS(attributes_of("actor,dept\nx,a\nx,b\n", again), ParseError);
}

TEST_CASE("hand-tallied window counts") {
  ActorMap actors;
  const auto attrs = attributes_of("actor,dept\na,x\nb,x\nc,y\n", actors);
  // t=0 a->b; t=50 b->a; t=120 a->b,c; t=150 a->b.
  const auto log = log_of("timestamp,sender,receivers\n0,a,b\n50,b,a\n120,a,b;c\n150,a,b\n", actors);
  const auto spec = parse_covariate_spec(R"({"terms": [{"type": "inertia", "window": 100},
                                                       {"type": "reciprocity", "window": 100},
                                                       {"type": "same", "field": "dept"}]})");
  const EventDataset d = build_covariates(log, &attrs, spec);
  REQUIRE(d.size() == 4);
  CHECK(spec.names() == std::vector<std::string>{"inertia.100", "reciprocity.100", "same.dept"});
  // First message: empty history.
  CHECK(d[0].covariates.leftCols(2).isZero());
  // Message 2 (b->a at 50): reciprocity a->b in [-50, 50) = 1, inertia b->a = 0.
  CHECK(d[1].covariates(receiver_row(1, 0), 0) == 0);
  CHECK(d[1].covariates(receiver_row(1, 0), 1) == 1);
  // Message 3 (a at 120): window [20, 120). a->b at 0 is outside; b->a at 50 inside.
  CHECK(d[2].covariates(receiver_row(0, 1), 0) == 0);
  CHECK(d[2].covariates(receiver_row(0, 1), 1) == 1);
  CHECK(d[2].covariates(receiver_row(0, 2), 0) == 0);
  // Message 4 (a at 150): window [50, 150). a->b at 120 -> inertia 1; b->a at 50 -> reciprocity 1;
  // a->c at 120 -> inertia 1.
  CHECK(d[3].covariates(receiver_row(0, 1), 0) == 1);
  CHECK(d[3].covariates(receiver_row(0, 1), 1) == 1);
  CHECK(d[3].covariates(receiver_row(0, 2), 0) == 1);
  CHECK(d[3].covariates(receiver_row(0, 2), 1) == 0);
  // Same department: a and b share x, c differs.
  CHECK(d[0].covariates(receiver_row(0, 1), 2) == 1);
  CHECK(d[0].covariates(receiver_row(0, 2), 2) == 0);
}

TEST_CASE("attribute dummies") {
  ActorMap actors;
  const auto attrs = attributes_of("actor,g,s\na,f,junior\nb,m,senior\nc,f,senior\n", actors);
  const auto log = log_of("timestamp,sender,receivers\n0,a,b\n1,b,c\n", actors);
  const auto spec = parse_covariate_spec(R"({"terms": [
      {"type": "sender_receiver_grid", "indicators": [{"field": "g", "value": "f"}, {"field": "s", "value": "senior"}]},
      {"type": "receiver_attribute", "field": "g", "value": "m"}]})");
  CHECK(spec.size() == 5);
  const EventDataset d = build_covariates(log, &attrs, spec);
  for (const auto& m : d.messages()) {
    CHECK((m.covariates.array() == 0.0 || m.covariates.array() == 1.0).all());
  }
  // a (f, junior) -> c (f, senior): s.g=f:r.g=f = 1, s.g=f:r.s=senior = 1, s.s=senior:* = 0.
  const auto row = d[0].covariates.row(receiver_row(0, 2));
  CHECK(row[0] == 1);
  CHECK(row[1] == 1);
  CHECK(row[2] == 0);
  CHECK(row[3] == 0);
  CHECK(row[4] == 0);
  CHECK(d[0].covariates(receiver_row(0, 1), 4) == 1);
}

TEST_CASE("covariate spec errors") {
  CHECK_THROWS_AS(parse_covariate_spec(R"({"terms": [{"type": "inertia", "window": -5}]})"), ConfigError);
  CHECK_THROWS_AS(parse_covariate_spec(R"({"terms": [{"type": "inertia"}]})"), ConfigError);
  CHECK_THROWS_AS(parse_covariate_spec(R"({"terms": [{"type": "nope"}]})"), ConfigError);
  CHECK_THROWS_AS(parse_covariate_spec("{"), ConfigError);
  ActorMap actors;
  const auto attrs = attributes_of("actor,dept\na,x\nb,y\n", actors);
  const auto log = log_of("timestamp,sender,receivers\n0,a,b\n", actors);
  CHECK_THROWS_AS(build_covariates(log, &attrs, parse_covariate_spec(R"({"terms": [{"type": "same", "field": "title"}]})")),
                  ConfigError);
  CHECK_THROWS_AS(build_covariates(log, nullptr, parse_covariate_spec(R"({"terms": [{"type": "same", "field": "dept"}]})")),
                  ConfigError);
}

TEST_CASE("window counts are causal non-negative integers") {
  Rng rng(3);
  const ActorMap actors({"a", "b", "c", "d", "e"});
  std::ostringstream text;
  text << "timestamp,sender,receivers\n";
  for (int i = 0; i < 60; ++i) {
    const int s = static_cast<int>(rng.uniform() * 5);
    const int r = (s + 1 + static_cast<int>(rng.uniform() * 4)) % 5;
    text << i * 7 << ',' << actors.label(s) << ',' << actors.label(r) << '\n';
  }
  const auto full = log_of(text.str(), actors);
  const auto spec = parse_covariate_spec(R"({"terms": [{"type": "inertia", "windows": [30, 200]},
                                                       {"type": "reciprocity", "windows": [30, 200]}]})");
  const EventDataset d = build_covariates(full, nullptr, spec);
  for (const auto& m : d.messages()) {
    CHECK((m.covariates.array() >= 0.0).all());
    CHECK((m.covariates.array() == m.covariates.array().round()).all());
  }
  // Scramble the second half: covariates of the first half must not move.
  RawEventLog altered = full;
  for (std::size_t i = 30; i < altered.events.size(); ++i) {
    auto& ev = altered.events[i];
    ev.sender = (ev.sender + 2) % 5;
    ev.receivers = {(ev.sender + 1) % 5};
  }
  const EventDataset d2 = build_covariates(altered, nullptr, spec);
  for (std::size_t i = 0; i < 30; ++i) CHECK(d[i].covariates == d2[i].covariates);
}

TEST_CASE("count transform standardizes log counts") {
  const ActorMap actors({"a", "b", "c"});
  const auto log = log_of("timestamp,sender,receivers\n0,a,b\n1,a,b\n2,a,b;c\n3,b,a\n", actors);
  const auto spec = parse_covariate_spec(R"({"transform_counts": true, "terms": [{"type": "inertia", "window": 10}]})");
  const EventDataset d = build_covariates(log, nullptr, spec);
  double sum = 0.0, sq = 0.0, n = 0.0;
  for (const auto& m : d.messages()) {
    sum += m.covariates.col(0).sum();
    sq += m.covariates.col(0).squaredNorm();
    n += static_cast<double>(m.covariates.rows());
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(1e-12));
}

}
