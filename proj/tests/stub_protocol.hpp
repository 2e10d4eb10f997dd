#pragma once

// Server side of the neural-operator protocol for tests. Replies are
// computed from the request alone, so the same logic backs the in-process
// TCP stubs and the stdin/stdout stub executable.

#include <string>
#include <vector>

#include <json.hpp>

namespace stub {

using nlohmann::json;

enum class Mode { Echo, AllRest, Malformed, WrongCount, ServerError, Silent, BadHandshake };

inline Mode mode_from_string(const std::string& s) {
  if (s == "echo") return Mode::Echo;
  if (s == "rest") return Mode::AllRest;
  if (s == "malformed") return Mode::Malformed;
  if (s == "wrong-count") return Mode::WrongCount;
  if (s == "error") return Mode::ServerError;
  if (s == "silent") return Mode::Silent;
  if (s == "bad-handshake") return Mode::BadHandshake;
  return Mode::Echo;
}

/// Recovers the schedule encoded in a graph's shift-node one-hot features.
inline std::vector<std::vector<int>> decode_graph(const json& g, int employees, int days) {
  std::vector<std::vector<int>> out(employees, std::vector<int>(days, 0));
  const json& shifts = g.at("shift_feats");
  for (int e = 0; e < employees; ++e)
    for (int d = 0; d < days; ++d) {
      const json& f = shifts.at(e * days + d);
      for (int c = 0; c < 4; ++c)
        if (f.at(5 + c).get<double>() == 1.0) out[e][d] = c;
    }
  return out;
}

inline std::string handshake_reply(const std::string& line, Mode mode) {
  const json hello = json::parse(line);
  if (mode == Mode::BadHandshake) return json{{"ready", false}, {"protocol", 1}}.dump();
  if (hello.value("protocol", 0) != 1) return json{{"ready", false}, {"error", "unsupported protocol"}}.dump();
  return json{{"ready", true}, {"protocol", 1}}.dump();
}

/// Empty string means "send nothing".
inline std::string request_reply(const std::string& line, Mode mode) {
  json req;
  try {
    req = json::parse(line);
  } catch (const json::parse_error&) {
    return json{{"id", nullptr}, {"error", "unparsable request"}}.dump();
  }
  const json id = req.value("id", json());
  if (mode == Mode::Silent) return {};
  if (mode == Mode::Malformed) return "{not json";
  if (mode == Mode::ServerError) return json{{"id", id}, {"error", "model exploded"}}.dump();
  const json& meta = req.at("meta");
  if (meta.value("feature_dim", 0) != 17)
    return json{{"id", id}, {"error", "feature_dim mismatch: expected 17"}}.dump();
  const int E = meta.at("employees");
  const int D = meta.at("days");
  json schedules = json::array();
  for (const json& g : req.at("graphs")) {
    auto s = decode_graph(g, E, D);
    if (mode == Mode::AllRest)
      for (auto& row : s)
        for (int& c : row) c = 0;
    schedules.push_back(s);
  }
  if (mode == Mode::WrongCount && !schedules.empty()) schedules.erase(schedules.size() - 1);
  return json{{"id", id}, {"schedules", schedules}}.dump();
}

}  // namespace stub
