#pragma once

// Batch schedule-improvement operators plugged into the GA's variation
// pipeline: the operator interface, the identity and greedy-repair
// operators, the heterogeneous graph encoding of a schedule, and the client
// side of the line-delimited JSON protocol spoken by an external neural
// operator.

#include <algorithm>
#include <array>
#include <chrono>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "roster/channel.hpp"
#include "roster/core.hpp"
#include "roster/io.hpp"
#include "roster/model.hpp"

namespace roster {

class ImprovementOperator {
 public:
  virtual ~ImprovementOperator() = default;

  /// Returns one schedule per input, in the same order. Inputs are not
  /// modified.
  virtual std::vector<Schedule> improve(std::span<const Schedule> batch, const Instance& inst) = 0;

  virtual std::string name() const = 0;
};

class IdentityOperator final : public ImprovementOperator {
 public:
  std::vector<Schedule> improve(std::span<const Schedule> batch, const Instance&) override {
    return {batch.begin(), batch.end()};
  }
  std::string name() const override { return "none"; }
};

/// Greedy repair: repeatedly re-codes the cell with the highest penalty score
/// to whichever code minimizes (hard_total, soft_unnormalized), stopping at
/// the first step that does not improve or after E*D steps.
class RepairOperator final : public ImprovementOperator {
 public:
  static Schedule repair(Schedule s, const Instance& inst) {
    PenaltyReport cur = evaluate(s, inst);
    const int steps = inst.num_employees * inst.num_days;
    for (int step = 0; step < steps; ++step) {
      const Matrix<double> score = cell_penalty_scores(s, inst);
      const auto flat = score.flat();
      const auto at = static_cast<int>(std::max_element(flat.begin(), flat.end()) - flat.begin());
      const int e = at / inst.num_days;
      const int d = at % inst.num_days;

      const Shift original = s(e, d);
      Shift best_code = original;
      std::pair<int, long long> best_key{cur.hard_total, cur.soft_unnormalized};
      PenaltyReport best_report = cur;
      for (int c = 0; c < kNumCodes; ++c) {
        if (static_cast<Shift>(c) == original) continue;
        s(e, d) = static_cast<Shift>(c);
        PenaltyReport r = evaluate(s, inst);
        const std::pair<int, long long> key{r.hard_total, r.soft_unnormalized};
        if (key < best_key) {
          best_key = key;
          best_code = static_cast<Shift>(c);
          best_report = std::move(r);
        }
      }
      s(e, d) = best_code;
      if (best_code == original) break;
      cur = std::move(best_report);
    }
    return s;
  }

  std::vector<Schedule> improve(std::span<const Schedule> batch, const Instance& inst) override {
    std::vector<Schedule> out;
    out.reserve(batch.size());
    for (const Schedule& s : batch) out.push_back(repair(s, inst));
    return out;
  }
  std::string name() const override { return "repair"; }
};

// ---------------------------------------------------------------------------
// Graph encoding
// ---------------------------------------------------------------------------

inline constexpr int kFeatureDim = 17;
inline constexpr int kProtocolVersion = 1;
using FeatureVec = std::array<double, kFeatureDim>;

/// Feature layout (indices):
///   0-1   node type: employee (0,0), day (0,1), shift (1,0)
///   2-4   employee: hours / max_hours, below-min flag, above-max flag
///   5-14  shift: one-hot code (4), C2 flag, C4 flag, C5 flag,
///         worked streak / max_consecutive, position in an interior rest run / min_rest,
///         day-off request flag
///   15-16 day: normalized understaffing, normalized overstaffing, each
///         summed over the shift types
/// Ratios are clamped to [0, 2].
namespace feat {
inline constexpr int kType = 0;
inline constexpr int kEmpHours = 2;
inline constexpr int kEmpBelow = 3;
inline constexpr int kEmpAbove = 4;
inline constexpr int kShiftOneHot = 5;
inline constexpr int kShiftC2 = 9;
inline constexpr int kShiftC4 = 10;
inline constexpr int kShiftC5 = 11;
inline constexpr int kShiftStreak = 12;
inline constexpr int kShiftRest = 13;
inline constexpr int kShiftPref = 14;
inline constexpr int kDayUnder = 15;
inline constexpr int kDayOver = 16;
}  // namespace feat

struct GraphPayload {
  int employees = 0;
  int days = 0;
  std::vector<FeatureVec> employee_nodes;
  std::vector<FeatureVec> day_nodes;
  std::vector<FeatureVec> shift_nodes;  // index e * days + d
  // Each relation lists its forward direction first ([shift, employee],
  // [shift, day], [(e,d), (e,d+1)]) followed by the reversed pairs.
  std::vector<std::pair<int, int>> edges_shift_employee;
  std::vector<std::pair<int, int>> edges_shift_day;
  std::vector<std::pair<int, int>> edges_shift_shift;
};

namespace detail {
inline double clamp_ratio(double num, double den) {
  if (den <= 0) return num > 0 ? 2.0 : 0.0;
  return std::clamp(num / den, 0.0, 2.0);
}
}  // namespace detail

inline GraphPayload build_graph(const Schedule& schedule, const Instance& inst) {
  inst.check_schedule(schedule);
  const int E = inst.num_employees;
  const int D = inst.num_days;
  GraphPayload g;
  g.employees = E;
  g.days = D;
  g.employee_nodes.assign(E, FeatureVec{});
  g.day_nodes.assign(D, FeatureVec{});
  g.shift_nodes.assign(static_cast<std::size_t>(E) * D, FeatureVec{});

  const int win = inst.max_consecutive + 1;
  for (int e = 0; e < E; ++e) {
    auto row = schedule.row(e);
    FeatureVec& ef = g.employee_nodes[e];
    ef[feat::kType] = 0;
    ef[feat::kType + 1] = 0;
    int worked = 0;
    for (Shift c : row) worked += is_work(c);
    const int hours = worked * inst.hours_per_shift;
    ef[feat::kEmpHours] = detail::clamp_ratio(hours, inst.max_hours);
    ef[feat::kEmpBelow] = hours < inst.min_hours ? 1.0 : 0.0;
    ef[feat::kEmpAbove] = hours > inst.max_hours ? 1.0 : 0.0;

    std::vector<char> c2(D, 0), c4(D, 0), c5(D, 0);
    for (int d = 0; d + 1 < D; ++d)
      if (row[d] == Shift::Night && row[d + 1] == Shift::Morning) c2[d] = c2[d + 1] = 1;
    for (int t = 0; t + win <= D; ++t) {
      bool all = true;
      for (int d = t; d < t + win && all; ++d) all = is_work(row[d]);
      if (all) std::fill(c4.begin() + t, c4.begin() + t + win, 1);
    }
    int prev_work = -1;
    for (int d = 0; d < D; ++d) {
      if (!is_work(row[d])) continue;
      const int gap = prev_work >= 0 ? d - prev_work - 1 : 0;
      if (gap >= 1 && gap < inst.min_rest) std::fill(c5.begin() + prev_work, c5.begin() + d + 1, 1);
      prev_work = d;
    }

    // Position of each rest day inside a rest run bounded by work on both sides.
    std::vector<int> rest_pos(D, 0);
    for (int d = 0, last = -1; d < D; ++d) {
      if (!is_work(row[d])) continue;
      if (last >= 0)
        for (int k = last + 1; k < d; ++k) rest_pos[k] = k - last;
      last = d;
    }

    int streak = 0;
    for (int d = 0; d < D; ++d) {
      FeatureVec& sf = g.shift_nodes[static_cast<std::size_t>(e) * D + d];
      sf[feat::kType] = 1;
      sf[feat::kShiftOneHot + code(row[d])] = 1.0;
      sf[feat::kShiftC2] = c2[d];
      sf[feat::kShiftC4] = c4[d];
      sf[feat::kShiftC5] = c5[d];
      streak = is_work(row[d]) ? streak + 1 : 0;
      sf[feat::kShiftStreak] = detail::clamp_ratio(streak, inst.max_consecutive);
      sf[feat::kShiftRest] = detail::clamp_ratio(rest_pos[d], inst.min_rest);
      sf[feat::kShiftPref] = inst.pref_off(e, d);
    }
  }

  const PenaltyReport report = evaluate(schedule, inst);
  for (int d = 0; d < D; ++d) {
    FeatureVec& df = g.day_nodes[d];
    df[feat::kType + 1] = 1;
    for (int s = 0; s < inst.num_shifts; ++s) {
      const CoverageGap& gap = report.per_day_shift_coverage(d, s);
      const double den = coverage_denominator(inst, d, s);
      df[feat::kDayUnder] += static_cast<double>(gap.under) * inst.understaff_weight / den;
      df[feat::kDayOver] += static_cast<double>(gap.over) * inst.overstaff_weight / den;
    }
    df[feat::kDayUnder] = std::min(df[feat::kDayUnder], 2.0);
    df[feat::kDayOver] = std::min(df[feat::kDayOver], 2.0);
  }

  for (int e = 0; e < E; ++e)
    for (int d = 0; d < D; ++d) {
      const int sidx = e * D + d;
      g.edges_shift_employee.emplace_back(sidx, e);
      g.edges_shift_day.emplace_back(sidx, d);
      if (d + 1 < D) g.edges_shift_shift.emplace_back(sidx, sidx + 1);
    }
  for (auto* rel : {&g.edges_shift_employee, &g.edges_shift_day, &g.edges_shift_shift}) {
    const std::size_t n = rel->size();
    rel->reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [a, b] = (*rel)[i];
      rel->emplace_back(b, a);
    }
  }
  return g;
}

inline nlohmann::ordered_json graph_to_json(const GraphPayload& g) {
  auto feats = [](const std::vector<FeatureVec>& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const FeatureVec& f : v) a.push_back(f);
    return a;
  };
  auto edges = [](const std::vector<std::pair<int, int>>& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& [i, j] : v) a.push_back({i, j});
    return a;
  };
  nlohmann::ordered_json j;
  j["employee_feats"] = feats(g.employee_nodes);
  j["day_feats"] = feats(g.day_nodes);
  j["shift_feats"] = feats(g.shift_nodes);
  j["edges_se"] = edges(g.edges_shift_employee);
  j["edges_sd"] = edges(g.edges_shift_day);
  j["edges_ss"] = edges(g.edges_shift_shift);
  return j;
}

inline nlohmann::ordered_json make_request(long long id, const Instance& inst, std::span<const Schedule> batch) {
  nlohmann::ordered_json req;
  req["id"] = id;
  req["meta"] = {{"employees", inst.num_employees}, {"days", inst.num_days}, {"feature_dim", kFeatureDim}};
  nlohmann::ordered_json graphs = nlohmann::ordered_json::array();
  for (const Schedule& s : batch) graphs.push_back(graph_to_json(build_graph(s, inst)));
  req["graphs"] = std::move(graphs);
  return req;
}

// ---------------------------------------------------------------------------
// Neural operator client
// ---------------------------------------------------------------------------

/// Talks to an external model server. `endpoint` is `host:port`,
/// `tcp://host:port` or `exec:<shell command>` (the command's stdin/stdout
/// carry the protocol). The connection is opened on first use.
class NeuralOperator final : public ImprovementOperator {
 public:
  NeuralOperator(std::string endpoint, std::chrono::milliseconds timeout)
      : endpoint_(std::move(endpoint)), timeout_(timeout) {}

  std::vector<Schedule> improve(std::span<const Schedule> batch, const Instance& inst) override {
    std::lock_guard lock(mu_);
    if (batch.empty()) return {};
    try {
      if (!channel_) connect();
      const long long id = next_id_++;
      channel_->send_line(make_request(id, inst, batch).dump());
      const nlohmann::json resp = parse(channel_->recv_line(timeout_));
      return decode(resp, id, batch.size(), inst);
    } catch (const OperatorFailure&) {
      channel_.reset();
      throw;
    } catch (const std::exception& e) {
      channel_.reset();
      throw OperatorFailure("neural operator at " + endpoint_ + ": " + e.what());
    }
  }

  std::string name() const override { return "neural"; }
  long long requests_sent() const { return next_id_ - 1; }

 private:
  static nlohmann::json parse(const std::string& line) {
    try {
      return nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw OperatorFailure("malformed response: " + line.substr(0, 200));
    }
  }

  void connect() {
    channel_ = open_channel(endpoint_, timeout_);
    channel_->send_line(nlohmann::json{{"hello", 1}, {"protocol", kProtocolVersion}}.dump());
    const nlohmann::json hello = parse(channel_->recv_line(timeout_));
    if (!hello.is_object() || hello.value("ready", false) != true ||
        hello.value("protocol", -1) != kProtocolVersion)
      throw OperatorFailure("handshake rejected: " + hello.dump());
  }

  static std::vector<Schedule> decode(const nlohmann::json& resp, long long id, std::size_t k,
                                      const Instance& inst) {
    if (!resp.is_object()) throw OperatorFailure("response is not an object");
    if (!resp.contains("id") || resp["id"] != id) throw OperatorFailure("response id mismatch");
    if (resp.contains("error")) throw OperatorFailure("server error: " + resp["error"].dump());
    if (!resp.contains("schedules") || !resp["schedules"].is_array())
      throw OperatorFailure("response has no schedules");
    const auto& arr = resp["schedules"];
    if (arr.size() != k)
      throw OperatorFailure("expected " + std::to_string(k) + " schedules, got " + std::to_string(arr.size()));
    std::vector<Schedule> out;
    out.reserve(k);
    for (const auto& sj : arr) {
      Schedule s;
      try {
        s = schedule_from_json(sj);
      } catch (const InvalidInput& e) {
        throw OperatorFailure(std::string("bad schedule in response: ") + e.what());
      }
      if (s.rows() != inst.num_employees || s.cols() != inst.num_days)
        throw OperatorFailure("schedule shape mismatch in response");
      out.push_back(std::move(s));
    }
    return out;
  }

  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<LineChannel> channel_;
  long long next_id_ = 1;
  std::mutex mu_;
};

inline std::unique_ptr<ImprovementOperator> identity_operator() { return std::make_unique<IdentityOperator>(); }
inline std::unique_ptr<ImprovementOperator> repair_operator() { return std::make_unique<RepairOperator>(); }
inline std::unique_ptr<ImprovementOperator> neural_operator(std::string endpoint,
                                                            std::chrono::milliseconds timeout) {
  return std::make_unique<NeuralOperator>(std::move(endpoint), timeout);
}

/// Operator by name: "none", "repair" or "neural".
inline std::unique_ptr<ImprovementOperator> make_operator(const std::string& kind, const std::string& endpoint = {},
                                                          std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
  if (kind == "none" || kind == "identity") return identity_operator();
  if (kind == "repair") return repair_operator();
  if (kind == "neural") {
    if (endpoint.empty()) throw ConfigurationError("neural operator needs an endpoint");
    return neural_operator(endpoint, timeout);
  }
  throw ConfigurationError("unknown improvement operator: " + kind);
}

}  // namespace roster
