#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "roster/roster.hpp"
#include "stub_protocol.hpp"

using namespace roster;
using namespace std::chrono_literals;

namespace {

/// In-process TCP server speaking the protocol in a given mode.
class TcpStub {
 public:
  explicit TcpStub(stub::Mode mode) : mode_(mode), thread_([this] { serve(); }) {}
  ~TcpStub() {
    stop_ = true;
    thread_.join();
  }
  std::string endpoint() const { return "127.0.0.1:" + std::to_string(listener_.port()); }
  int requests() const { return requests_; }
  int connections() const { return connections_; }
  int last_batch() const { return last_batch_; }

 private:
  void serve() {
    while (!stop_) {
      std::unique_ptr<TcpChannel> ch = listener_.accept(50ms);
      if (!ch) continue;
      ++connections_;
      try {
        ch->send_line(stub::handshake_reply(ch->recv_line(2s), mode_));
        while (!stop_) {
          std::string line;
          try {
            line = ch->recv_line(100ms);
          } catch (const ChannelError& e) {
            if (std::string(e.what()).find("timed out") != std::string::npos) continue;
            throw;
          }
          ++requests_;
          last_batch_ = static_cast<int>(nlohmann::json::parse(line).at("graphs").size());
          const std::string reply = stub::request_reply(line, mode_);
          if (!reply.empty()) ch->send_line(reply);
        }
      } catch (const std::exception&) {
        // client went away
      }
    }
  }

  TcpListener listener_;
  stub::Mode mode_;
  std::atomic<bool> stop_{false};
  std::atomic<int> requests_{0};
  std::atomic<int> connections_{0};
  std::atomic<int> last_batch_{0};
  std::thread thread_;
};

std::vector<Schedule> random_batch(std::mt19937_64& g, int k, int e, int d) {
  std::vector<Schedule> out;
  for (int i = 0; i < k; ++i) out.push_back(oracle::random_schedule(g, e, d));
  return out;
}

std::string stub_exec(const char* mode) { return std::string("exec:") + STUB_SERVER_PATH + " " + mode; }

Instance golden_instance() {
  Instance in = gen_instance(3, 4, 7);
  in.coverage = Matrix<int>(4, 3, 1);
  return in;
}

Schedule golden_schedule() {
  Schedule s(3, 4);
  const int rows[3][4] = {{3, 1, 0, 2}, {1, 1, 1, 1}, {0, 2, 0, 0}};
  for (int e = 0; e < 3; ++e)
    for (int d = 0; d < 4; ++d) s(e, d) = static_cast<Shift>(rows[e][d]);
  return s;
}

}  // namespace

TEST(Operators, IdentityReturnsInputs) {
  std::mt19937_64 g(41);
  const Instance in = gen_instance(3, 4, 0);
  const auto batch = random_batch(g, 5, 3, 4);
  IdentityOperator op;
  EXPECT_EQ(op.improve(batch, in), batch);
}

TEST(Operators, RepairNeverWorsens) {
  std::mt19937_64 g(42);
  RepairOperator op;
  for (int k = 0; k < 30; ++k) {
    const Instance in = oracle::random_instance(g, 5, 6);
    const auto batch = random_batch(g, 4, in.num_employees, in.num_days);
    const auto copy = batch;
    const auto out = op.improve(batch, in);
    EXPECT_EQ(batch, copy);
    ASSERT_EQ(out.size(), batch.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const PenaltyReport a = evaluate(batch[i], in);
      const PenaltyReport b = evaluate(out[i], in);
      EXPECT_LE(std::make_pair(b.hard_total, b.soft_unnormalized), std::make_pair(a.hard_total, a.soft_unnormalized));
    }
  }
}

TEST(Operators, FactoryKinds) {
  EXPECT_EQ(make_operator("none")->name(), "none");
  EXPECT_EQ(make_operator("repair")->name(), "repair");
  EXPECT_EQ(make_operator("neural", "127.0.0.1:1")->name(), "neural");
  EXPECT_THROW(make_operator("neural"), ConfigurationError);
  EXPECT_THROW(make_operator("magic"), ConfigurationError);
}

TEST(Graph, CountsAndShapes) {
  std::mt19937_64 g(43);
  for (auto [E, D] : {std::pair{1, 1}, {3, 4}, {5, 7}}) {
    const Instance in = gen_instance(E, D, 1);
    const GraphPayload p = build_graph(oracle::random_schedule(g, E, D), in);
    EXPECT_EQ(p.employee_nodes.size(), static_cast<std::size_t>(E));
    EXPECT_EQ(p.day_nodes.size(), static_cast<std::size_t>(D));
    EXPECT_EQ(p.shift_nodes.size(), static_cast<std::size_t>(E * D));
    EXPECT_EQ(p.edges_shift_employee.size(), static_cast<std::size_t>(2 * E * D));
    EXPECT_EQ(p.edges_shift_day.size(), static_cast<std::size_t>(2 * E * D));
    EXPECT_EQ(p.edges_shift_shift.size(), static_cast<std::size_t>(2 * E * (D - 1)));
    for (const auto* nodes : {&p.employee_nodes, &p.day_nodes, &p.shift_nodes})
      for (const FeatureVec& f : *nodes)
        for (double v : f) {
          EXPECT_GE(v, 0.0);
          EXPECT_LE(v, 2.0);
        }
    const std::size_t half = p.edges_shift_shift.size() / 2;
    for (std::size_t i = 0; i < half; ++i) {
      EXPECT_EQ(p.edges_shift_shift[i + half].first, p.edges_shift_shift[i].second);
      EXPECT_EQ(p.edges_shift_shift[i + half].second, p.edges_shift_shift[i].first);
    }
  }
}

TEST(Graph, EmployeeRelabelingEquivariance) {
  std::mt19937_64 g(44);
  for (int k = 0; k < 50; ++k) {
    const Instance in = oracle::random_instance(g, 5, 6);
    const int E = in.num_employees, D = in.num_days;
    const Schedule s = oracle::random_schedule(g, E, D);
    std::vector<int> perm(E);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g);
    Instance pin = in;
    Schedule ps(E, D);
    for (int e = 0; e < E; ++e)
      for (int d = 0; d < D; ++d) {
        pin.pref_off(perm[e], d) = in.pref_off(e, d);
        ps(perm[e], d) = s(e, d);
      }
    const GraphPayload a = build_graph(s, in);
    const GraphPayload b = build_graph(ps, pin);
    EXPECT_EQ(a.day_nodes, b.day_nodes);
    for (int e = 0; e < E; ++e) {
      EXPECT_EQ(a.employee_nodes[e], b.employee_nodes[perm[e]]);
      for (int d = 0; d < D; ++d) EXPECT_EQ(a.shift_nodes[e * D + d], b.shift_nodes[perm[e] * D + d]);
    }
  }
}

TEST(Graph, HandCheckedFeatures) {
  const Instance in = golden_instance();
  const GraphPayload p = build_graph(golden_schedule(), in);
  // Employee 0: N M R A -> 3 shifts, 24h; bounds 18..27.
  ASSERT_EQ(in.min_hours, 18);
  ASSERT_EQ(in.max_hours, 27);
  EXPECT_DOUBLE_EQ(p.employee_nodes[0][feat::kEmpHours], 24.0 / 27.0);
  EXPECT_EQ(p.employee_nodes[0][feat::kEmpBelow], 0.0);
  // Employee 1: four mornings, 32h > 27.
  EXPECT_EQ(p.employee_nodes[1][feat::kEmpAbove], 1.0);
  // Employee 2: one shift, 8h < 18.
  EXPECT_EQ(p.employee_nodes[2][feat::kEmpBelow], 1.0);
  // Night -> morning on days 0/1 of employee 0.
  EXPECT_EQ(p.shift_nodes[0][feat::kShiftC2], 1.0);
  EXPECT_EQ(p.shift_nodes[1][feat::kShiftC2], 1.0);
  EXPECT_EQ(p.shift_nodes[2][feat::kShiftC2], 0.0);
  // One rest day between work days with min_rest 2: days 1..3 flagged.
  EXPECT_EQ(p.shift_nodes[0][feat::kShiftC5], 0.0);
  EXPECT_EQ(p.shift_nodes[1][feat::kShiftC5], 1.0);
  EXPECT_EQ(p.shift_nodes[2][feat::kShiftC5], 1.0);
  EXPECT_EQ(p.shift_nodes[3][feat::kShiftC5], 1.0);
  EXPECT_DOUBLE_EQ(p.shift_nodes[2][feat::kShiftRest], 0.5);
  // Leading and trailing rest of employee 2 are not interior runs.
  EXPECT_EQ(p.shift_nodes[8][feat::kShiftRest], 0.0);
  EXPECT_EQ(p.shift_nodes[10][feat::kShiftRest], 0.0);
  EXPECT_EQ(p.shift_nodes[11][feat::kShiftRest], 0.0);
  // Streak of employee 1 on day 3 is 4 of max 5.
  EXPECT_DOUBLE_EQ(p.shift_nodes[7][feat::kShiftStreak], 0.8);
  // One-hot and node type.
  EXPECT_EQ(p.shift_nodes[0][feat::kType], 1.0);
  EXPECT_EQ(p.shift_nodes[0][feat::kShiftOneHot + 3], 1.0);
  EXPECT_EQ(p.day_nodes[0][feat::kType + 1], 1.0);
  // Day 0: M once (ok), A none (under 1), N once (ok): 100 / (1 + max(100, 2)).
  EXPECT_DOUBLE_EQ(p.day_nodes[0][feat::kDayUnder], 100.0 / 101.0);
  // Day 1: M twice (over 1), N none (under 1).
  EXPECT_DOUBLE_EQ(p.day_nodes[1][feat::kDayOver], 1.0 / 101.0);
  EXPECT_DOUBLE_EQ(p.day_nodes[1][feat::kDayUnder], 100.0 / 101.0);
  // Day 2: only a morning; A and N both short.
  EXPECT_DOUBLE_EQ(p.day_nodes[2][feat::kDayUnder], 200.0 / 101.0);
}

TEST(Graph, GoldenPayload) {
  const std::string got = graph_to_json(build_graph(golden_schedule(), golden_instance())).dump(1) + "\n";
  std::ifstream f(std::string(TEST_DATA_DIR) + "/golden_graph_3x4.json");
  ASSERT_TRUE(f) << "missing golden file";
  const std::string want((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  EXPECT_EQ(got, want);
}

TEST(Graph, RequestLayout) {
  const Instance in = golden_instance();
  const std::vector<Schedule> batch{golden_schedule(), golden_schedule()};
  const auto req = make_request(9, in, batch);
  EXPECT_EQ(req["id"], 9);
  EXPECT_EQ(req["meta"]["feature_dim"], 17);
  EXPECT_EQ(req["meta"]["employees"], 3);
  EXPECT_EQ(req["meta"]["days"], 4);
  ASSERT_EQ(req["graphs"].size(), 2u);
  std::vector<std::string> keys;
  for (auto it = req["graphs"][0].begin(); it != req["graphs"][0].end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"employee_feats", "day_feats", "shift_feats", "edges_se", "edges_sd",
                                            "edges_ss"}));
  EXPECT_EQ(stub::decode_graph(nlohmann::json::parse(req["graphs"][1].dump()), 3, 4)[0],
            (std::vector<int>{3, 1, 0, 2}));
}

TEST(Neural, EchoOverTcpOneRequestPerBatch) {
  TcpStub server(stub::Mode::Echo);
  std::mt19937_64 g(44);
  const Instance in = gen_instance(3, 4, 0);
  NeuralOperator op(server.endpoint(), 2s);
  EXPECT_TRUE(op.improve({}, in).empty());
  EXPECT_EQ(op.requests_sent(), 0);
  for (int k = 1; k <= 3; ++k) {
    const auto batch = random_batch(g, 6, 3, 4);
    EXPECT_EQ(op.improve(batch, in), batch);
    EXPECT_EQ(op.requests_sent(), k);
  }
  std::this_thread::sleep_for(50ms);
  EXPECT_EQ(server.requests(), 3);
  EXPECT_EQ(server.connections(), 1);
  EXPECT_EQ(server.last_batch(), 6);
}

TEST(Neural, ConstantAllRestReply) {
  TcpStub server(stub::Mode::AllRest);
  std::mt19937_64 g(45);
  const Instance in = gen_instance(2, 3, 0);
  NeuralOperator op("tcp://" + server.endpoint(), 2s);
  for (const Schedule& s : op.improve(random_batch(g, 3, 2, 3), in)) EXPECT_EQ(s, Schedule(2, 3, Shift::Rest));
}

TEST(Neural, FailuresRaiseAndReconnect) {
  std::mt19937_64 g(46);
  const Instance in = gen_instance(2, 3, 0);
  const auto batch = random_batch(g, 2, 2, 3);
  for (stub::Mode m : {stub::Mode::Malformed, stub::Mode::WrongCount, stub::Mode::ServerError,
                       stub::Mode::BadHandshake}) {
    TcpStub server(m);
    NeuralOperator op(server.endpoint(), 2s);
    EXPECT_THROW(op.improve(batch, in), OperatorFailure);
    EXPECT_THROW(op.improve(batch, in), OperatorFailure);
    std::this_thread::sleep_for(50ms);
    EXPECT_EQ(server.connections(), 2);  // the channel is dropped after each failure
  }
}

TEST(Neural, TimeoutAndRefused) {
  std::mt19937_64 g(47);
  const Instance in = gen_instance(2, 3, 0);
  const auto batch = random_batch(g, 2, 2, 3);
  {
    TcpStub server(stub::Mode::Silent);
    NeuralOperator op(server.endpoint(), 200ms);
    const auto t0 = std::chrono::steady_clock::now();
    EXPECT_THROW(op.improve(batch, in), OperatorFailure);
    EXPECT_LT(std::chrono::steady_clock::now() - t0, 2s);
  }
  int port = 0;
  {
    TcpListener l;
    port = l.port();
  }
  NeuralOperator refused("127.0.0.1:" + std::to_string(port), 500ms);
  EXPECT_THROW(refused.improve(batch, in), OperatorFailure);
  NeuralOperator nonsense("not-an-endpoint", 500ms);
  EXPECT_THROW(nonsense.improve(batch, in), OperatorFailure);
  EXPECT_THROW(open_channel("nonsense", 100ms), ConfigurationError);
}

TEST(Neural, ExecModeStub) {
  std::mt19937_64 g(48);
  const Instance in = gen_instance(3, 4, 0);
  const auto batch = random_batch(g, 4, 3, 4);
  NeuralOperator echo(stub_exec("echo"), 5s);
  EXPECT_EQ(echo.improve(batch, in), batch);
  EXPECT_EQ(echo.improve(batch, in), batch);
  NeuralOperator rest(stub_exec("rest"), 5s);
  for (const Schedule& s : rest.improve(batch, in)) EXPECT_EQ(s, Schedule(3, 4, Shift::Rest));
  NeuralOperator broken(stub_exec("malformed"), 5s);
  EXPECT_THROW(broken.improve(batch, in), OperatorFailure);
  NeuralOperator missing("exec:/nonexistent/server", 2s);
  EXPECT_THROW(missing.improve(batch, in), OperatorFailure);
}

TEST(Neural, GaRunIssuesOneRequestPerGeneration) {
  TcpStub server(stub::Mode::Echo);
  Instance in = gen_instance(3, 4, 1);
  GaConfig cfg;
  cfg.pop_size = 8;
  cfg.nb_max_epochs = 15;
  cfg.stop_cond_version = StopVersion::V2;
  cfg.use_improver = true;
  NeuralOperator op(server.endpoint(), 2s);
  const RunTrace t = run(in, cfg, &op);
  EXPECT_EQ(op.requests_sent(), t.stop_epoch);
  // Echo leaves offspring unchanged, so the trace equals the identity run.
  IdentityOperator id;
  EXPECT_EQ(trace_csv(run(in, cfg, &id).records, false), trace_csv(t.records, false));
}
