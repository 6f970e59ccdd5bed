#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "netcap/graph.hpp"
#include "netcap/routing.hpp"

namespace netcap {

inline constexpr std::size_t kMaxAvoid = 8;

struct SimConfig {
  std::size_t capacity = 1;  // C: packets served per vertex per step
  double rate = 0.0;         // R: mean packets generated per step
  std::size_t avoid = 1;     // n: recently visited vertices a packet will not re-enter
  std::uint64_t seed = 1;
  std::size_t warmup_steps = 20'000;
  std::size_t measure_steps = 30'000;
  // Batch-means standard errors for head_occupancy (costs 2 extra N x N arrays).
  bool occupancy_errors = false;
  std::size_t occupancy_batches = 50;
};

struct Packet {
  std::uint64_t id = 0;
  Vertex source = 0;
  Vertex destination = 0;
  std::uint64_t birth = 0;
  // Last `avoid` vertices left behind, most recent first.
  std::array<Vertex, kMaxAvoid> recent{};
  std::uint8_t recent_count = 0;
};

struct StepCounts {
  std::size_t generated = 0;
  std::size_t delivered = 0;
  std::size_t in_flight = 0;  // W after the step
};

struct SimResult {
  std::vector<std::size_t> w_trace;  // W(t) after every step, warmup included
  std::size_t warmup_steps = 0;
  double eta = 0.0;
  std::size_t generated_count = 0;
  std::size_t delivered_count = 0;  // over the whole run
  std::size_t measured_deliveries = 0;
  double mean_delivery_time = 0.0;  // steps, over deliveries in the measurement window
  std::vector<double> mean_queue_lengths;
  std::vector<double> per_destination_delivery_time;  // NaN where nothing was delivered
  std::vector<std::size_t> per_destination_deliveries;
  // (i, j): services at i of packets bound for j per C per step; estimates alpha.
  Eigen::MatrixXd head_occupancy;
  Eigen::MatrixXd head_occupancy_stderr;  // empty unless occupancy_errors
  double mean_in_flight = 0.0;            // time average of W over the window
  std::vector<std::string> warnings;
};

// Synchronous step: every vertex serves up to C head packets from the queue
// it held at the start of the step. A served packet whose vertex neighbors
// its destination is delivered; otherwise it hops according to the routing
// row, excluding recently left vertices unless that excludes everything.
// Forwarded packets join queues in shuffled order, then new packets are
// appended at their sources in generation order.
class Simulator {
 public:
  Simulator(const Graph& g, const RoutingSpec& routing, const SimConfig& config);

  StepCounts step();
  SimResult run();

  // Places a packet at the tail of v's queue (tests and hand-built scenarios).
  void inject(Vertex at, Vertex destination);

  std::uint64_t now() const noexcept { return step_; }
  std::size_t in_flight() const noexcept { return in_flight_; }
  const std::deque<Packet>& queue(Vertex v) const { return queues_[v]; }

 private:
  Vertex next_hop(const Packet& packet, Vertex at);
  void begin_measurement();
  void close_batch();

  const Graph& g_;
  const RoutingSpec& routing_;
  SimConfig config_;
  std::mt19937_64 rng_;
  std::vector<std::deque<Packet>> queues_;
  std::vector<std::pair<Vertex, Packet>> arrivals_;
  std::uint64_t step_ = 0;
  std::uint64_t next_id_ = 0;
  std::size_t in_flight_ = 0;
  std::size_t generated_ = 0;
  std::size_t delivered_ = 0;

  bool measuring_ = false;
  std::size_t measured_steps_ = 0;
  std::vector<double> queue_sum_;
  std::vector<double> delivery_sum_;
  std::vector<std::size_t> delivery_count_;
  Eigen::MatrixXd service_count_;
  Eigen::MatrixXd batch_count_;
  Eigen::MatrixXd batch_sum_;
  Eigen::MatrixXd batch_sumsq_;
  std::size_t batch_steps_ = 0;
  std::size_t batches_done_ = 0;
  double in_flight_sum_ = 0.0;
};

// eta = C * slope / R, slope the least-squares slope of W over
// [begin, end); clamped below at 0. Throws DegenerateWindow under 10 points.
double order_parameter(std::span<const std::size_t> w_trace, std::size_t begin, std::size_t end,
                       double capacity, double rate);

SimResult simulate(const Graph& g, const RoutingSpec& routing, const SimConfig& config);

struct RcProbe {
  double rate = 0.0;
  double eta = 0.0;
  bool congested = false;
};

struct RcEstimate {
  double rc = 0.0;
  double low = 0.0;
  double high = 0.0;
  std::vector<RcProbe> probes;
};

// Bisection on R; a probe counts as congested when eta > eta_threshold.
// Throws BadBracket unless r_low is free-flowing and r_high congested.
RcEstimate estimate_rc(const Graph& g, const RoutingSpec& routing, const SimConfig& base,
                       double r_low, double r_high, double resolution, double eta_threshold = 0.05);

}  // namespace netcap
