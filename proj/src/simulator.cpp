#include "netcap/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "netcap/errors.hpp"

namespace netcap {

Simulator::Simulator(const Graph& g, const RoutingSpec& routing, const SimConfig& config)
    : g_(g), routing_(routing), config_(config), rng_(config.seed), queues_(g.size()) {
  if (g.size() < 2) throw InvalidParams("simulation needs at least two vertices");
  if (config.capacity < 1) throw InvalidParams("capacity C must be at least 1");
  if (!(config.rate >= 0.0) || !std::isfinite(config.rate)) throw InvalidParams("rate R must be >= 0");
  if (config.avoid > kMaxAvoid) {
    throw InvalidParams("avoid depth " + std::to_string(config.avoid) + " exceeds " +
                        std::to_string(kMaxAvoid));
  }
  if (config.measure_steps < 100) throw InvalidParams("measure_steps must be at least 100");
  if (config.occupancy_errors &&
      (config.occupancy_batches < 2 || config.occupancy_batches > config.measure_steps)) {
    throw InvalidParams("occupancy_batches must be in [2, measure_steps]");
  }
  if (routing.size() != g.size()) throw ValidationError("routing order does not match graph");
  if (auto rep = validate_consistency(routing, g); !rep) {
    throw ValidationError("routing is not consistent with the graph: " + rep.problems.front());
  }
}

void Simulator::inject(Vertex at, Vertex destination) {
  if (at == destination) throw InvalidParams("packet destination equals its position");
  Packet p;
  p.id = next_id_++;
  p.source = at;
  p.destination = destination;
  p.birth = step_;
  queues_[at].push_back(p);
  ++in_flight_;
  ++generated_;
}

Vertex Simulator::next_hop(const Packet& packet, Vertex at) {
  const auto row = routing_.for_destination(packet.destination).row(at);
  auto excluded = [&](Vertex v) {
    for (std::uint8_t k = 0; k < packet.recent_count; ++k)
      if (packet.recent[k] == v) return true;
    return false;
  };
  double total = 0.0;
  for (const auto& e : row)
    if (!excluded(e.col)) total += e.p;
  const bool avoiding = total > 0.0;
  if (!avoiding) total = 1.0;  // dead end: ignore the avoidance set

  double u = std::uniform_real_distribution<double>(0.0, total)(rng_);
  Vertex last = row.back().col;
  for (const auto& e : row) {
    if (avoiding && excluded(e.col)) continue;
    if (e.p <= 0.0) continue;
    last = e.col;
    if (u < e.p) return e.col;
    u -= e.p;
  }
  return last;
}

void Simulator::begin_measurement() {
  const auto n = static_cast<Eigen::Index>(g_.size());
  measuring_ = true;
  measured_steps_ = 0;
  queue_sum_.assign(g_.size(), 0.0);
  delivery_sum_.assign(g_.size(), 0.0);
  delivery_count_.assign(g_.size(), 0);
  service_count_ = Eigen::MatrixXd::Zero(n, n);
  if (config_.occupancy_errors) {
    batch_count_ = Eigen::MatrixXd::Zero(n, n);
    batch_sum_ = Eigen::MatrixXd::Zero(n, n);
    batch_sumsq_ = Eigen::MatrixXd::Zero(n, n);
  }
  batch_steps_ = 0;
  batches_done_ = 0;
  in_flight_sum_ = 0.0;
}

void Simulator::close_batch() {
  const double scale = 1.0 / (static_cast<double>(config_.capacity) * static_cast<double>(batch_steps_));
  const Eigen::MatrixXd mean = batch_count_ * scale;
  batch_sum_ += mean;
  batch_sumsq_ += mean.cwiseProduct(mean);
  batch_count_.setZero();
  batch_steps_ = 0;
  ++batches_done_;
}

StepCounts Simulator::step() {
  const std::uint64_t window_end = config_.warmup_steps + config_.measure_steps;
  if (!measuring_ && step_ >= config_.warmup_steps && step_ < window_end) begin_measurement();
  const bool record = measuring_ && step_ < window_end;

  StepCounts counts;
  arrivals_.clear();
  for (std::size_t i = 0; i < queues_.size(); ++i) {
    const auto v = static_cast<Vertex>(i);
    auto& q = queues_[i];
    const std::size_t served = std::min(config_.capacity, q.size());
    for (std::size_t k = 0; k < served; ++k) {
      Packet p = q.front();
      q.pop_front();
      if (record) {
        service_count_(v, p.destination) += 1.0;
        if (config_.occupancy_errors) batch_count_(v, p.destination) += 1.0;
      }
      if (g_.adjacent(v, p.destination)) {
        ++counts.delivered;
        if (record) {
          delivery_sum_[p.destination] += static_cast<double>(step_ - p.birth);
          ++delivery_count_[p.destination];
        }
        continue;
      }
      const Vertex to = next_hop(p, v);
      if (config_.avoid > 0) {
        const auto keep = static_cast<std::uint8_t>(std::min<std::size_t>(p.recent_count, config_.avoid - 1));
        for (std::size_t s = keep; s > 0; --s) p.recent[s] = p.recent[s - 1];
        p.recent[0] = v;
        p.recent_count = static_cast<std::uint8_t>(keep + 1);
      }
      arrivals_.emplace_back(to, p);
    }
  }
  std::shuffle(arrivals_.begin(), arrivals_.end(), rng_);
  for (auto& [to, p] : arrivals_) queues_[to].push_back(p);

  std::size_t births = static_cast<std::size_t>(std::floor(config_.rate));
  const double frac = config_.rate - std::floor(config_.rate);
  if (frac > 0.0 && std::bernoulli_distribution(frac)(rng_)) ++births;
  const std::size_t n = g_.size();
  std::uniform_int_distribution<std::size_t> pick_source(0, n - 1), pick_other(0, n - 2);
  for (std::size_t b = 0; b < births; ++b) {
    Packet p;
    p.id = next_id_++;
    p.source = static_cast<Vertex>(pick_source(rng_));
    std::size_t d = pick_other(rng_);
    if (d >= static_cast<std::size_t>(p.source)) ++d;
    p.destination = static_cast<Vertex>(d);
    p.birth = step_;
    queues_[p.source].push_back(p);
  }
  counts.generated = births;
  generated_ += births;
  delivered_ += counts.delivered;
  in_flight_ = in_flight_ + births - counts.delivered;
  counts.in_flight = in_flight_;

  if (record) {
    for (std::size_t i = 0; i < n; ++i) queue_sum_[i] += static_cast<double>(queues_[i].size());
    in_flight_sum_ += static_cast<double>(in_flight_);
    ++measured_steps_;
    if (config_.occupancy_errors) {
      ++batch_steps_;
      const std::size_t batch_len = config_.measure_steps / config_.occupancy_batches;
      if (batch_steps_ == batch_len && batches_done_ < config_.occupancy_batches) close_batch();
    }
  }
  ++step_;
  return counts;
}

SimResult Simulator::run() {
  const std::size_t total = config_.warmup_steps + config_.measure_steps;
  SimResult res;
  res.warmup_steps = config_.warmup_steps;
  res.w_trace.reserve(total);
  if (config_.avoid > 0 && config_.avoid >= degree_stats(g_).min_degree) {
    res.warnings.push_back("avoid depth " + std::to_string(config_.avoid) +
                           " is not below the minimum degree; dead ends fall back to the full row");
  }
  while (step_ < total) res.w_trace.push_back(step().in_flight);

  const std::size_t n = g_.size();
  const double steps = static_cast<double>(measured_steps_);
  res.generated_count = generated_;
  res.delivered_count = delivered_;
  res.mean_queue_lengths.resize(n);
  res.per_destination_delivery_time.resize(n);
  res.per_destination_deliveries = delivery_count_;
  double time_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res.mean_queue_lengths[i] = queue_sum_[i] / steps;
    res.measured_deliveries += delivery_count_[i];
    time_sum += delivery_sum_[i];
    res.per_destination_delivery_time[i] = delivery_count_[i] > 0
                                               ? delivery_sum_[i] / static_cast<double>(delivery_count_[i])
                                               : std::numeric_limits<double>::quiet_NaN();
  }
  res.mean_delivery_time =
      res.measured_deliveries > 0 ? time_sum / static_cast<double>(res.measured_deliveries) : 0.0;
  res.head_occupancy = service_count_ / (static_cast<double>(config_.capacity) * steps);
  if (config_.occupancy_errors && batches_done_ >= 2) {
    const double b = static_cast<double>(batches_done_);
    const Eigen::MatrixXd mean = batch_sum_ / b;
    const Eigen::MatrixXd var =
        ((batch_sumsq_ / b - mean.cwiseProduct(mean)) * (b / (b - 1.0))).cwiseMax(0.0);
    res.head_occupancy_stderr = (var / b).cwiseSqrt();
  }
  res.mean_in_flight = in_flight_sum_ / steps;
  res.eta = config_.rate > 0.0
                ? order_parameter(res.w_trace, config_.warmup_steps, total,
                                  static_cast<double>(config_.capacity), config_.rate)
                : 0.0;
  return res;
}

double order_parameter(std::span<const std::size_t> w_trace, std::size_t begin, std::size_t end,
                       double capacity, double rate) {
  if (!(rate > 0.0)) throw InvalidParams("order parameter needs R > 0");
  if (end > w_trace.size() || begin >= end || end - begin < 10) {
    throw DegenerateWindow("order parameter window needs at least 10 points inside the trace");
  }
  const double count = static_cast<double>(end - begin);
  const double t_mean = (static_cast<double>(begin) + static_cast<double>(end - 1)) / 2.0;
  double w_mean = 0.0;
  for (std::size_t t = begin; t < end; ++t) w_mean += static_cast<double>(w_trace[t]);
  w_mean /= count;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t t = begin; t < end; ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    sxy += dt * (static_cast<double>(w_trace[t]) - w_mean);
    sxx += dt * dt;
  }
  return std::max(0.0, capacity * (sxy / sxx) / rate);
}

SimResult simulate(const Graph& g, const RoutingSpec& routing, const SimConfig& config) {
  Simulator sim(g, routing, config);
  return sim.run();
}

RcEstimate estimate_rc(const Graph& g, const RoutingSpec& routing, const SimConfig& base,
                       double r_low, double r_high, double resolution, double eta_threshold) {
  if (!(r_low > 0.0) || !(r_high > r_low)) throw InvalidParams("need 0 < r_low < r_high");
  if (!(resolution > 0.0)) throw InvalidParams("resolution must be positive");
  RcEstimate est;
  auto probe = [&](double rate) {
    SimConfig cfg = base;
    cfg.rate = rate;
    cfg.occupancy_errors = false;
    const double eta = simulate(g, routing, cfg).eta;
    est.probes.push_back({rate, eta, eta > eta_threshold});
    return est.probes.back();
  };
  const RcProbe lo = probe(r_low);
  const RcProbe hi = probe(r_high);
  if (lo.congested == hi.congested) {
    throw BadBracket("bracket [" + std::to_string(r_low) + ", " + std::to_string(r_high) +
                         "] does not straddle the transition: eta = " + std::to_string(lo.eta) +
                         " and " + std::to_string(hi.eta),
                     lo.eta, hi.eta);
  }
  double low = r_low, high = r_high;
  while (high - low > resolution) {
    const double mid = 0.5 * (low + high);
    (probe(mid).congested ? high : low) = mid;
  }
  est.low = low;
  est.high = high;
  est.rc = 0.5 * (low + high);
  return est;
}

}  // namespace netcap
