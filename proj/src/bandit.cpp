#include "wncs/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wncs/error.hpp"

namespace wncs {

BanditState::BanditState(int channels, double epsilon_lo, double epsilon_hi)
    : plays_(static_cast<std::size_t>(channels), 0),
      rewards_(static_cast<std::size_t>(channels), 0),
      lo_(epsilon_lo),
      hi_(epsilon_hi) {
  if (channels < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one channel", "channels");
  if (!(-1.0 < lo_ && lo_ <= hi_ && hi_ < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon bounds must satisfy -1 < lo <= hi < 1", "epsilon");
  }
}

double BanditState::mean_reward(int j) const {
  return plays_[j] == 0 ? 0.0 : static_cast<double>(rewards_[j]) / static_cast<double>(plays_[j]);
}

bool BanditState::warmed_up() const {
  return std::all_of(plays_.begin(), plays_.end(), [](long long z) { return z >= 1; });
}

void BanditState::reward_update(int j, bool gamma) {
  ++plays_[j];
  ++total_;
  if (gamma) ++rewards_[j];
}

double ucb_index(const BanditState& state, int j, double epsilon) {
  if (state.plays(j) == 0) {
    throw Error(ErrorCode::kInvalidArgument, "arm " + std::to_string(j) + " has not been played; run warm-up first",
                "plays");
  }
  const double z = static_cast<double>(state.total_plays());
  return state.mean_reward(j) + std::sqrt(2.0 * std::log(z) / (static_cast<double>(state.plays(j)) + epsilon));
}

std::vector<Assignment> warmup_schedule(int subsystems, int channels, const CounterRng& rng) {
  std::vector<Assignment> order;
  for (int i = 0; i < subsystems; ++i) {
    for (int j = 0; j < channels; ++j) order.push_back({i, j});
  }
  // Fisher-Yates driven by the warm-up substream.
  for (std::size_t k = order.size(); k > 1; --k) {
    const auto pick = static_cast<std::size_t>(rng.uniform({StreamRole::kWarmup}, k) * static_cast<double>(k));
    std::swap(order[k - 1], order[std::min(pick, k - 1)]);
  }
  return order;
}

double draw_epsilon(const BanditState& state, const CounterRng& rng, int subsystem, int channel,
                    std::uint64_t slot) {
  const auto counter = slot * static_cast<std::uint64_t>(state.channels()) + static_cast<std::uint64_t>(channel);
  return rng.uniform({StreamRole::kEpsilon, static_cast<std::uint32_t>(subsystem)}, counter, state.epsilon_lo(),
                     state.epsilon_hi());
}

Algorithm1Step algorithm1_step(std::span<BanditState> states, std::span<CoilTable> tables,
                               std::span<const int> ages, const LinkQualityMatrix& q,
                               const ChannelIndex& index, const CounterRng& rng, std::uint64_t slot,
                               const Algorithm1Options& opts, long long& floor_events) {
  const auto n = static_cast<int>(states.size());
  const auto m = static_cast<int>(q.channels());
  if (n != q.subsystems() || tables.size() != states.size() || ages.size() != states.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "bandit states, models, ages and q rows must agree");
  }

  Algorithm1Step out;
  out.qhat.resize(n, m);
  Eigen::MatrixXd weight(n, m);
  for (int i = 0; i < n; ++i) {
    const double priority = opts.weight_by_coil ? tables[i].coil(ages[i]) : 1.0;
    for (int j = 0; j < m; ++j) {
      const double eps = opts.perturb ? draw_epsilon(states[i], rng, i, j, slot) : 0.0;
      out.qhat(i, j) = index.index(i, states[i], j, eps);
      weight(i, j) = timer_priority(priority * out.qhat(i, j), floor_events);
    }
  }
  out.allocation = resolve_contention(compute_timers(weight, opts.lambda));
  out.outcome = transmit(out.allocation, q, rng, slot);
  out.chosen.assign(static_cast<std::size_t>(n), std::nullopt);
  for (std::size_t p = 0; p < out.allocation.size(); ++p) {
    const auto& a = out.allocation.pairs()[p];
    out.chosen[a.subsystem] = a.channel;
    states[a.subsystem].reward_update(a.channel, out.outcome.gamma[p]);
  }
  return out;
}

}  // namespace wncs
