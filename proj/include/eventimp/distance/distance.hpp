#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eventimp/core/reward_distribution.hpp"

namespace eventimp {

/// Conditional reward distributions of one contestant, one per outcome of
/// an event, weighted by the outcome probabilities.
class WeightedDistributionFamily {
 public:
  /// Throws ContractViolation on size mismatch, invalid weights, or members
  /// over different label sets.
  WeightedDistributionFamily(std::vector<RewardDistribution> members, std::vector<double> weights);

  [[nodiscard]] std::size_t size() const { return members_.size(); }
  [[nodiscard]] const RewardDistribution& member(std::size_t i) const { return members_[i]; }
  [[nodiscard]] double weight(std::size_t i) const { return weights_[i]; }
  [[nodiscard]] std::span<const RewardDistribution> members() const { return members_; }
  [[nodiscard]] std::span<const double> weights() const { return weights_; }
  [[nodiscard]] const RewardLabelSet& labels() const { return members_.front().labels(); }

 private:
  std::vector<RewardDistribution> members_;
  std::vector<double> weights_;
};

/// Natural-log entropy, 0 ln 0 = 0.
double shannon_entropy(const RewardDistribution& d);
double shannon_entropy(std::span<const double> mass);

/// [H(sum pi_i P_i) - sum pi_i H(P_i)] / ln(m), in [0, 1].
double weighted_jsd(const WeightedDistributionFamily& family);

/// |P_1(target) - P_2(target)|; the family must have exactly two members.
double win_prob_difference(const WeightedDistributionFamily& family, RewardLabel target);

/// Half L1 distance for two members; for more, the pi_i pi_j weighted mean
/// of pairwise distances.
double total_variation(const WeightedDistributionFamily& family);

enum class DistanceKind { kJsd, kTotalVariation, kWinProbDifference };

/// Metric selector. The win-probability difference needs a target label name.
struct DistanceSpec {
  DistanceKind kind = DistanceKind::kJsd;
  std::string target;

  static DistanceSpec parse(std::string_view text);
  [[nodiscard]] std::string name() const;
  [[nodiscard]] double operator()(const WeightedDistributionFamily& family) const;
};

}  // namespace eventimp
