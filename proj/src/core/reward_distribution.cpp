#include "eventimp/core/reward_distribution.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include "eventimp/core/errors.hpp"

namespace eventimp {

RewardLabelSet::RewardLabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw ContractViolation("reward label set must not be empty");
  std::set<std::string_view> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) throw ContractViolation("duplicate reward label '" + n + "'");
  }
}

std::optional<RewardLabel> RewardLabelSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<RewardLabel>(i);
  }
  return std::nullopt;
}

RewardLabel RewardLabelSet::at(std::string_view name) const {
  if (auto l = find(name)) return *l;
  throw ContractViolation("unknown reward label '" + std::string(name) + "'");
}

RewardDistribution::RewardDistribution(std::shared_ptr<const RewardLabelSet> labels,
                                       std::vector<double> mass)
    : labels_(std::move(labels)), mass_(std::move(mass)) {
  if (!labels_) throw ContractViolation("reward distribution needs a label set");
  if (mass_.size() != labels_->size()) {
    throw ContractViolation("reward distribution size does not match its label set");
  }
  double total = 0.0;
  for (double p : mass_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ContractViolation("reward probabilities must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kTolerance) {
    throw ContractViolation("reward probabilities sum to " + std::to_string(total));
  }
}

RewardDistribution RewardDistribution::point_mass(std::shared_ptr<const RewardLabelSet> labels,
                                                  RewardLabel label) {
  std::vector<double> mass(labels->size(), 0.0);
  mass.at(label) = 1.0;
  return {std::move(labels), std::move(mass)};
}

RewardDistribution RewardDistribution::from_counts(std::shared_ptr<const RewardLabelSet> labels,
                                                   std::span<const std::uint64_t> counts) {
  const std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (total == 0) throw ContractViolation("empirical distribution needs at least one path");
  std::vector<double> mass(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    mass[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return {std::move(labels), std::move(mass)};
}

double RewardDistribution::probability(std::string_view label) const {
  return mass_[labels_->at(label)];
}

bool RewardDistribution::same_labels(const RewardDistribution& other) const {
  return labels_ == other.labels_ || *labels_ == *other.labels_;
}

}  // namespace eventimp
