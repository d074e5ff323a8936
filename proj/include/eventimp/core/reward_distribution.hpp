#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eventimp/core/ids.hpp"

namespace eventimp {

/// Finite, ordered vocabulary of reward labels declared by a reward function.
class RewardLabelSet {
 public:
  explicit RewardLabelSet(std::vector<std::string> names);

  [[nodiscard]] std::size_t size() const { return names_.size(); }
  [[nodiscard]] const std::string& name(RewardLabel label) const { return names_.at(label); }
  [[nodiscard]] std::optional<RewardLabel> find(std::string_view name) const;
  /// Throws ContractViolation for unknown names.
  [[nodiscard]] RewardLabel at(std::string_view name) const;
  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }

  bool operator==(const RewardLabelSet&) const = default;

 private:
  std::vector<std::string> names_;
};

/// Probability mass over a reward label set.
///
/// Mass is non-negative and sums to one within 1e-9; the constructors
/// enforce both.
class RewardDistribution {
 public:
  static constexpr double kTolerance = 1e-9;

  RewardDistribution(std::shared_ptr<const RewardLabelSet> labels, std::vector<double> mass);

  static RewardDistribution point_mass(std::shared_ptr<const RewardLabelSet> labels,
                                       RewardLabel label);
  /// Empirical distribution; labels never observed get mass zero.
  static RewardDistribution from_counts(std::shared_ptr<const RewardLabelSet> labels,
                                        std::span<const std::uint64_t> counts);

  [[nodiscard]] const RewardLabelSet& labels() const { return *labels_; }
  [[nodiscard]] const std::shared_ptr<const RewardLabelSet>& label_set() const { return labels_; }
  [[nodiscard]] std::span<const double> mass() const { return mass_; }
  [[nodiscard]] double operator[](RewardLabel label) const { return mass_.at(label); }
  [[nodiscard]] double probability(std::string_view label) const;
  [[nodiscard]] std::size_t size() const { return mass_.size(); }

  [[nodiscard]] bool same_labels(const RewardDistribution& other) const;

 private:
  std::shared_ptr<const RewardLabelSet> labels_;
  std::vector<double> mass_;
};

}  // namespace eventimp
