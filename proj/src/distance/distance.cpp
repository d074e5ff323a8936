#include "eventimp/distance/distance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eventimp/core/errors.hpp"

namespace eventimp {

namespace {

constexpr double kIdentical = 1e-9;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double pair_tv(const RewardDistribution& a, const RewardDistribution& b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) sum += std::abs(a.mass()[j] - b.mass()[j]);
  return 0.5 * sum;
}

bool identical(const RewardDistribution& a, const RewardDistribution& b) {
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (std::abs(a.mass()[j] - b.mass()[j]) > kIdentical) return false;
  }
  return true;
}

}  // namespace

WeightedDistributionFamily::WeightedDistributionFamily(std::vector<RewardDistribution> members,
                                                       std::vector<double> weights)
    : members_(std::move(members)), weights_(std::move(weights)) {
  if (members_.empty()) throw ContractViolation("distribution family is empty");
  if (members_.size() != weights_.size()) {
    throw ContractViolation("distribution family needs one weight per member");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ContractViolation("weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > RewardDistribution::kTolerance) {
    throw ContractViolation("weights must sum to one");
  }
  for (const auto& m : members_) {
    if (!m.same_labels(members_.front())) {
      throw ContractViolation("family members use different reward label sets");
    }
  }
}

double shannon_entropy(std::span<const double> mass) {
  double h = 0.0;
  for (double p : mass) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double shannon_entropy(const RewardDistribution& d) { return shannon_entropy(d.mass()); }

double weighted_jsd(const WeightedDistributionFamily& family) {
  const std::size_t m = family.size();
  if (m < 2) throw ContractViolation("weighted JSD needs at least two members");

  // Exact zero whenever every member that carries weight is the same.
  std::optional<std::size_t> first;
  bool all_same = true;
  for (std::size_t i = 0; i < m && all_same; ++i) {
    if (family.weight(i) <= 0.0) continue;
    if (!first) {
      first = i;
    } else {
      all_same = identical(family.member(*first), family.member(i));
    }
  }
  if (all_same) return 0.0;

  const std::size_t n = family.labels().size();
  std::vector<double> mixture(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) mixture[j] += family.weight(i) * family.member(i)[j];
  }
  // sum_i pi_i KL(P_i || M) equals the entropy difference and avoids
  // cancellation between two large entropies.
  double js = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double w = family.weight(i);
    if (w <= 0.0) continue;
    double kl = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = family.member(i)[j];
      if (p > 0.0) kl += p * std::log(p / mixture[j]);
    }
    js += w * kl;
  }
  return clamp01(js / std::log(static_cast<double>(m)));
}

double win_prob_difference(const WeightedDistributionFamily& family, RewardLabel target) {
  if (family.size() != 2) {
    throw ContractViolation("win probability difference needs exactly two members");
  }
  if (target >= family.labels().size()) throw ContractViolation("unknown target reward label");
  return clamp01(std::abs(family.member(0)[target] - family.member(1)[target]));
}

double total_variation(const WeightedDistributionFamily& family) {
  const std::size_t m = family.size();
  if (m < 2) throw ContractViolation("total variation needs at least two members");
  if (m == 2) return clamp01(pair_tv(family.member(0), family.member(1)));
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = i + 1; k < m; ++k) {
      const double w = family.weight(i) * family.weight(k);
      num += w * pair_tv(family.member(i), family.member(k));
      den += w;
    }
  }
  if (den <= 0.0) return 0.0;  // a single member carries all the weight
  return clamp01(num / den);
}

DistanceSpec DistanceSpec::parse(std::string_view text) {
  if (text == "jsd") return {DistanceKind::kJsd, {}};
  if (text == "tv") return {DistanceKind::kTotalVariation, {}};
  if (text.starts_with("winprob")) {
    std::string target = "nominated";
    if (auto colon = text.find(':'); colon != std::string_view::npos) {
      target = std::string(text.substr(colon + 1));
    }
    return {DistanceKind::kWinProbDifference, std::move(target)};
  }
  throw ContractViolation("unknown distance '" + std::string(text) +
                          "' (expected jsd, tv or winprob[:label])");
}

std::string DistanceSpec::name() const {
  switch (kind) {
    case DistanceKind::kJsd:
      return "jsd";
    case DistanceKind::kTotalVariation:
      return "tv";
    case DistanceKind::kWinProbDifference:
      return "winprob:" + target;
  }
  return "?";
}

double DistanceSpec::operator()(const WeightedDistributionFamily& family) const {
  switch (kind) {
    case DistanceKind::kJsd:
      return weighted_jsd(family);
    case DistanceKind::kTotalVariation:
      return total_variation(family);
    case DistanceKind::kWinProbDifference:
      return win_prob_difference(family, family.labels().at(target));
  }
  throw ContractViolation("unknown distance kind");
}

}  // namespace eventimp
