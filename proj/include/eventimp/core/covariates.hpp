#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "eventimp/core/ids.hpp"

namespace eventimp {

/// Interned covariate name. Interning happens once (typically when a model
/// is constructed) so lookups on the simulation hot path compare integers.
class Feature {
 public:
  static Feature named(std::string_view name);

  [[nodiscard]] std::string_view name() const;
  [[nodiscard]] std::uint32_t id() const { return id_; }

  auto operator<=>(const Feature&) const = default;

 private:
  explicit Feature(std::uint32_t id) : id_(id) {}
  std::uint32_t id_ = 0;
};

/// (feature name, optional contestant) pair.
struct CovariateKey {
  Feature feature;
  std::optional<ContestantId> contestant;

  auto operator<=>(const CovariateKey&) const = default;
};

/// Flat set of named scalar covariates. Keys are unique and values finite.
class CovariateSet {
 public:
  using Entry = std::pair<CovariateKey, double>;

  void set(Feature feature, double value) { set(CovariateKey{feature, std::nullopt}, value); }
  void set(Feature feature, ContestantId contestant, double value) {
    set(CovariateKey{feature, contestant}, value);
  }
  void set(const CovariateKey& key, double value);

  bool erase(const CovariateKey& key);

  [[nodiscard]] std::optional<double> find(Feature feature,
                                           std::optional<ContestantId> contestant = {}) const;
  /// Throws ContractViolation when the key is absent.
  [[nodiscard]] double at(Feature feature, std::optional<ContestantId> contestant = {}) const;
  [[nodiscard]] bool contains(Feature feature, std::optional<ContestantId> contestant = {}) const {
    return find(feature, contestant).has_value();
  }

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] auto begin() const { return entries_.begin(); }
  [[nodiscard]] auto end() const { return entries_.end(); }

  bool operator==(const CovariateSet&) const = default;

 private:
  std::vector<Entry> entries_;  // sorted by key
};

/// What an outcome model sees for one event: the event's own covariates,
/// falling back to contest-wide contestant covariates.
class CovariateView {
 public:
  CovariateView(const CovariateSet& event, const CovariateSet& contestants)
      : event_(&event), contestants_(&contestants) {}

  [[nodiscard]] std::optional<double> find(Feature feature,
                                           std::optional<ContestantId> contestant = {}) const {
    if (auto v = event_->find(feature, contestant)) return v;
    return contestants_->find(feature, contestant);
  }
  [[nodiscard]] double at(Feature feature, std::optional<ContestantId> contestant = {}) const;

  [[nodiscard]] const CovariateSet& event() const { return *event_; }
  [[nodiscard]] const CovariateSet& contestants() const { return *contestants_; }

 private:
  const CovariateSet* event_;
  const CovariateSet* contestants_;
};

}  // namespace eventimp
