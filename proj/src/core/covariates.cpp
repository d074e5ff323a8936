#include "eventimp/core/covariates.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <string>
#include <unordered_map>

#include "eventimp/core/errors.hpp"

namespace eventimp {

namespace {

struct FeatureRegistry {
  std::mutex mutex;
  std::deque<std::string> names;
  std::unordered_map<std::string_view, std::uint32_t> ids;
};

FeatureRegistry& registry() {
  static FeatureRegistry instance;
  return instance;
}

std::string describe(const CovariateKey& key) {
  std::string out(key.feature.name());
  if (key.contestant) out += "[" + std::to_string(key.contestant->index()) + "]";
  return out;
}

}  // namespace

Feature Feature::named(std::string_view name) {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  if (auto it = reg.ids.find(name); it != reg.ids.end()) return Feature(it->second);
  const auto id = static_cast<std::uint32_t>(reg.names.size());
  reg.names.emplace_back(name);
  reg.ids.emplace(reg.names.back(), id);
  return Feature(id);
}

std::string_view Feature::name() const {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  return reg.names.at(id_);
}

void CovariateSet::set(const CovariateKey& key, double value) {
  if (!std::isfinite(value)) {
    throw ContractViolation("covariate " + describe(key) + " must be finite");
  }
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                             [](const Entry& e, const CovariateKey& k) { return e.first < k; });
  if (it != entries_.end() && it->first == key) {
    it->second = value;
  } else {
    entries_.insert(it, Entry{key, value});
  }
}

bool CovariateSet::erase(const CovariateKey& key) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                             [](const Entry& e, const CovariateKey& k) { return e.first < k; });
  if (it == entries_.end() || it->first != key) return false;
  entries_.erase(it);
  return true;
}

std::optional<double> CovariateSet::find(Feature feature,
                                         std::optional<ContestantId> contestant) const {
  // Sets are tiny; a linear scan beats binary search here.
  for (const auto& [key, value] : entries_) {
    if (key.feature == feature && key.contestant == contestant) return value;
  }
  return std::nullopt;
}

double CovariateSet::at(Feature feature, std::optional<ContestantId> contestant) const {
  if (auto v = find(feature, contestant)) return *v;
  throw ContractViolation("missing covariate " + describe(CovariateKey{feature, contestant}));
}

double CovariateView::at(Feature feature, std::optional<ContestantId> contestant) const {
  if (auto v = find(feature, contestant)) return *v;
  throw ContractViolation("missing covariate " + describe(CovariateKey{feature, contestant}));
}

}  // namespace eventimp
