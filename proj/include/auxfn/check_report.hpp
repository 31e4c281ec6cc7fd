#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace auxfn {

/// Outcome of one numerical property check.
///
/// A slack is the amount by which an inequality holds (lhs - rhs for
/// `lhs >= rhs`); negative slacks are violations. `pass` is true exactly
/// when `worst_slack >= -tolerance` and no slack was NaN. Probes carry
/// the same statistics but are descriptive: callers must not gate on them.
struct CheckReport {
  std::string name;
  std::size_t samples = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  double mean_slack = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  bool probe = false;
  std::string notes;
  /// Worst slack per sub-condition, in insertion order.
  std::vector<std::pair<std::string, double>> components;

  double component(std::string_view key) const {
    for (const auto& [k, v] : components) {
      if (k == key) return v;
    }
    throw std::out_of_range("CheckReport '" + name + "' has no component '" +
                            std::string(key) + "'");
  }

  bool has_component(std::string_view key) const {
    return std::any_of(components.begin(), components.end(),
                       [&](const auto& c) { return c.first == key; });
  }

  void add_note(std::string_view note) {
    if (!notes.empty()) notes += "; ";
    notes += note;
  }
};

/// Streaming min/mean of slack values, optionally split into named
/// components whose worst values are reported alongside the total.
class SlackAccumulator {
 public:
  void add(double slack) {
    ++count_;
    if (std::isnan(slack)) {
      saw_nan_ = true;
      return;
    }
    worst_ = std::min(worst_, slack);
    sum_ += slack;
  }

  void add(std::string_view component, double slack) {
    add(slack);
    auto it = std::find_if(components_.begin(), components_.end(),
                           [&](const auto& c) { return c.first == component; });
    if (it == components_.end()) {
      components_.emplace_back(std::string(component), slack);
    } else if (std::isnan(slack) || slack < it->second) {
      it->second = slack;
    }
  }

  std::size_t count() const { return count_; }

  CheckReport finish(std::string name, double tolerance,
                     bool probe = false) const {
    CheckReport r;
    r.name = std::move(name);
    r.samples = count_;
    r.tolerance = tolerance;
    r.probe = probe;
    r.components = components_;
    if (saw_nan_) {
      r.worst_slack = std::numeric_limits<double>::quiet_NaN();
      r.pass = false;
      r.add_note("NaN slack encountered");
    } else {
      r.worst_slack = worst_;
      r.pass = worst_ >= -tolerance;
    }
    const std::size_t finite = count_;
    r.mean_slack = finite > 0 ? sum_ / static_cast<double>(finite) : 0.0;
    if (count_ == 0) r.add_note("no samples evaluated");
    return r;
  }

 private:
  std::size_t count_ = 0;
  double worst_ = std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
  bool saw_nan_ = false;
  std::vector<std::pair<std::string, double>> components_;
};

}  // namespace auxfn
