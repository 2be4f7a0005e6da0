#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace morita {

// One verification entry: named check, measured residual, the tolerance it
// was held to, and a short anchor string naming the identity being checked.
struct CheckEntry {
  std::string check;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string ref;
};

struct Report {
  std::string name;
  std::vector<CheckEntry> entries;

  void add(std::string check, double residual, double tolerance, std::string ref) {
    entries.push_back({std::move(check), residual, tolerance, residual <= tolerance,
                       std::move(ref)});
  }
  void add_flag(std::string check, bool ok, std::string ref) {
    entries.push_back({std::move(check), ok ? 0.0 : 1.0, 0.5, ok, std::move(ref)});
  }
  void merge(const Report& other) {
    entries.insert(entries.end(), other.entries.begin(), other.entries.end());
  }
  bool pass() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const CheckEntry& e) { return e.pass; });
  }
  double max_residual() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.residual);
    return m;
  }
  void sort_by_name() {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const CheckEntry& a, const CheckEntry& b) { return a.check < b.check; });
  }
};

}  // namespace morita
