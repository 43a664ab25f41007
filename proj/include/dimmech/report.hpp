#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace dimmech {

/// Outcome of a sample-based check. `residuals` decide the verdict against
/// `tolerance`; `notes` are informational.
struct Report {
  std::string check;
  double tolerance = 0.0;
  std::size_t samples = 0;
  std::vector<std::pair<std::string, double>> residuals;
  std::vector<std::pair<std::string, std::string>> notes;
  bool passed = false;

  void add(const std::string &key, double value) { residuals.emplace_back(key, value); }
  void note(const std::string &key, const std::string &value) { notes.emplace_back(key, value); }

  double residual(const std::string &key) const {
    for (const auto &[k, v] : residuals)
      if (k == key)
        return v;
    for (const auto &[k, v] : notes)
      if (k == key)
        return std::stod(v);
    return -1.0;
  }

  double max_residual() const {
    double m = 0.0;
    for (const auto &r : residuals)
      m = std::max(m, r.second);
    return m;
  }

  /// Sets `passed` from the residuals; NaN never passes.
  Report &decide() {
    passed = true;
    for (const auto &r : residuals)
      if (!(r.second < tolerance))
        passed = false;
    return *this;
  }

  /// Flat key-value text block.
  std::string text() const {
    std::string out = "[" + check + "]\n";
    out += "tolerance = " + num(tolerance) + "\n";
    out += "samples = " + std::to_string(samples) + "\n";
    for (const auto &[k, v] : notes)
      out += k + " = " + v + "\n";
    for (const auto &[k, v] : residuals)
      out += k + " = " + num(v) + "\n";
    out += std::string("result = ") + (passed ? "pass" : "fail") + "\n";
    return out;
  }

  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
  }
};

} // namespace dimmech
