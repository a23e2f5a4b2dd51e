#pragma once

// Check records emitted by the verification suites.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace diffw {

struct CheckRecord {
  std::string name;
  /// Formula or statement the check exercises.
  std::string paper_anchor;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::optional<double> value;
};

inline void to_json(nlohmann::json& j, const CheckRecord& r) {
  auto num = [](double x) -> nlohmann::json {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  };
  j = nlohmann::json{{"name", r.name},
                     {"paper_anchor", r.paper_anchor},
                     {"residual", num(r.residual)},
                     {"tolerance", num(r.tolerance)},
                     {"pass", r.pass}};
  if (r.value) j["value"] = num(*r.value);
}

class Report {
 public:
  /// Passes iff residual <= tolerance (NaN fails).
  CheckRecord& add(std::string name, std::string anchor, double residual, double tolerance) {
    records_.push_back(CheckRecord{std::move(name), std::move(anchor), residual, tolerance, residual <= tolerance, {}});
    return records_.back();
  }
  CheckRecord& add_flag(std::string name, std::string anchor, bool ok) {
    return add(std::move(name), std::move(anchor), ok ? 0.0 : 1.0, 0.0);
  }
  void append(const Report& other) { records_.insert(records_.end(), other.records_.begin(), other.records_.end()); }

  const std::vector<CheckRecord>& records() const { return records_; }
  bool all_pass() const {
    return std::all_of(records_.begin(), records_.end(), [](const CheckRecord& r) { return r.pass; });
  }
  std::size_t size() const { return records_.size(); }

  std::vector<CheckRecord> sorted() const {
    auto out = records_;
    std::stable_sort(out.begin(), out.end(), [](const CheckRecord& a, const CheckRecord& b) { return a.name < b.name; });
    return out;
  }

  std::string to_json_text() const { return nlohmann::json(sorted()).dump(2) + "\n"; }

  std::string to_csv() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "name,paper_anchor,residual,tolerance,pass,value\n";
    auto quote = [](const std::string& s) {
      std::string q = "\"";
      for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      return q + "\"";
    };
    for (const auto& r : sorted()) {
      os << quote(r.name) << ',' << quote(r.paper_anchor) << ',' << r.residual << ',' << r.tolerance << ','
         << (r.pass ? "true" : "false") << ',';
      if (r.value) os << *r.value;
      os << '\n';
    }
    return os.str();
  }

 private:
  std::vector<CheckRecord> records_;
};

}  // namespace diffw
