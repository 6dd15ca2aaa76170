#pragma once

// Balanced panels of non-negative counts with per-observation covariates.
// Storage is segment-major so that a segment's periods are contiguous.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "switchcount/errors.hpp"

namespace switchcount {

class PanelData {
 public:
  PanelData() = default;

  /// counts and covariates indexed [n * T + t]; each covariate row must start with 1.
  PanelData(std::size_t n_segments, std::size_t n_periods, std::vector<std::int64_t> counts,
            std::vector<std::vector<double>> covariates, std::vector<std::string> variable_names,
            std::vector<std::string> segment_ids = {}, std::vector<std::string> period_ids = {})
      : n_segments_(n_segments),
        n_periods_(n_periods),
        counts_(std::move(counts)),
        variable_names_(std::move(variable_names)),
        segment_ids_(std::move(segment_ids)),
        period_ids_(std::move(period_ids)) {
    if (n_segments_ == 0 || n_periods_ == 0) throw SchemaError("panel must be non-empty");
    const std::size_t cells = n_segments_ * n_periods_;
    if (counts_.size() != cells || covariates.size() != cells)
      throw BalancedPanelError("panel must contain exactly N*T cells");
    n_vars_ = variable_names_.size();
    if (n_vars_ == 0) throw SchemaError("at least the intercept column is required");
    x_.reserve(cells * n_vars_);
    for (std::size_t i = 0; i < cells; ++i) {
      if (counts_[i] < 0) throw CountDomainError("negative count in panel");
      if (covariates[i].size() != n_vars_) throw SchemaError("ragged covariate rows");
      if (covariates[i][0] != 1.0) throw SchemaError("first covariate must be the intercept 1");
      x_.insert(x_.end(), covariates[i].begin(), covariates[i].end());
    }
    if (segment_ids_.empty())
      for (std::size_t n = 0; n < n_segments_; ++n) segment_ids_.push_back(std::to_string(n + 1));
    if (period_ids_.empty())
      for (std::size_t t = 0; t < n_periods_; ++t) period_ids_.push_back(std::to_string(t + 1));
    if (segment_ids_.size() != n_segments_ || period_ids_.size() != n_periods_)
      throw SchemaError("identifier lists do not match panel dimensions");
  }

  std::size_t n_segments() const noexcept { return n_segments_; }
  std::size_t n_periods() const noexcept { return n_periods_; }
  std::size_t n_cells() const noexcept { return counts_.size(); }
  std::size_t n_vars() const noexcept { return n_vars_; }

  std::size_t index(std::size_t t, std::size_t n) const noexcept { return n * n_periods_ + t; }

  std::int64_t count(std::size_t t, std::size_t n) const noexcept { return counts_[index(t, n)]; }
  std::span<const double> x(std::size_t t, std::size_t n) const noexcept {
    return {x_.data() + index(t, n) * n_vars_, n_vars_};
  }

  // Flat access by cell index.
  std::int64_t count_at(std::size_t cell) const noexcept { return counts_[cell]; }
  std::span<const double> x_at(std::size_t cell) const noexcept {
    return {x_.data() + cell * n_vars_, n_vars_};
  }

  std::span<const std::int64_t> counts() const noexcept { return counts_; }
  std::span<const std::int64_t> segment_counts(std::size_t n) const noexcept {
    return {counts_.data() + n * n_periods_, n_periods_};
  }

  const std::vector<std::string>& variable_names() const noexcept { return variable_names_; }
  const std::vector<std::string>& segment_ids() const noexcept { return segment_ids_; }
  const std::vector<std::string>& period_ids() const noexcept { return period_ids_; }

  /// Same design, new counts (used for replicated datasets).
  PanelData with_counts(std::vector<std::int64_t> counts) const {
    if (counts.size() != counts_.size()) throw SchemaError("replacement counts have wrong size");
    PanelData out = *this;
    out.counts_ = std::move(counts);
    return out;
  }

  bool operator==(const PanelData&) const = default;

 private:
  std::size_t n_segments_ = 0;
  std::size_t n_periods_ = 0;
  std::size_t n_vars_ = 0;
  std::vector<std::int64_t> counts_;
  std::vector<double> x_;
  std::vector<std::string> variable_names_;
  std::vector<std::string> segment_ids_;
  std::vector<std::string> period_ids_;
};

/// Names of the identifier and count columns in a CSV file.
struct ColumnMapping {
  std::string segment = "segment_id";
  std::string period = "period";
  std::string count = "count";
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace and CR
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Sorted unique ids: numeric order when every id parses as a number, else lexicographic.
inline std::vector<std::string> sorted_ids(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const bool numeric = std::all_of(ids.begin(), ids.end(),
                                   [](const std::string& s) { return parse_double(s).has_value(); });
  if (numeric)
    std::stable_sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
      return *parse_double(a) < *parse_double(b);
    });
  return ids;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parse a balanced panel from CSV. Columns other than the three mapped ones
/// are covariates in header order; an intercept column is prepended.
inline PanelData load_panel(std::istream& in, const ColumnMapping& mapping = {}) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty input: header row required");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);
  auto find_col = [&header](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("missing required column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t seg_col = find_col(mapping.segment);
  const std::size_t per_col = find_col(mapping.period);
  const std::size_t cnt_col = find_col(mapping.count);
  std::vector<std::size_t> cov_cols;
  std::vector<std::string> names{"intercept"};
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != seg_col && c != per_col && c != cnt_col) {
      cov_cols.push_back(c);
      names.push_back(header[c]);
    }

  struct Row {
    std::string seg, per;
    std::int64_t count;
    std::vector<double> x;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size())
      throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    Row r;
    r.seg = f[seg_col];
    r.per = f[per_col];
    const auto cv = detail::parse_double(f[cnt_col]);
    if (!cv || *cv < 0.0 || std::floor(*cv) != *cv || *cv > 9.0e15)
      throw CountDomainError("line " + std::to_string(line_no) + ": invalid count '" +
                             f[cnt_col] + "'");
    r.count = static_cast<std::int64_t>(*cv);
    r.x.reserve(cov_cols.size() + 1);
    r.x.push_back(1.0);
    for (auto c : cov_cols) {
      const auto v = detail::parse_double(f[c]);
      if (!v || !std::isfinite(*v))
        throw SchemaError("line " + std::to_string(line_no) + ": non-numeric covariate '" +
                          f[c] + "'");
      r.x.push_back(*v);
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw BalancedPanelError("no data rows");

  std::vector<std::string> segs, pers;
  for (const auto& r : rows) {
    segs.push_back(r.seg);
    pers.push_back(r.per);
  }
  segs = detail::sorted_ids(std::move(segs));
  pers = detail::sorted_ids(std::move(pers));
  std::map<std::string, std::size_t> seg_index, per_index;
  for (std::size_t i = 0; i < segs.size(); ++i) seg_index[segs[i]] = i;
  for (std::size_t i = 0; i < pers.size(); ++i) per_index[pers[i]] = i;

  const std::size_t N = segs.size(), T = pers.size();
  std::vector<std::int64_t> counts(N * T, 0);
  std::vector<std::vector<double>> xs(N * T);
  std::vector<bool> seen(N * T, false);
  for (auto& r : rows) {
    const std::size_t cell = seg_index[r.seg] * T + per_index[r.per];
    if (seen[cell])
      throw BalancedPanelError("duplicate cell segment=" + r.seg + " period=" + r.per);
    seen[cell] = true;
    counts[cell] = r.count;
    xs[cell] = std::move(r.x);
  }
  for (std::size_t cell = 0; cell < N * T; ++cell)
    if (!seen[cell])
      throw BalancedPanelError("missing cell segment=" + segs[cell / T] +
                               " period=" + pers[cell % T]);
  return PanelData(N, T, std::move(counts), std::move(xs), std::move(names), std::move(segs),
                   std::move(pers));
}

/// Write the panel in the layout load_panel reads (intercept column omitted).
inline void write_panel(std::ostream& out, const PanelData& data, const ColumnMapping& mapping = {}) {
  out << mapping.segment << ',' << mapping.period << ',' << mapping.count;
  for (std::size_t k = 1; k < data.n_vars(); ++k) out << ',' << data.variable_names()[k];
  out << '\n';
  for (std::size_t n = 0; n < data.n_segments(); ++n)
    for (std::size_t t = 0; t < data.n_periods(); ++t) {
      out << data.segment_ids()[n] << ',' << data.period_ids()[t] << ',' << data.count(t, n);
      const auto x = data.x(t, n);
      for (std::size_t k = 1; k < x.size(); ++k) out << ',' << detail::format_double(x[k]);
      out << '\n';
    }
}

struct VariableSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1 denominator)
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

/// Summary statistics of every covariate except the intercept, over all N*T observations.
inline std::vector<VariableSummary> summarize(const PanelData& data) {
  std::vector<VariableSummary> out;
  const std::size_t cells = data.n_cells();
  std::vector<double> col(cells);
  for (std::size_t k = 1; k < data.n_vars(); ++k) {
    for (std::size_t i = 0; i < cells; ++i) col[i] = data.x_at(i)[k];
    VariableSummary s;
    s.name = data.variable_names()[k];
    double sum = 0.0;
    for (double v : col) sum += v;
    s.mean = sum / static_cast<double>(cells);
    double ss = 0.0;
    for (double v : col) ss += (v - s.mean) * (v - s.mean);
    s.sd = cells > 1 ? std::sqrt(ss / static_cast<double>(cells - 1)) : 0.0;
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    s.median = cells % 2 == 1 ? sorted[cells / 2]
                              : 0.5 * (sorted[cells / 2 - 1] + sorted[cells / 2]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace switchcount
