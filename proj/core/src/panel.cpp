#include "riskagg/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "riskagg/error.hpp"

namespace riskagg {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV record. Double-quoted fields may contain commas; embedded
// quotes are written as "".
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.emplace_back(trim(field));
  return fields;
}

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

int parse_int(std::string_view text, std::string_view whole) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::Parse, "unparseable date '" + std::string(whole) + "'");
  }
  return value;
}

bool is_leap(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

int days_in_month(int year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return month == 2 && is_leap(year) ? 29 : kDays[month - 1];
}

}  // namespace

Date Date::parse(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw Error(Errc::Parse, "unparseable date '" + std::string(text) + "', expected YYYY-MM-DD");
  }
  Date d;
  d.year = parse_int(text.substr(0, 4), text);
  d.month = parse_int(text.substr(5, 2), text);
  d.day = parse_int(text.substr(8, 2), text);
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) {
    throw Error(Errc::Parse, "invalid calendar date '" + std::string(text) + "'");
  }
  return d;
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, ec == std::errc{} ? ptr : buf);
}

void ReturnPanel::validate() const {
  if (static_cast<Eigen::Index>(dates.size()) != values.rows()) {
    throw Error(Errc::ShapeMismatch, "panel has " + std::to_string(dates.size()) + " dates but " +
                                         std::to_string(values.rows()) + " rows");
  }
  if (static_cast<Eigen::Index>(labels.size()) != values.cols()) {
    throw Error(Errc::ShapeMismatch, "panel has " + std::to_string(labels.size()) + " labels but " +
                                         std::to_string(values.cols()) + " columns");
  }
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i - 1] < dates[i])) {
      throw Error(Errc::Parse, "dates not strictly increasing at " + dates[i].to_string());
    }
  }
  std::set<std::string_view> seen;
  for (const auto& label : labels) {
    if (!seen.insert(label).second) throw Error(Errc::DuplicateLabel, "duplicate column '" + label + "'");
  }
  if (!values.allFinite()) throw Error(Errc::NonFinite, "panel contains non-finite values");
  if (!categories.empty()) {
    for (const auto& label : labels) {
      if (!categories.contains(label)) {
        throw Error(Errc::Config, "label '" + label + "' has no category");
      }
    }
  }
}

std::optional<Eigen::Index> ReturnPanel::find_column(std::string_view label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - labels.begin());
}

Eigen::Index ReturnPanel::column_index(std::string_view label) const {
  if (auto idx = find_column(label)) return *idx;
  throw Error(Errc::OutOfRange, "unknown column '" + std::string(label) + "'");
}

ReturnPanel ReturnPanel::slice_rows(Eigen::Index begin, Eigen::Index count) const {
  if (begin < 0 || count < 0 || begin + count > rows()) {
    throw Error(Errc::OutOfRange, "row slice out of range");
  }
  ReturnPanel out;
  out.dates.assign(dates.begin() + begin, dates.begin() + begin + count);
  out.labels = labels;
  out.categories = categories;
  out.values = values.middleRows(begin, count);
  return out;
}

ReturnPanel ReturnPanel::select_columns(const std::vector<Eigen::Index>& columns) const {
  ReturnPanel out;
  out.dates = dates;
  out.values.resize(rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const Eigen::Index c = columns[k];
    if (c < 0 || c >= cols()) throw Error(Errc::OutOfRange, "column index out of range");
    out.values.col(static_cast<Eigen::Index>(k)) = values.col(c);
    out.labels.push_back(labels[static_cast<std::size_t>(c)]);
    if (auto it = categories.find(labels[static_cast<std::size_t>(c)]); it != categories.end()) {
      out.categories.insert(*it);
    }
  }
  return out;
}

std::map<std::string, std::string> load_categories(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw Error(Errc::Parse, "category line " + std::to_string(line_no) + ": expected label,category");
    }
    if (line_no == 1 && fields[0] == "label" && fields[1] == "category") continue;
    if (!out.emplace(fields[0], fields[1]).second) {
      throw Error(Errc::DuplicateLabel, "label '" + fields[0] + "' has more than one category");
    }
  }
  return out;
}

std::map<std::string, std::string> load_categories_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open category file " + path.string());
  return load_categories(in);
}

ReturnPanel load_panel(std::istream& csv, const LoadOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  // Header, skipping blank and comment lines.
  while (std::getline(csv, line)) {
    ++line_no;
    if (!trim(line).empty() && trim(line).front() != '#') break;
  }
  if (trim(line).empty()) throw Error(Errc::Parse, "missing header row");
  const auto header = split_csv(line);
  if (header.size() < 2) throw Error(Errc::Parse, "expected a date column and at least one numeric column");
  if (header[0] != options.date_column) {
    throw Error(Errc::Parse, "first column must be '" + options.date_column + "', got '" + header[0] + "'");
  }

  ReturnPanel panel;
  panel.labels.assign(header.begin() + 1, header.end());
  {
    std::set<std::string_view> seen;
    for (const auto& label : panel.labels) {
      if (label.empty()) throw Error(Errc::Parse, "empty column name in header");
      if (!seen.insert(label).second) throw Error(Errc::DuplicateLabel, "duplicate column '" + label + "'");
    }
  }

  const std::size_t d = panel.labels.size();
  std::vector<double> flat;
  while (std::getline(csv, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split_csv(line);
    const Date date = Date::parse(fields[0]);
    bool usable = fields.size() == d + 1;
    std::vector<double> row;
    row.reserve(d);
    for (std::size_t j = 1; usable && j < fields.size(); ++j) {
      const auto v = parse_number(fields[j]);
      if (!v) {
        usable = false;
      } else {
        row.push_back(*v);
      }
    }
    if (!usable) {
      ++panel.dropped_rows;
      continue;
    }
    if (!panel.dates.empty() && !(panel.dates.back() < date)) {
      throw Error(Errc::Parse, "line " + std::to_string(line_no) + ": date " + date.to_string() +
                                   " is not after " + panel.dates.back().to_string());
    }
    panel.dates.push_back(date);
    flat.insert(flat.end(), row.begin(), row.end());
  }

  const auto n = static_cast<Eigen::Index>(panel.dates.size());
  if (panel.dates.size() < options.min_rows) {
    throw Error(Errc::InsufficientData, "only " + std::to_string(n) + " usable rows (need " +
                                            std::to_string(options.min_rows) + ")");
  }
  panel.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), n, static_cast<Eigen::Index>(d));

  if (options.categories_path) {
    auto all = load_categories_file(*options.categories_path);
    for (const auto& label : panel.labels) {
      auto it = all.find(label);
      if (it == all.end()) throw Error(Errc::Config, "label '" + label + "' has no category");
      panel.categories.insert(*it);
    }
  }
  panel.validate();
  return panel;
}

ReturnPanel load_panel_file(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open panel file " + path.string());
  return load_panel(in, options);
}

void write_panel(std::ostream& out, const ReturnPanel& panel) {
  out << "date";
  for (const auto& label : panel.labels) out << ',' << label;
  out << '\n';
  for (Eigen::Index i = 0; i < panel.rows(); ++i) {
    out << panel.dates[static_cast<std::size_t>(i)].to_string();
    for (Eigen::Index j = 0; j < panel.cols(); ++j) out << ',' << format_number(panel.values(i, j));
    out << '\n';
  }
}

ReturnPanel to_returns(const ReturnPanel& prices, ReturnMethod method) {
  if (prices.rows() < 2) throw Error(Errc::InsufficientData, "need at least two price rows");
  if (method == ReturnMethod::Log && (prices.values.array() <= 0.0).any()) {
    throw Error(Errc::OutOfRange, "non-positive price under log returns");
  }
  ReturnPanel out;
  out.dates.assign(prices.dates.begin() + 1, prices.dates.end());
  out.labels = prices.labels;
  out.categories = prices.categories;
  const Eigen::Index n = prices.rows() - 1;
  const auto ratio = prices.values.bottomRows(n).array() / prices.values.topRows(n).array();
  if (method == ReturnMethod::Log) {
    out.values = ratio.log().matrix();
  } else {
    out.values = (ratio - 1.0).matrix();
  }
  if (!out.values.allFinite()) throw Error(Errc::NonFinite, "returns contain non-finite values");
  return out;
}

ColumnStats column_stats(const Eigen::MatrixXd& values) {
  if (values.rows() < 2) throw Error(Errc::InsufficientData, "need at least two rows for sample statistics");
  ColumnStats s;
  s.mean = values.colwise().mean().transpose();
  const Eigen::MatrixXd centered = values.rowwise() - s.mean.transpose();
  s.sd = (centered.colwise().squaredNorm() / static_cast<double>(values.rows() - 1)).cwiseSqrt().transpose();
  return s;
}

ReturnPanel StandardizedPanel::as_panel() const {
  ReturnPanel out;
  out.dates = base.dates;
  out.labels = base.labels;
  out.categories = base.categories;
  out.values = values;
  return out;
}

StandardizedPanel standardize(const ReturnPanel& panel) {
  return standardize(panel, column_stats(panel.values));
}

StandardizedPanel standardize(const ReturnPanel& panel, const ColumnStats& stats) {
  if (stats.mean.size() != panel.cols() || stats.sd.size() != panel.cols()) {
    throw Error(Errc::ShapeMismatch, "statistics do not match panel width");
  }
  for (Eigen::Index j = 0; j < panel.cols(); ++j) {
    // Relative threshold: a column of identical values can carry rounding noise.
    const double scale = std::max(1.0, std::abs(stats.mean(j)));
    if (!(stats.sd(j) > 1e-14 * scale)) {
      throw Error(Errc::ZeroVariance, "column '" + panel.labels[static_cast<std::size_t>(j)] + "'");
    }
  }
  StandardizedPanel out;
  out.base = panel;
  out.stats = stats;
  out.values = ((panel.values.rowwise() - stats.mean.transpose()).array().rowwise() /
                stats.sd.transpose().array())
                   .matrix();
  return out;
}

std::vector<Window> rolling_windows(const ReturnPanel& panel, const WindowSpec& spec) {
  if (spec.width < 2) throw Error(Errc::OutOfRange, "window width must be at least 2");
  if (spec.stride < 1) throw Error(Errc::OutOfRange, "window stride must be at least 1");
  const Eigen::Index n = panel.rows();
  if (n < spec.width) {
    throw Error(Errc::InsufficientData, "panel has " + std::to_string(n) + " rows, window width is " +
                                            std::to_string(spec.width));
  }
  std::vector<Eigen::Index> ends;  // exclusive end rows
  if (spec.month_end) {
    for (Eigen::Index i = spec.width - 1; i < n; ++i) {
      const bool last_of_month =
          i + 1 == n || !panel.dates[static_cast<std::size_t>(i)].same_month(panel.dates[static_cast<std::size_t>(i + 1)]);
      if (last_of_month) ends.push_back(i + 1);
    }
  } else {
    for (Eigen::Index begin = 0; begin + spec.width <= n; begin += spec.stride) ends.push_back(begin + spec.width);
  }
  std::vector<Window> windows;
  windows.reserve(ends.size());
  for (const Eigen::Index end : ends) {
    Window w;
    w.begin_row = end - spec.width;
    w.end_date = panel.dates[static_cast<std::size_t>(end - 1)];
    w.panel = panel.slice_rows(w.begin_row, spec.width);
    windows.push_back(std::move(w));
  }
  return windows;
}

}  // namespace riskagg
