#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace riskagg {

/// Calendar date, parsed from and written as ISO-8601 `YYYY-MM-DD`.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;

  static Date parse(std::string_view text);
  std::string to_string() const;
  bool same_month(const Date& other) const noexcept {
    return year == other.year && month == other.month;
  }
};

/// Dated n x d matrix of per-period returns (or prices before conversion),
/// with unique column labels and an optional label -> category map.
///
/// Invariants (checked by validate()): dates strictly increasing and one per
/// row, labels unique and one per column, values finite, and when categories
/// are present every label has exactly one.
struct ReturnPanel {
  std::vector<Date> dates;
  std::vector<std::string> labels;
  std::map<std::string, std::string> categories;
  Eigen::MatrixXd values;
  /// Rows removed during ingestion because of missing or non-numeric cells.
  std::size_t dropped_rows = 0;

  Eigen::Index rows() const noexcept { return values.rows(); }
  Eigen::Index cols() const noexcept { return values.cols(); }

  void validate() const;

  std::optional<Eigen::Index> find_column(std::string_view label) const;
  Eigen::Index column_index(std::string_view label) const;

  /// Rows [begin, begin + count).
  ReturnPanel slice_rows(Eigen::Index begin, Eigen::Index count) const;
  ReturnPanel select_columns(const std::vector<Eigen::Index>& columns) const;
};

struct LoadOptions {
  std::string date_column = "date";
  /// Optional `label,category` sidecar file.
  std::optional<std::filesystem::path> categories_path;
  std::size_t min_rows = 2;
};

ReturnPanel load_panel(std::istream& csv, const LoadOptions& options = {});
ReturnPanel load_panel_file(const std::filesystem::path& path, const LoadOptions& options = {});

/// Reads `label,category` lines. A header line `label,category` is skipped.
std::map<std::string, std::string> load_categories(std::istream& in);
std::map<std::string, std::string> load_categories_file(const std::filesystem::path& path);

/// Writes the panel in the same CSV layout load_panel reads, with 17
/// significant digits so that a reload is exact.
void write_panel(std::ostream& out, const ReturnPanel& panel);

/// 17 significant digits; reloads bit-exactly.
std::string format_number(double value);

enum class ReturnMethod { Log, Arithmetic };

/// Converts a price panel into returns; the first date is consumed.
ReturnPanel to_returns(const ReturnPanel& prices, ReturnMethod method = ReturnMethod::Log);

/// Per-column mean and sample (n - 1) standard deviation.
struct ColumnStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

ColumnStats column_stats(const Eigen::MatrixXd& values);

struct StandardizedPanel {
  ReturnPanel base;
  ColumnStats stats;
  Eigen::MatrixXd values;

  Eigen::Index rows() const noexcept { return values.rows(); }
  Eigen::Index cols() const noexcept { return values.cols(); }
  const std::vector<std::string>& labels() const noexcept { return base.labels; }

  /// The standardized values packaged as an ordinary panel.
  ReturnPanel as_panel() const;
};

/// Standardizes with statistics computed from the panel itself.
StandardizedPanel standardize(const ReturnPanel& panel);
/// Standardizes with externally supplied statistics (out-of-window use).
StandardizedPanel standardize(const ReturnPanel& panel, const ColumnStats& stats);

struct WindowSpec {
  Eigen::Index width = 250;
  Eigen::Index stride = 1;
  /// When set, one window ends at every month-end row (last available date
  /// of each calendar month) with at least `width` rows of history; stride
  /// is ignored.
  bool month_end = false;
};

struct Window {
  Date end_date;
  Eigen::Index begin_row = 0;
  ReturnPanel panel;
};

std::vector<Window> rolling_windows(const ReturnPanel& panel, const WindowSpec& spec);

}  // namespace riskagg
