#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace avc {

/// Column declarations for the segment and panel files.
struct CovariateSchema {
  std::vector<std::string> segment_covariates;
  std::vector<std::string> time_covariates;
  /// Subset of segment_covariates that must be exactly 0 or 1.
  std::vector<std::string> flag_covariates;
  /// Subset of segment_covariates that must be >= 0 (widths, lengths, ...).
  std::vector<std::string> nonnegative_covariates;
  int months = 12;
};

/// One segment's time-invariant design factors.
struct SegmentCovariates {
  std::string segment_id;
  Eigen::VectorXd x;
};

/// One segment-month of the panel (month is 1-based as in the files).
struct PanelCell {
  std::string segment_id;
  int month = 0;
  long avc_count = 0;
  Eigen::VectorXd y;
};

/// A complete segment x month panel. Immutable after construction.
///
/// Cells are stored month-major: cell(s, t) = t * S + s with 0-based month t,
/// so each month's cells are contiguous.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> segment_ids,
          std::vector<std::string> segment_covariate_names, Eigen::MatrixXd x,
          std::vector<std::string> time_covariate_names, Eigen::MatrixXd y,
          Eigen::VectorXi counts, int months);

  Eigen::Index segments() const { return static_cast<Eigen::Index>(ids_.size()); }
  int months() const { return months_; }
  Eigen::Index cells() const { return segments() * months_; }
  Eigen::Index cell(Eigen::Index s, int t) const { return t * segments() + s; }
  int month_of(Eigen::Index cell) const { return static_cast<int>(cell / segments()); }
  Eigen::Index segment_of(Eigen::Index cell) const { return cell % segments(); }

  Eigen::Index segment_dim() const { return x_.cols(); }
  Eigen::Index time_dim() const { return y_.cols(); }

  /// S x P design matrix.
  const Eigen::MatrixXd& x() const { return x_; }
  /// cells x Q time-varying covariates.
  const Eigen::MatrixXd& y() const { return y_; }
  const Eigen::VectorXi& counts() const { return counts_; }

  const std::vector<std::string>& segment_ids() const { return ids_; }
  const std::vector<std::string>& segment_covariate_names() const { return x_names_; }
  const std::vector<std::string>& time_covariate_names() const { return y_names_; }

  std::optional<Eigen::Index> segment_covariate_index(const std::string& name) const;
  std::optional<Eigen::Index> time_covariate_index(const std::string& name) const;
  std::optional<Eigen::Index> segment_index(const std::string& id) const;

  SegmentCovariates segment(Eigen::Index s) const;
  PanelCell panel_cell(Eigen::Index s, int t) const;

  /// Observed AVC totals per month.
  Eigen::VectorXd monthly_observed() const;

  /// Same panel with the design matrix replaced (dimensions must match).
  Dataset with_design(Eigen::MatrixXd x) const;
  /// Same design with new counts (used when regenerating data).
  Dataset with_counts(Eigen::VectorXi counts) const;

 private:
  std::vector<std::string> ids_;
  std::vector<std::string> x_names_;
  std::vector<std::string> y_names_;
  Eigen::MatrixXd x_;
  Eigen::MatrixXd y_;
  Eigen::VectorXi counts_;
  int months_ = 0;
};

/// Read and validate the segment and panel CSV files against a schema.
Dataset load_dataset(const std::filesystem::path& segments_path,
                     const std::filesystem::path& panel_path,
                     const CovariateSchema& schema);

void write_segments_csv(const Dataset& data, const std::filesystem::path& path);
void write_panel_csv(const Dataset& data, const std::filesystem::path& path);

struct CovariateSummary {
  std::string name;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

/// min/mean/max per segment covariate, then per time-varying covariate.
std::vector<CovariateSummary> summarize_covariates(const Dataset& data);

/// Schema taken from the file headers: every segments column other than
/// segment_id is a segment covariate, every panel column other than
/// segment_id, month and avc_count is time-varying.
CovariateSchema infer_schema(const std::filesystem::path& segments_path,
                             const std::filesystem::path& panel_path, int months = 12);

/// Schema that accepts exactly the columns of an existing dataset.
CovariateSchema schema_of(const Dataset& data);

}  // namespace avc
