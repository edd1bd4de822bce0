#include "avc/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "avc/errors.hpp"
#include "csv.hpp"

namespace avc {

namespace {

std::optional<Eigen::Index> find_name(const std::vector<std::string>& names,
                                      const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - names.begin());
}

std::string row_context(const std::filesystem::path& path, std::size_t line) {
  return path.filename().string() + " row " + std::to_string(line);
}

}  // namespace

Dataset::Dataset(std::vector<std::string> segment_ids,
                 std::vector<std::string> segment_covariate_names, Eigen::MatrixXd x,
                 std::vector<std::string> time_covariate_names, Eigen::MatrixXd y,
                 Eigen::VectorXi counts, int months)
    : ids_(std::move(segment_ids)),
      x_names_(std::move(segment_covariate_names)),
      y_names_(std::move(time_covariate_names)),
      x_(std::move(x)),
      y_(std::move(y)),
      counts_(std::move(counts)),
      months_(months) {
  const auto s = static_cast<Eigen::Index>(ids_.size());
  if (months_ < 1) throw DataError("dataset: months must be >= 1");
  if (x_.rows() != s || x_.cols() != static_cast<Eigen::Index>(x_names_.size())) {
    throw DataError("dataset: design matrix shape does not match segments/covariates");
  }
  if (y_.rows() != s * months_ || y_.cols() != static_cast<Eigen::Index>(y_names_.size())) {
    throw DataError("dataset: time-varying covariate shape does not match the panel");
  }
  if (counts_.size() != s * months_) throw DataError("dataset: count vector size mismatch");
  if (counts_.size() > 0 && counts_.minCoeff() < 0) {
    throw DataError("dataset: AVC counts must be nonnegative");
  }
  if (!x_.allFinite() || !y_.allFinite()) throw DataError("dataset: non-finite covariate");
  std::set<std::string> unique(ids_.begin(), ids_.end());
  if (unique.size() != ids_.size()) throw DataError("dataset: duplicate segment ids");
}

std::optional<Eigen::Index> Dataset::segment_covariate_index(const std::string& name) const {
  return find_name(x_names_, name);
}

std::optional<Eigen::Index> Dataset::time_covariate_index(const std::string& name) const {
  return find_name(y_names_, name);
}

std::optional<Eigen::Index> Dataset::segment_index(const std::string& id) const {
  return find_name(ids_, id);
}

SegmentCovariates Dataset::segment(Eigen::Index s) const {
  return {ids_.at(static_cast<std::size_t>(s)), x_.row(s).transpose()};
}

PanelCell Dataset::panel_cell(Eigen::Index s, int t) const {
  const auto c = cell(s, t);
  return {ids_.at(static_cast<std::size_t>(s)), t + 1, counts_[c], y_.row(c).transpose()};
}

Eigen::VectorXd Dataset::monthly_observed() const {
  Eigen::VectorXd totals = Eigen::VectorXd::Zero(months_);
  for (int t = 0; t < months_; ++t) {
    totals[t] = counts_.segment(t * segments(), segments()).cast<double>().sum();
  }
  return totals;
}

Dataset Dataset::with_design(Eigen::MatrixXd x) const {
  return Dataset(ids_, x_names_, std::move(x), y_names_, y_, counts_, months_);
}

Dataset Dataset::with_counts(Eigen::VectorXi counts) const {
  return Dataset(ids_, x_names_, x_, y_names_, y_, std::move(counts), months_);
}

// ---------------------------------------------------------------------------

Dataset load_dataset(const std::filesystem::path& segments_path,
                     const std::filesystem::path& panel_path,
                     const CovariateSchema& schema) {
  if (schema.segment_covariates.empty()) {
    throw ConfigError("schema declares no segment covariates");
  }
  if (schema.months < 1) throw ConfigError("schema: months must be >= 1");
  for (const auto& f : schema.flag_covariates) {
    if (!find_name(schema.segment_covariates, f)) {
      throw ConfigError("schema: flag covariate '" + f + "' is not a segment covariate");
    }
  }

  const csv::Table seg = csv::read_table(segments_path);
  const auto id_col = seg.column("segment_id");
  if (id_col < 0) throw DataError(segments_path.string() + ": missing column 'segment_id'");
  std::vector<std::ptrdiff_t> x_cols;
  for (const auto& name : schema.segment_covariates) {
    const auto c = seg.column(name);
    if (c < 0) throw DataError(segments_path.string() + ": missing column '" + name + "'");
    x_cols.push_back(c);
  }

  const auto S = static_cast<Eigen::Index>(seg.rows.size());
  const auto P = static_cast<Eigen::Index>(x_cols.size());
  if (S == 0) throw DataError(segments_path.string() + ": no segment rows");
  std::vector<std::string> ids;
  std::unordered_map<std::string, Eigen::Index> id_index;
  Eigen::MatrixXd x(S, P);
  for (Eigen::Index s = 0; s < S; ++s) {
    const auto& row = seg.rows[static_cast<std::size_t>(s)];
    const auto line = seg.lines[static_cast<std::size_t>(s)];
    std::string id(csv::trim(row[static_cast<std::size_t>(id_col)]));
    if (id.empty()) throw DataError(row_context(segments_path, line) + ": empty segment_id");
    if (!id_index.emplace(id, s).second) {
      throw DataError(row_context(segments_path, line) + ": duplicate segment_id '" + id + "'");
    }
    ids.push_back(id);
    for (Eigen::Index j = 0; j < P; ++j) {
      double v = 0.0;
      const auto& field = row[static_cast<std::size_t>(x_cols[static_cast<std::size_t>(j)])];
      if (!csv::parse_number(field, v) || !std::isfinite(v)) {
        throw DataError(row_context(segments_path, line) + ": non-numeric value '" + field +
                        "' in column '" + schema.segment_covariates[static_cast<std::size_t>(j)] +
                        "'");
      }
      x(s, j) = v;
    }
  }
  for (const auto& name : schema.flag_covariates) {
    const auto j = *find_name(schema.segment_covariates, name);
    for (Eigen::Index s = 0; s < S; ++s) {
      if (x(s, j) != 0.0 && x(s, j) != 1.0) {
        throw DataError(row_context(segments_path, seg.lines[static_cast<std::size_t>(s)]) +
                        ": flag '" + name + "' must be 0 or 1");
      }
    }
  }
  for (const auto& name : schema.nonnegative_covariates) {
    const auto j = find_name(schema.segment_covariates, name);
    if (!j) throw ConfigError("schema: nonnegative covariate '" + name + "' is not declared");
    for (Eigen::Index s = 0; s < S; ++s) {
      if (x(s, *j) < 0.0) {
        throw DataError(row_context(segments_path, seg.lines[static_cast<std::size_t>(s)]) +
                        ": '" + name + "' must be nonnegative");
      }
    }
  }

  const csv::Table panel = csv::read_table(panel_path);
  const auto p_id = panel.column("segment_id");
  const auto p_month = panel.column("month");
  const auto p_count = panel.column("avc_count");
  for (auto [col, name] : {std::pair{p_id, "segment_id"}, std::pair{p_month, "month"},
                           std::pair{p_count, "avc_count"}}) {
    if (col < 0) throw DataError(panel_path.string() + ": missing column '" + name + "'");
  }
  std::vector<std::ptrdiff_t> y_cols;
  for (const auto& name : schema.time_covariates) {
    const auto c = panel.column(name);
    if (c < 0) throw DataError(panel_path.string() + ": missing column '" + name + "'");
    y_cols.push_back(c);
  }
  const int T = schema.months;
  const auto Q = static_cast<Eigen::Index>(y_cols.size());
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(S * T, Q);
  Eigen::VectorXi k = Eigen::VectorXi::Zero(S * T);
  std::vector<std::size_t> seen(static_cast<std::size_t>(S * T), 0);

  for (std::size_t r = 0; r < panel.rows.size(); ++r) {
    const auto& row = panel.rows[r];
    const auto ctx = row_context(panel_path, panel.lines[r]);
    const std::string id(csv::trim(row[static_cast<std::size_t>(p_id)]));
    auto it = id_index.find(id);
    if (it == id_index.end()) throw DataError(ctx + ": unknown segment_id '" + id + "'");
    long month = 0;
    if (!csv::parse_number(row[static_cast<std::size_t>(p_month)], month)) {
      throw DataError(ctx + ": non-integer month '" + row[static_cast<std::size_t>(p_month)] + "'");
    }
    if (month < 1 || month > T) {
      throw DataError(ctx + ": month " + std::to_string(month) + " outside 1.." +
                      std::to_string(T));
    }
    long count = 0;
    if (!csv::parse_number(row[static_cast<std::size_t>(p_count)], count)) {
      throw DataError(ctx + ": non-integer avc_count '" +
                      row[static_cast<std::size_t>(p_count)] + "'");
    }
    if (count < 0) throw DataError(ctx + ": avc_count must be nonnegative");
    const Eigen::Index c = (month - 1) * S + it->second;
    if (seen[static_cast<std::size_t>(c)] != 0) {
      throw DataError(ctx + ": duplicate (segment, month) key (" + id + ", " +
                      std::to_string(month) + "), first seen at row " +
                      std::to_string(seen[static_cast<std::size_t>(c)]));
    }
    seen[static_cast<std::size_t>(c)] = panel.lines[r];
    k[c] = static_cast<int>(count);
    for (Eigen::Index j = 0; j < Q; ++j) {
      const auto& field = row[static_cast<std::size_t>(y_cols[static_cast<std::size_t>(j)])];
      double v = 0.0;
      if (csv::trim(field).empty()) {
        throw DataError(ctx + ": missing value for time-varying covariate '" +
                        schema.time_covariates[static_cast<std::size_t>(j)] + "'");
      }
      if (!csv::parse_number(field, v) || !std::isfinite(v)) {
        throw DataError(ctx + ": non-numeric value '" + field + "' in column '" +
                        schema.time_covariates[static_cast<std::size_t>(j)] + "'");
      }
      y(c, j) = v;
    }
  }
  for (Eigen::Index c = 0; c < S * T; ++c) {
    if (seen[static_cast<std::size_t>(c)] == 0) {
      throw DataError(panel_path.string() + ": incomplete panel, no row for (" +
                      ids[static_cast<std::size_t>(c % S)] + ", month " +
                      std::to_string(c / S + 1) + ")");
    }
  }
  return Dataset(std::move(ids), schema.segment_covariates, std::move(x),
                 schema.time_covariates, std::move(y), std::move(k), T);
}

void write_segments_csv(const Dataset& data, const std::filesystem::path& path) {
  auto out = csv::open_for_write(path);
  out << "segment_id";
  for (const auto& n : data.segment_covariate_names()) out << ',' << csv::quote_if_needed(n);
  out << '\n';
  for (Eigen::Index s = 0; s < data.segments(); ++s) {
    out << csv::quote_if_needed(data.segment_ids()[static_cast<std::size_t>(s)]);
    for (Eigen::Index j = 0; j < data.segment_dim(); ++j) {
      out << ',' << csv::format_double(data.x()(s, j));
    }
    out << '\n';
  }
}

void write_panel_csv(const Dataset& data, const std::filesystem::path& path) {
  auto out = csv::open_for_write(path);
  out << "segment_id,month,avc_count";
  for (const auto& n : data.time_covariate_names()) out << ',' << csv::quote_if_needed(n);
  out << '\n';
  for (Eigen::Index s = 0; s < data.segments(); ++s) {
    for (int t = 0; t < data.months(); ++t) {
      const auto c = data.cell(s, t);
      out << csv::quote_if_needed(data.segment_ids()[static_cast<std::size_t>(s)]) << ','
          << t + 1 << ',' << data.counts()[c];
      for (Eigen::Index j = 0; j < data.time_dim(); ++j) {
        out << ',' << csv::format_double(data.y()(c, j));
      }
      out << '\n';
    }
  }
}

std::vector<CovariateSummary> summarize_covariates(const Dataset& data) {
  std::vector<CovariateSummary> rows;
  auto add = [&rows](const std::string& name, const auto& col) {
    rows.push_back({name, col.minCoeff(), col.mean(), col.maxCoeff()});
  };
  if (data.segments() == 0) return rows;
  for (Eigen::Index j = 0; j < data.segment_dim(); ++j) {
    add(data.segment_covariate_names()[static_cast<std::size_t>(j)], data.x().col(j));
  }
  for (Eigen::Index j = 0; j < data.time_dim(); ++j) {
    add(data.time_covariate_names()[static_cast<std::size_t>(j)], data.y().col(j));
  }
  return rows;
}

CovariateSchema infer_schema(const std::filesystem::path& segments_path,
                             const std::filesystem::path& panel_path, int months) {
  auto header = [](const std::filesystem::path& path) {
    auto in = std::ifstream(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> names;
    for (const auto& f : csv::split_line(line)) names.emplace_back(csv::trim(f));
    return names;
  };
  CovariateSchema schema;
  schema.months = months;
  for (const auto& n : header(segments_path)) {
    if (n != "segment_id") schema.segment_covariates.push_back(n);
  }
  for (const auto& n : header(panel_path)) {
    if (n != "segment_id" && n != "month" && n != "avc_count") schema.time_covariates.push_back(n);
  }
  return schema;
}

CovariateSchema schema_of(const Dataset& data) {
  CovariateSchema schema;
  schema.segment_covariates = data.segment_covariate_names();
  schema.time_covariates = data.time_covariate_names();
  schema.months = data.months();
  return schema;
}

}  // namespace avc
