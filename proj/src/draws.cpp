#include "avc/draws.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "avc/errors.hpp"
#include "csv.hpp"

namespace avc {

std::optional<std::size_t> DrawStore::parameter_index(const std::string& name) const {
  auto it = std::find(parameters.begin(), parameters.end(), name);
  if (it == parameters.end()) return std::nullopt;
  return static_cast<std::size_t>(it - parameters.begin());
}

std::vector<int> DrawStore::chain_ids() const {
  std::set<int> ids;
  for (const auto& r : records) ids.insert(r.chain);
  return {ids.begin(), ids.end()};
}

std::vector<double> DrawStore::series(std::size_t parameter, int chain) const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.chain == chain) out.push_back(r.values.at(parameter));
  }
  return out;
}

std::vector<double> DrawStore::pooled(std::size_t parameter) const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.values.at(parameter));
  return out;
}

const DrawRecord* DrawStore::find(int chain, long iteration) const {
  for (const auto& r : records) {
    if (r.chain == chain && r.iteration == iteration) return &r;
  }
  return nullptr;
}

void DrawStore::merge(DrawStore&& other) {
  if (parameters.empty()) {
    parameters = std::move(other.parameters);
    cell_thin = other.cell_thin;
  } else if (!other.parameters.empty() && other.parameters != parameters) {
    throw DataError("draw stores disagree on parameter names");
  }
  for (auto& r : other.records) records.push_back(std::move(r));
  for (auto& c : other.cells) cells.push_back(std::move(c));
  for (auto& s : other.chain_stats) chain_stats.push_back(s);
}

std::vector<std::string> parameter_names(const Dataset& data) {
  std::vector<std::string> names;
  for (const auto& x : data.segment_covariate_names()) names.push_back("beta[" + x + "]");
  for (int t = 1; t <= data.months(); ++t) names.push_back("alpha0[" + std::to_string(t) + "]");
  for (int t = 1; t <= data.months(); ++t) {
    for (const auto& y : data.time_covariate_names()) {
      names.push_back("gamma[" + std::to_string(t) + "," + y + "]");
    }
  }
  for (int t = 1; t <= data.months(); ++t) names.push_back("q[" + std::to_string(t) + "]");
  for (int t = 1; t <= data.months(); ++t) {
    names.push_back("expected_total[" + std::to_string(t) + "]");
  }
  names.emplace_back("nonzero_crossings");
  names.emplace_back("indicators_on");
  return names;
}

void write_draws_csv(const DrawStore& draws, const std::filesystem::path& path) {
  auto out = csv::open_for_write(path);
  out << "chain,iteration,parameter,value\n";
  for (const auto& r : draws.records) {
    for (std::size_t i = 0; i < draws.parameters.size(); ++i) {
      out << r.chain << ',' << r.iteration << ',' << csv::quote_if_needed(draws.parameters[i])
          << ',' << csv::format_double(r.values[i]) << '\n';
    }
  }
}

DrawStore read_draws_csv(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const auto c_chain = table.column("chain");
  const auto c_iter = table.column("iteration");
  const auto c_param = table.column("parameter");
  const auto c_value = table.column("value");
  if (c_chain < 0 || c_iter < 0 || c_param < 0 || c_value < 0) {
    throw DataError(path.string() + ": expected columns chain,iteration,parameter,value");
  }
  DrawStore draws;
  std::map<std::string, std::size_t> index;
  DrawRecord* current = nullptr;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto ctx = path.filename().string() + " row " + std::to_string(table.lines[r]);
    int chain = 0;
    long iteration = 0;
    double value = 0.0;
    if (!csv::parse_number(row[static_cast<std::size_t>(c_chain)], chain) ||
        !csv::parse_number(row[static_cast<std::size_t>(c_iter)], iteration) ||
        !csv::parse_number(row[static_cast<std::size_t>(c_value)], value)) {
      throw DataError(ctx + ": malformed draw row");
    }
    const std::string name(csv::trim(row[static_cast<std::size_t>(c_param)]));
    if (current == nullptr || current->chain != chain || current->iteration != iteration) {
      if (current != nullptr && current->values.size() != draws.parameters.size()) {
        throw DataError(ctx + ": previous draw is missing parameters");
      }
      if (current != nullptr && current->chain == chain && iteration <= current->iteration) {
        throw DataError(ctx + ": iterations must increase within a chain");
      }
      draws.records.push_back({chain, iteration, {}});
      current = &draws.records.back();
    }
    if (draws.records.size() == 1) {
      index.emplace(name, draws.parameters.size());
      draws.parameters.push_back(name);
    } else if (current->values.size() >= draws.parameters.size() ||
               draws.parameters[current->values.size()] != name) {
      throw DataError(ctx + ": unexpected parameter '" + name + "'");
    }
    current->values.push_back(value);
  }
  if (current != nullptr && current->values.size() != draws.parameters.size()) {
    throw DataError(path.string() + ": last draw is missing parameters");
  }
  return draws;
}

void write_cells_csv(const DrawStore& draws, const Dataset& data,
                     const std::filesystem::path& path) {
  auto out = csv::open_for_write(path);
  out << "chain,iteration,segment_id,month,n,p\n";
  for (const auto& cd : draws.cells) {
    for (Eigen::Index s = 0; s < data.segments(); ++s) {
      const auto& id = csv::quote_if_needed(data.segment_ids()[static_cast<std::size_t>(s)]);
      for (int t = 0; t < data.months(); ++t) {
        const auto c = data.cell(s, t);
        out << cd.chain << ',' << cd.iteration << ',' << id << ',' << t + 1 << ','
            << cd.crossings[c] << ',' << csv::format_double(cd.probability[c]) << '\n';
      }
    }
  }
}

void read_cells_csv(DrawStore& draws, const Dataset& data, const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const auto c_chain = table.column("chain");
  const auto c_iter = table.column("iteration");
  const auto c_seg = table.column("segment_id");
  const auto c_month = table.column("month");
  const auto c_n = table.column("n");
  const auto c_p = table.column("p");
  if (c_chain < 0 || c_iter < 0 || c_seg < 0 || c_month < 0 || c_n < 0 || c_p < 0) {
    throw DataError(path.string() + ": expected columns chain,iteration,segment_id,month,n,p");
  }
  draws.cells.clear();
  std::vector<char> filled;
  long filled_count = 0;
  auto finish = [&](const std::string& ctx) {
    if (!draws.cells.empty() && filled_count != data.cells()) {
      throw DataError(ctx + ": cell draw is incomplete");
    }
  };
  CellDraw* current = nullptr;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto ctx = path.filename().string() + " row " + std::to_string(table.lines[r]);
    int chain = 0;
    long iteration = 0;
    int month = 0;
    int n = 0;
    double p = 0.0;
    if (!csv::parse_number(row[static_cast<std::size_t>(c_chain)], chain) ||
        !csv::parse_number(row[static_cast<std::size_t>(c_iter)], iteration) ||
        !csv::parse_number(row[static_cast<std::size_t>(c_month)], month) ||
        !csv::parse_number(row[static_cast<std::size_t>(c_n)], n) ||
        !csv::parse_number(row[static_cast<std::size_t>(c_p)], p)) {
      throw DataError(ctx + ": malformed cell row");
    }
    if (current == nullptr || current->chain != chain || current->iteration != iteration) {
      finish(ctx);
      draws.cells.push_back({chain, iteration, Eigen::VectorXi::Zero(data.cells()),
                             Eigen::VectorXd::Zero(data.cells())});
      current = &draws.cells.back();
      filled.assign(static_cast<std::size_t>(data.cells()), 0);
      filled_count = 0;
    }
    const auto s = data.segment_index(std::string(csv::trim(row[static_cast<std::size_t>(c_seg)])));
    if (!s) throw DataError(ctx + ": unknown segment_id");
    if (month < 1 || month > data.months()) throw DataError(ctx + ": month out of range");
    const auto c = data.cell(*s, month - 1);
    if (filled[static_cast<std::size_t>(c)] == 0) ++filled_count;
    filled[static_cast<std::size_t>(c)] = 1;
    current->crossings[c] = n;
    current->probability[c] = p;
  }
  finish(path.string());
  draws.cell_thin = 0;
  for (std::size_t i = 1; i < draws.cells.size(); ++i) {
    if (draws.cells[i].chain == draws.cells[i - 1].chain) {
      draws.cell_thin = draws.cells[i].iteration - draws.cells[i - 1].iteration;
      break;
    }
  }
}

void write_chain_stats_csv(const std::vector<ChainStats>& stats, const std::filesystem::path& path) {
  auto out = csv::open_for_write(path);
  out << "chain,crossing_accepted,crossing_proposed,cluster_accepted,cluster_proposed\n";
  for (const auto& s : stats) {
    out << s.chain << ',' << s.crossing_accepted << ',' << s.crossing_proposed << ','
        << s.cluster_accepted << ',' << s.cluster_proposed << '\n';
  }
}

std::vector<ChainStats> read_chain_stats_csv(const std::filesystem::path& path) {
  const auto table = csv::read_table(path);
  const char* names[] = {"chain", "crossing_accepted", "crossing_proposed", "cluster_accepted",
                         "cluster_proposed"};
  std::vector<std::ptrdiff_t> cols;
  for (const char* n : names) {
    const auto c = table.column(n);
    if (c < 0) throw DataError(path.string() + ": missing column '" + n + "'");
    cols.push_back(c);
  }
  std::vector<ChainStats> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    ChainStats s;
    long* fields[] = {&s.crossing_accepted, &s.crossing_proposed, &s.cluster_accepted,
                      &s.cluster_proposed};
    bool ok = csv::parse_number(row[static_cast<std::size_t>(cols[0])], s.chain);
    for (int i = 0; i < 4; ++i) {
      ok = ok && csv::parse_number(row[static_cast<std::size_t>(cols[i + 1])], *fields[i]);
    }
    if (!ok) {
      throw DataError(path.filename().string() + " row " + std::to_string(table.lines[r]) +
                      ": malformed chain statistics");
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace avc
