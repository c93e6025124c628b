#include "aggshock/panel.hpp"

#include "aggshock/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace aggshock {

namespace {

bool all_finite(const Matrix& M) { return M.allFinite(); }

std::optional<long long> parse_integer(const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const int month = std::stoi(s.substr(5, 2));
  const int day = std::stoi(s.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

// Sorted distinct labels: numerically if every label is an integer,
// otherwise lexicographically (which is chronological for ISO dates).
std::vector<std::string> sorted_labels(std::vector<std::string> labels, bool require_time_format) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  const bool numeric = std::all_of(labels.begin(), labels.end(),
                                   [](const std::string& s) { return parse_integer(s).has_value(); });
  if (numeric) {
    std::sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
      return *parse_integer(a) < *parse_integer(b);
    });
    for (std::size_t i = 1; i < labels.size(); ++i) {
      if (*parse_integer(labels[i]) == *parse_integer(labels[i - 1])) {
        fail(ErrorCode::MalformedInput, "labels '" + labels[i - 1] + "' and '" + labels[i] +
                                            "' denote the same integer");
      }
    }
    return labels;
  }
  if (require_time_format && !std::all_of(labels.begin(), labels.end(), is_iso_date)) {
    fail(ErrorCode::MalformedInput, "time labels must all be integers or ISO dates (YYYY-MM-DD)");
  }
  return labels;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      current.push_back(c);
    } else if (c == ',' && !quoted) {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

double parse_value(const std::string& field, const std::string& column, std::size_t line_no) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  if (!field.empty() && field.front() == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (field.empty() || ec != std::errc() || ptr != end) {
    std::string lower = field;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower.empty() || lower == "na" || lower == "nan" || lower == "inf" || lower == "-inf" ||
        lower == "infinity" || lower == "-infinity") {
      fail(ErrorCode::NonFiniteValue,
           "column '" + column + "' line " + std::to_string(line_no) + ": '" + field + "'");
    }
    fail(ErrorCode::MalformedInput,
         "column '" + column + "' line " + std::to_string(line_no) + ": cannot parse '" + field + "'");
  }
  if (!std::isfinite(v)) {
    fail(ErrorCode::NonFiniteValue, "column '" + column + "' line " + std::to_string(line_no));
  }
  return v;
}

}  // namespace

void BalancedPanel::validate() const {
  if (Y.rows() != W.rows() || Y.cols() != W.cols()) {
    fail(ErrorCode::InvalidArgument, "Y and W must have identical dimensions");
  }
  if (n() < 2 || T() < 2) fail(ErrorCode::InvalidArgument, "panel needs at least 2 units and 2 periods");
  if (!all_finite(Y) || !all_finite(W)) fail(ErrorCode::NonFiniteValue, "panel contains non-finite entries");
  if (!unit_ids.empty() && static_cast<Index>(unit_ids.size()) != n()) {
    fail(ErrorCode::InvalidArgument, "unit label count does not match rows");
  }
  if (!time_ids.empty() && static_cast<Index>(time_ids.size()) != T()) {
    fail(ErrorCode::InvalidArgument, "time label count does not match columns");
  }
}

void BalancedPanel::validate_for_estimation() const {
  validate();
  if (n() < 3 || T() < 3) fail(ErrorCode::InvalidArgument, "estimation requires n >= 3 and T >= 3");
}

BalancedPanel BalancedPanel::periods(Index begin, Index count) const {
  BalancedPanel out;
  out.Y = Y.middleCols(begin, count);
  out.W = W.middleCols(begin, count);
  out.unit_ids = unit_ids;
  if (!time_ids.empty()) {
    out.time_ids.assign(time_ids.begin() + begin, time_ids.begin() + begin + count);
  }
  return out;
}

void AggregateData::validate() const {
  if (Psi.rows() != Z.size()) fail(ErrorCode::InvalidArgument, "Psi must have one row per period");
  if (Psi.cols() < 1) fail(ErrorCode::InvalidArgument, "Psi needs at least the constant column");
  if (!Z.allFinite() || !Psi.allFinite()) fail(ErrorCode::NonFiniteValue, "aggregate data not finite");
  if ((Psi.col(0).array() != 1.0).any()) {
    fail(ErrorCode::InvalidArgument, "first column of Psi must be identically 1");
  }
}

void ExposureVector::validate() const {
  if (D.size() < 2) fail(ErrorCode::InvalidArgument, "exposure vector too short");
  if (!D.allFinite()) fail(ErrorCode::NonFiniteValue, "exposures not finite");
  if (!(population_variance(D) > 0.0)) fail(ErrorCode::InvalidArgument, "exposure vector is constant");
}

SampleSplit make_split(Index T, Index T0, Index p) {
  const Index T1 = T - T0;
  if (T0 < p + 2 || T1 < p + 2) {
    fail(ErrorCode::InvalidArgument, "sample split T0=" + std::to_string(T0) + ", T1=" +
                                         std::to_string(T1) + " needs both >= p + 2 = " +
                                         std::to_string(p + 2));
  }
  return SampleSplit{T0, T1};
}

PanelData assemble_panel(const std::vector<PanelRecord>& records) {
  if (records.empty()) fail(ErrorCode::MalformedInput, "no records");
  const std::size_t psi_extra = records.front().psi.size();
  const bool has_d = records.front().d.has_value();
  std::vector<std::string> units, times;
  units.reserve(records.size());
  times.reserve(records.size());
  for (const auto& r : records) {
    if (r.psi.size() != psi_extra) fail(ErrorCode::MalformedInput, "inconsistent psi column count");
    if (r.d.has_value() != has_d) fail(ErrorCode::MalformedInput, "d present on some rows only");
    units.push_back(r.unit);
    times.push_back(r.time);
  }
  units = sorted_labels(std::move(units), false);
  times = sorted_labels(std::move(times), true);

  std::map<std::string, Index> unit_pos, time_pos;
  for (std::size_t i = 0; i < units.size(); ++i) unit_pos[units[i]] = static_cast<Index>(i);
  for (std::size_t t = 0; t < times.size(); ++t) time_pos[times[t]] = static_cast<Index>(t);

  const Index n = static_cast<Index>(units.size());
  const Index T = static_cast<Index>(times.size());
  const Index p = static_cast<Index>(psi_extra) + 1;

  PanelData out;
  out.panel.Y = Matrix::Zero(n, T);
  out.panel.W = Matrix::Zero(n, T);
  out.panel.unit_ids = units;
  out.panel.time_ids = times;
  out.aggregates.Z = Vector::Zero(T);
  out.aggregates.Psi = Matrix::Ones(T, p);
  Vector D = Vector::Zero(n);

  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> filled =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, T, false);
  std::vector<bool> time_seen(static_cast<std::size_t>(T), false);
  std::vector<bool> unit_seen(static_cast<std::size_t>(n), false);

  for (const auto& r : records) {
    const Index i = unit_pos.at(r.unit);
    const Index t = time_pos.at(r.time);
    if (filled(i, t)) {
      fail(ErrorCode::DuplicateCell, "unit " + r.unit + ", time " + r.time);
    }
    filled(i, t) = true;
    if (!std::isfinite(r.y) || !std::isfinite(r.w) || !std::isfinite(r.z) ||
        (r.d && !std::isfinite(*r.d))) {
      fail(ErrorCode::NonFiniteValue, "unit " + r.unit + ", time " + r.time);
    }
    out.panel.Y(i, t) = r.y;
    out.panel.W(i, t) = r.w;
    const auto ts = static_cast<std::size_t>(t);
    if (!time_seen[ts]) {
      time_seen[ts] = true;
      out.aggregates.Z(t) = r.z;
      for (std::size_t k = 0; k < psi_extra; ++k) {
        if (!std::isfinite(r.psi[k])) fail(ErrorCode::NonFiniteValue, "psi at time " + r.time);
        out.aggregates.Psi(t, static_cast<Index>(k) + 1) = r.psi[k];
      }
    } else {
      if (out.aggregates.Z(t) != r.z) {
        fail(ErrorCode::InconsistentAggregate, "z differs across rows of time " + r.time);
      }
      for (std::size_t k = 0; k < psi_extra; ++k) {
        if (out.aggregates.Psi(t, static_cast<Index>(k) + 1) != r.psi[k]) {
          fail(ErrorCode::InconsistentAggregate, "psi differs across rows of time " + r.time);
        }
      }
    }
    if (has_d) {
      const auto is = static_cast<std::size_t>(i);
      if (!unit_seen[is]) {
        unit_seen[is] = true;
        D(i) = *r.d;
      } else if (D(i) != *r.d) {
        fail(ErrorCode::InconsistentAggregate, "d differs across rows of unit " + r.unit);
      }
    }
  }
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t < T; ++t) {
      if (!filled(i, t)) {
        fail(ErrorCode::UnbalancedPanel, "missing cell (unit " + units[static_cast<std::size_t>(i)] +
                                             ", time " + times[static_cast<std::size_t>(t)] + ")");
      }
    }
  }
  if (has_d) out.exposures = ExposureVector{D};
  out.panel.validate();
  return out;
}

std::vector<PanelRecord> read_panel_records(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) fail(ErrorCode::MalformedInput, "empty input");

  int col_unit = -1, col_time = -1, col_y = -1, col_w = -1, col_z = -1, col_d = -1, col_psi1 = -1;
  std::map<int, int> psi_cols;  // psi index -> column
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& h = header[static_cast<std::size_t>(c)];
    if (h == "unit") col_unit = c;
    else if (h == "time") col_time = c;
    else if (h == "y") col_y = c;
    else if (h == "w") col_w = c;
    else if (h == "z") col_z = c;
    else if (h == "d") col_d = c;
    else if (h.rfind("psi_", 0) == 0) {
      auto k = parse_integer(h.substr(4));
      if (!k || *k < 1) fail(ErrorCode::MalformedInput, "bad psi column name '" + h + "'");
      if (*k == 1) col_psi1 = c;
      else if (!psi_cols.emplace(static_cast<int>(*k), c).second) {
        fail(ErrorCode::MalformedInput, "duplicate column '" + h + "'");
      }
    } else {
      fail(ErrorCode::MalformedInput, "unknown column '" + h + "'");
    }
  }
  if (col_unit < 0 || col_time < 0 || col_y < 0 || col_w < 0 || col_z < 0) {
    fail(ErrorCode::MalformedInput, "header must contain unit,time,y,w,z");
  }
  int expected = 2;
  for (const auto& [k, c] : psi_cols) {
    if (k != expected++) fail(ErrorCode::MalformedInput, "psi columns must be psi_2..psi_p without gaps");
  }

  std::vector<PanelRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      fail(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + " has " +
                                          std::to_string(f.size()) + " fields, expected " +
                                          std::to_string(header.size()));
    }
    auto field = [&](int c) -> const std::string& { return f[static_cast<std::size_t>(c)]; };
    PanelRecord r;
    r.unit = field(col_unit);
    r.time = field(col_time);
    if (r.unit.empty() || r.time.empty()) {
      fail(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + ": empty unit or time");
    }
    r.y = parse_value(field(col_y), "y", line_no);
    r.w = parse_value(field(col_w), "w", line_no);
    r.z = parse_value(field(col_z), "z", line_no);
    if (col_d >= 0) r.d = parse_value(field(col_d), "d", line_no);
    if (col_psi1 >= 0 && parse_value(field(col_psi1), "psi_1", line_no) != 1.0) {
      fail(ErrorCode::MalformedInput, "psi_1 must be identically 1");
    }
    for (const auto& [k, c] : psi_cols) r.psi.push_back(parse_value(field(c), header[static_cast<std::size_t>(c)], line_no));
    records.push_back(std::move(r));
  }
  return records;
}

PanelData load_panel(std::istream& in) { return assemble_panel(read_panel_records(in)); }

PanelData load_panel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MalformedInput, "cannot open '" + path + "'");
  return load_panel(in);
}

KeyedTable read_keyed_table(std::istream& in, const std::string& key_column) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.size() < 2 || header.front() != key_column) {
    fail(ErrorCode::MalformedInput, "table header must be '" + key_column + ",<columns>'");
  }
  KeyedTable t;
  t.columns.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      fail(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                                          " fields, expected " + std::to_string(header.size()));
    }
    t.keys.push_back(f[0]);
    std::vector<double> row;
    for (std::size_t c = 1; c < f.size(); ++c) row.push_back(parse_value(f[c], header[c], line_no));
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < t.columns.size(); ++c) t.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return t;
}

KeyedTable read_keyed_table_file(const std::string& path, const std::string& key_column) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MalformedInput, "cannot open '" + path + "'");
  return read_keyed_table(in, key_column);
}

Matrix KeyedTable::aligned(const std::vector<std::string>& labels) const {
  std::map<std::string, Index> row_of;
  for (std::size_t r = 0; r < keys.size(); ++r) {
    if (!row_of.emplace(keys[r], static_cast<Index>(r)).second) fail(ErrorCode::DuplicateCell, "duplicate key '" + keys[r] + "'");
  }
  if (row_of.size() != labels.size()) {
    fail(ErrorCode::InconsistentAggregate, "table has " + std::to_string(row_of.size()) + " rows, expected " +
                                               std::to_string(labels.size()));
  }
  Matrix out(static_cast<Index>(labels.size()), values.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = row_of.find(labels[i]);
    if (it == row_of.end()) fail(ErrorCode::InconsistentAggregate, "no row for '" + labels[i] + "'");
    out.row(static_cast<Index>(i)) = values.row(it->second);
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void write_panel(std::ostream& out, const PanelData& data) {
  const auto& panel = data.panel;
  const auto& agg = data.aggregates;
  out << "unit,time,y,w,z";
  if (data.exposures) out << ",d";
  for (Index k = 1; k < agg.p(); ++k) out << ",psi_" << (k + 1);
  out << '\n';
  for (Index i = 0; i < panel.n(); ++i) {
    for (Index t = 0; t < panel.T(); ++t) {
      out << panel.unit_ids[static_cast<std::size_t>(i)] << ',' << panel.time_ids[static_cast<std::size_t>(t)]
          << ',' << format_double(panel.Y(i, t)) << ',' << format_double(panel.W(i, t)) << ','
          << format_double(agg.Z(t));
      if (data.exposures) out << ',' << format_double(data.exposures->D(i));
      for (Index k = 1; k < agg.p(); ++k) out << ',' << format_double(agg.Psi(t, k));
      out << '\n';
    }
  }
}

Matrix demean_two_way(const Matrix& M) {
  if (!M.allFinite()) fail(ErrorCode::NonFiniteValue, "demean_two_way input not finite");
  const Vector row_means = M.rowwise().mean();
  const Eigen::RowVectorXd col_means = M.colwise().mean();
  const double grand = M.mean();
  Matrix out = M;
  out.colwise() -= row_means;
  out.rowwise() -= col_means;
  out.array() += grand;
  return out;
}

ScaleFactors scaling_factors(const BalancedPanel& panel, Index T0) {
  if (T0 < 2 || T0 > panel.T()) fail(ErrorCode::InvalidArgument, "T0 out of range for scaling factors");
  const Matrix Ypre = panel.Y.leftCols(T0);
  const Matrix Wpre = panel.W.leftCols(T0);
  const double denom = static_cast<double>(panel.n() * T0);
  ScaleFactors s;
  s.sigma2_y = demean_two_way(Ypre).squaredNorm() / denom;
  s.sigma2_w = demean_two_way(Wpre).squaredNorm() / denom;
  // Exactly additive data leaves only rounding residue.
  const double tiny = 1e-24;
  const double ref_y = Ypre.squaredNorm() / denom;
  const double ref_w = Wpre.squaredNorm() / denom;
  if (!(s.sigma2_y > tiny * ref_y) || !(s.sigma2_w > tiny * ref_w)) {
    fail(ErrorCode::DegenerateScale, "pre-period data are exactly two-way additive");
  }
  return s;
}

ScaleFactors scaling_factors(const BalancedPanel& panel, const SampleSplit& split) {
  return scaling_factors(panel, split.T0);
}

Index default_t0(Index T) {
  if (T < 9) fail(ErrorCode::InvalidArgument, "default T0 needs T >= 9, got " + std::to_string(T));
  return T / 3;
}

double population_variance(const Vector& v) {
  if (v.size() == 0) return 0.0;
  return (v.array() - v.mean()).square().mean();
}

}  // namespace aggshock
