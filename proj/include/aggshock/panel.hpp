#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace aggshock {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Outcome Y and treatment W for n units (rows) over T periods (columns).
struct BalancedPanel {
  Matrix Y;
  Matrix W;
  std::vector<std::string> unit_ids;
  std::vector<std::string> time_ids;

  Index n() const { return Y.rows(); }
  Index T() const { return Y.cols(); }

  // Structural checks: matching shapes, finite entries, label counts.
  void validate() const;
  // Estimators additionally need n >= 3 and T >= 3.
  void validate_for_estimation() const;

  // Sub-panel with periods [begin, begin + count).
  BalancedPanel periods(Index begin, Index count) const;
};

// Aggregate instrument series Z and deterministic regressors Psi (T x p,
// first column identically one).
struct AggregateData {
  Vector Z;
  Matrix Psi;

  Index T() const { return Z.size(); }
  Index p() const { return Psi.cols(); }
  void validate() const;
};

struct ExposureVector {
  Vector D;

  Index n() const { return D.size(); }
  // Throws InvalidArgument when D is constant.
  void validate() const;
};

struct SampleSplit {
  Index T0 = 0;
  Index T1 = 0;

  Index T() const { return T0 + T1; }
};

// Requires T0 >= p + 2 and T1 >= p + 2.
SampleSplit make_split(Index T, Index T0, Index p);

// One row of the long-format input table.
struct PanelRecord {
  std::string unit;
  std::string time;
  double y = 0.0;
  double w = 0.0;
  double z = 0.0;
  std::optional<double> d;
  std::vector<double> psi;  // psi_2 .. psi_p
};

struct PanelData {
  BalancedPanel panel;
  AggregateData aggregates;
  std::optional<ExposureVector> exposures;
};

// Assembles time-sorted, unit-sorted matrices. Integer labels sort
// numerically, ISO dates (YYYY-MM-DD) chronologically.
PanelData assemble_panel(const std::vector<PanelRecord>& records);

// CSV with header `unit,time,y,w,z[,d][,psi_2..psi_p]`.
std::vector<PanelRecord> read_panel_records(std::istream& in);
PanelData load_panel(std::istream& in);
PanelData load_panel_file(const std::string& path);

// Numeric side table keyed by its first column (e.g. `time,x1,x2` or `unit,x1`).
struct KeyedTable {
  std::vector<std::string> columns;  // value columns
  std::vector<std::string> keys;
  Matrix values;  // keys.size() x columns.size()

  // Rows reordered to match labels; every label must appear exactly once.
  Matrix aligned(const std::vector<std::string>& labels) const;
};

KeyedTable read_keyed_table(std::istream& in, const std::string& key_column);
KeyedTable read_keyed_table_file(const std::string& path, const std::string& key_column);

// Writes the same schema back; doubles use the shortest round-trip form.
void write_panel(std::ostream& out, const PanelData& data);

// M - row means - column means + grand mean.
Matrix demean_two_way(const Matrix& M);

struct ScaleFactors {
  double sigma2_y = 0.0;
  double sigma2_w = 0.0;
};

// Mean squared two-way residual over the first T0 periods.
ScaleFactors scaling_factors(const BalancedPanel& panel, const SampleSplit& split);
ScaleFactors scaling_factors(const BalancedPanel& panel, Index T0);

// floor(T / 3); requires T >= 9.
Index default_t0(Index T);

// 1/n convention.
double population_variance(const Vector& v);

std::string format_double(double x);

}  // namespace aggshock
