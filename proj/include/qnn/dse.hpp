#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qnn/energy.hpp"
#include "qnn/topology.hpp"

namespace qnn {

/// Cartesian sweep axes. With `independent_blocks` every block takes its own
/// width/depth from the axes (|W|^3 |D|^3 |Q| points); otherwise all three
/// blocks share one width and one depth (|W| |D| |Q| points).
struct SweepGrid {
  std::vector<std::size_t> widths{32};
  std::vector<std::size_t> depths{1};
  std::vector<int> bits{1, 2, 4, 8, 16};
  int input_bits = 8;
  DatasetSpec dataset = DatasetSpec::cifar10();
  std::vector<HardwareConfig> hardware{HardwareConfig::preset("4Mb")};
  bool independent_blocks = true;
  std::size_t max_points = 10000;

  std::size_t size() const;
  /// Throws ConfigError for empty axes or a grid larger than max_points.
  void validate() const;
};

void from_json(const nlohmann::json& j, SweepGrid& grid);
void to_json(nlohmann::json& j, const SweepGrid& grid);

enum class ErrorSource { Absent, TrainedHere, ExternalTable };

std::string_view to_string(ErrorSource source);
ErrorSource error_source_from_string(std::string_view name);

struct PresetEnergy {
  std::string preset;
  EnergyBreakdown energy;
};

struct DesignPoint {
  TopologySpec topology;
  QuantSpec quant;
  NetworkStats stats;
  std::uint64_t max_feature_bits = 0;
  std::vector<PresetEnergy> energies;  // one per hardware config, grid order
  std::optional<double> error_rate;
  ErrorSource error_source = ErrorSource::Absent;

  /// Throws ConfigError for an unknown preset name.
  const EnergyBreakdown& energy(std::string_view preset) const;
  /// Lookup key "nA,nB,nC,FA,FB,FC,Q,dataset".
  std::string key() const;
};

std::string accuracy_key(const TopologySpec& topology, int bits);

/// Evaluates stats and energy for every grid element, in deterministic grid
/// order (nA, nB, nC, FA, FB, FC outermost to innermost, then Q). `jobs` > 1
/// evaluates points on worker threads; ordering is unaffected.
std::vector<DesignPoint> sweep(const SweepGrid& grid, unsigned jobs = 1);

struct AccuracyEntry {
  double error_rate = 0.0;
  std::size_t line = 0;
};

/// Accuracy table keyed by DesignPoint::key(). Header:
/// nA,nB,nC,FA,FB,FC,Q,dataset,error_rate. Repeated keys with different error
/// rates are rejected.
using AccuracyTable = std::map<std::string, AccuracyEntry>;

AccuracyTable parse_accuracy_csv(std::istream& in, const std::string& source);
AccuracyTable read_accuracy_csv(const std::filesystem::path& path);

struct AttachReport {
  std::size_t matched = 0;
  std::vector<std::string> unmatched_keys;  // table rows without a design point
};

AttachReport attach_accuracy(std::vector<DesignPoint>& points, const AccuracyTable& table,
                             ErrorSource source = ErrorSource::ExternalTable);

/// Error/energy coordinates of one candidate.
struct Objective {
  double error = 0.0;
  double energy = 0.0;
};

/// Indices (ascending) of the non-dominated objectives. q dominates p when
/// error_q <= error_p and energy_q <= energy_p with one inequality strict;
/// identical coordinates do not dominate each other.
std::vector<std::size_t> pareto_indices(const std::vector<Objective>& objectives);

/// Non-dominated points in (error_rate, E_inf under `preset`).
/// Throws DataError if a point has no error rate.
std::vector<DesignPoint> pareto_front(const std::vector<DesignPoint>& points,
                                      std::string_view preset);

/// Front taken over the `reference_bits` points only, then every point (any Q)
/// sharing a topology with that front.
std::vector<DesignPoint> reference_topology_front(const std::vector<DesignPoint>& points,
                                                  std::string_view preset, int reference_bits = 16);

/// Union of the fronts computed separately for each Q.
std::vector<DesignPoint> per_bits_fronts(const std::vector<DesignPoint>& points,
                                         std::string_view preset);

/// Lowest-E_inf point with error_rate <= target; ties go to smaller Q, then
/// smaller N_s. Throws InfeasibleError when nothing qualifies.
const DesignPoint& min_energy_point(const std::vector<DesignPoint>& points, double error_target,
                                    std::string_view preset);

struct SensitivityRow {
  std::string preset;
  double bin_low = 0.0;
  double bin_high = 0.0;
  std::size_t count = 0;               // points with error in [bin_low, bin_high)
  std::optional<int> best_bits;        // argmin-energy Q, absent for an empty bin
  double best_energy = 0.0;
  std::map<int, double> min_energy_by_bits;
};

/// For every preset and error bin of width `bin_width`, the Q of the
/// minimum-energy point whose error falls inside the bin. Bins span the
/// observed error range; empty bins are reported with count 0.
std::vector<SensitivityRow> memory_sensitivity_report(const std::vector<DesignPoint>& points,
                                                      const std::vector<std::string>& presets,
                                                      double bin_width = 0.01);

/// One row per (point, preset). Energies in pJ.
void write_sweep_csv(std::ostream& out, const std::vector<DesignPoint>& points);
/// Reads rows written by write_sweep_csv back into design points
/// (per-layer footprints are not stored and come back empty).
std::vector<DesignPoint> read_sweep_csv(const std::filesystem::path& path);
std::vector<DesignPoint> parse_sweep_csv(std::istream& in, const std::string& source);

void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityRow>& rows);

const std::vector<std::string>& sweep_csv_header();

}  // namespace qnn
