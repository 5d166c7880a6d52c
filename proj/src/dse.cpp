#include "qnn/dse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "qnn/csv.hpp"
#include "qnn/error.hpp"

namespace qnn {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Grid

std::size_t SweepGrid::size() const {
  const std::size_t w = widths.size(), d = depths.size();
  const std::size_t topo = independent_blocks ? w * w * w * d * d * d : w * d;
  return topo * bits.size();
}

void SweepGrid::validate() const {
  if (widths.empty() || depths.empty() || bits.empty() || hardware.empty())
    throw ConfigError("sweep grid: every axis (widths, depths, Q, hardware) must be non-empty");
  for (std::size_t w : widths)
    if (w == 0) throw ConfigError("sweep grid: widths must be positive");
  for (std::size_t d : depths)
    if (d == 0) throw ConfigError("sweep grid: depths must be positive");
  for (int q : bits) QuantSpec::for_bits(q, input_bits).validate();
  dataset.validate();
  for (const auto& hw : hardware) hw.validate();
  if (size() > max_points)
    throw ConfigError("sweep grid has " + std::to_string(size()) + " points, above the cap of " +
                      std::to_string(max_points));
}

void from_json(const json& j, SweepGrid& grid) {
  if (!j.is_object()) throw ConfigError("sweep grid: expected a JSON object");
  SweepGrid g;
  try {
    if (j.contains("widths")) g.widths = j.at("widths").get<std::vector<std::size_t>>();
    if (j.contains("depths")) g.depths = j.at("depths").get<std::vector<std::size_t>>();
    if (j.contains("Q")) g.bits = j.at("Q").get<std::vector<int>>();
    if (j.contains("M")) g.input_bits = j.at("M").get<int>();
    if (j.contains("independent_blocks")) g.independent_blocks = j.at("independent_blocks").get<bool>();
    if (j.contains("max_points")) g.max_points = j.at("max_points").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sweep grid: ") + e.what());
  }
  if (j.contains("dataset")) from_json(j.at("dataset"), g.dataset);
  if (j.contains("hardware")) {
    g.hardware.clear();
    for (const json& h : j.at("hardware")) {
      if (h.is_string()) g.hardware.push_back(HardwareConfig::preset(h.get<std::string>()));
      else {
        HardwareConfig hw;
        from_json(h, hw);
        g.hardware.push_back(hw);
      }
    }
  }
  grid = g;
}

void to_json(json& j, const SweepGrid& grid) {
  json hw = json::array();
  for (const auto& h : grid.hardware) hw.push_back(h);
  j = json{{"widths", grid.widths},     {"depths", grid.depths},
           {"Q", grid.bits},            {"M", grid.input_bits},
           {"dataset", grid.dataset},   {"hardware", hw},
           {"independent_blocks", grid.independent_blocks},
           {"max_points", grid.max_points}};
}

// ---------------------------------------------------------------------------
// Design points

std::string_view to_string(ErrorSource source) {
  switch (source) {
    case ErrorSource::Absent: return "absent";
    case ErrorSource::TrainedHere: return "trained_here";
    case ErrorSource::ExternalTable: return "external_table";
  }
  return "absent";
}

ErrorSource error_source_from_string(std::string_view name) {
  if (name == "absent" || name.empty()) return ErrorSource::Absent;
  if (name == "trained_here") return ErrorSource::TrainedHere;
  if (name == "external_table") return ErrorSource::ExternalTable;
  throw DataError("unknown error source '" + std::string(name) + "'");
}

const EnergyBreakdown& DesignPoint::energy(std::string_view preset) const {
  for (const auto& e : energies)
    if (e.preset == preset) return e.energy;
  throw ConfigError("design point " + key() + " has no energy for preset '" +
                    std::string(preset) + "'");
}

std::string accuracy_key(const TopologySpec& t, int bits) {
  std::ostringstream k;
  k << t.depth[0] << ',' << t.depth[1] << ',' << t.depth[2] << ',' << t.width[0] << ','
    << t.width[1] << ',' << t.width[2] << ',' << bits << ',' << t.dataset.name;
  return k.str();
}

std::string DesignPoint::key() const { return accuracy_key(topology, quant.bits); }

namespace {

DesignPoint evaluate_point(const TopologySpec& topology, const QuantSpec& quant,
                           const std::vector<HardwareConfig>& hardware) {
  DesignPoint p;
  p.topology = topology;
  p.quant = quant;
  p.stats = compute_stats(topology, quant);
  p.max_feature_bits = max_feature_footprint(p.stats, quant.bits);
  for (const auto& hw : hardware) p.energies.push_back({hw.name, total_energy(p.stats, quant, hw)});
  return p;
}

std::vector<TopologySpec> enumerate_topologies(const SweepGrid& grid) {
  std::vector<TopologySpec> out;
  const auto& D = grid.depths;
  const auto& W = grid.widths;
  if (!grid.independent_blocks) {
    for (std::size_t d : D)
      for (std::size_t w : W) out.push_back({{d, d, d}, {w, w, w}, grid.dataset});
    return out;
  }
  for (std::size_t na : D)
    for (std::size_t nb : D)
      for (std::size_t nc : D)
        for (std::size_t fa : W)
          for (std::size_t fb : W)
            for (std::size_t fc : W) out.push_back({{na, nb, nc}, {fa, fb, fc}, grid.dataset});
  return out;
}

}  // namespace

std::vector<DesignPoint> sweep(const SweepGrid& grid, unsigned jobs) {
  grid.validate();
  struct Task {
    TopologySpec topology;
    QuantSpec quant;
  };
  std::vector<Task> tasks;
  for (const TopologySpec& t : enumerate_topologies(grid))
    for (int q : grid.bits) tasks.push_back({t, QuantSpec::for_bits(q, grid.input_bits)});

  std::vector<DesignPoint> points(tasks.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      points[i] = evaluate_point(tasks[i].topology, tasks[i].quant, grid.hardware);
    return points;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < tasks.size(); i = next++)
        points[i] = evaluate_point(tasks[i].topology, tasks[i].quant, grid.hardware);
    });
  for (auto& t : workers) t.join();
  return points;
}

// ---------------------------------------------------------------------------
// Accuracy tables

AccuracyTable parse_accuracy_csv(std::istream& in, const std::string& source) {
  const CsvTable csv = parse_csv(in, source);
  static const std::vector<std::string> kKeyColumns = {"nA", "nB", "nC", "FA", "FB",
                                                       "FC", "Q",  "dataset"};
  std::vector<std::size_t> key_idx;
  for (const auto& c : kKeyColumns) key_idx.push_back(csv.column(c, source));
  const std::size_t err_idx = csv.column("error_rate", source);

  AccuracyTable table;
  for (const auto& row : csv.rows) {
    std::string key;
    for (std::size_t i = 0; i < key_idx.size(); ++i) {
      const std::string& f = row.fields[key_idx[i]];
      if (i + 1 < key_idx.size()) key += std::to_string(parse_csv_int(f, source, row.line)) + ",";
      else key += f;
    }
    const double err = parse_csv_double(row.fields[err_idx], source, row.line);
    if (!(err >= 0.0 && err <= 1.0))
      throw DataError(source + ":" + std::to_string(row.line) + ": error_rate must be in [0, 1]");
    auto [it, inserted] = table.emplace(key, AccuracyEntry{err, row.line});
    if (!inserted && it->second.error_rate != err)
      throw DataError(source + ":" + std::to_string(row.line) + ": duplicate key " + key +
                      " conflicts with line " + std::to_string(it->second.line));
  }
  return table;
}

AccuracyTable read_accuracy_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_accuracy_csv(in, path.string());
}

AttachReport attach_accuracy(std::vector<DesignPoint>& points, const AccuracyTable& table,
                             ErrorSource source) {
  AttachReport report;
  std::set<std::string> used;
  for (DesignPoint& p : points) {
    auto it = table.find(p.key());
    if (it == table.end()) continue;
    p.error_rate = it->second.error_rate;
    p.error_source = source;
    used.insert(it->first);
    ++report.matched;
  }
  for (const auto& [key, entry] : table)
    if (!used.count(key)) report.unmatched_keys.push_back(key);
  return report;
}

// ---------------------------------------------------------------------------
// Pareto fronts

std::vector<std::size_t> pareto_indices(const std::vector<Objective>& objectives) {
  std::vector<std::size_t> order(objectives.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Objective &x = objectives[a], &y = objectives[b];
    return x.error < y.error || (x.error == y.error && x.energy < y.energy);
  });

  // Walk groups of equal error. Within a group only the minimum-energy
  // points can survive; they survive iff every strictly-better-error point
  // costs strictly more energy.
  std::vector<std::size_t> kept;
  double best_before = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < order.size();) {
    std::size_t end = g;
    while (end < order.size() && objectives[order[end]].error == objectives[order[g]].error) ++end;
    const double group_min = objectives[order[g]].energy;
    if (group_min < best_before)
      for (std::size_t i = g; i < end && objectives[order[i]].energy == group_min; ++i)
        kept.push_back(order[i]);
    best_before = std::min(best_before, group_min);
    g = end;
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

namespace {

std::vector<Objective> objectives_of(const std::vector<DesignPoint>& points,
                                     std::string_view preset) {
  std::vector<Objective> obj;
  obj.reserve(points.size());
  for (const DesignPoint& p : points) {
    if (!p.error_rate) throw DataError("design point " + p.key() + " has no error rate");
    obj.push_back({*p.error_rate, p.energy(preset).total});
  }
  return obj;
}

std::vector<DesignPoint> select(const std::vector<DesignPoint>& points,
                                const std::vector<std::size_t>& idx) {
  std::vector<DesignPoint> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(points[i]);
  return out;
}

}  // namespace

std::vector<DesignPoint> pareto_front(const std::vector<DesignPoint>& points,
                                      std::string_view preset) {
  return select(points, pareto_indices(objectives_of(points, preset)));
}

std::vector<DesignPoint> reference_topology_front(const std::vector<DesignPoint>& points,
                                                  std::string_view preset, int reference_bits) {
  std::vector<DesignPoint> reference;
  for (const DesignPoint& p : points)
    if (p.quant.bits == reference_bits) reference.push_back(p);
  if (reference.empty())
    throw DataError("no design points at the reference precision Q=" + std::to_string(reference_bits));
  const auto front = pareto_front(reference, preset);
  std::vector<DesignPoint> out;
  for (const DesignPoint& p : points)
    for (const DesignPoint& f : front)
      if (p.topology == f.topology) {
        out.push_back(p);
        break;
      }
  return out;
}

std::vector<DesignPoint> per_bits_fronts(const std::vector<DesignPoint>& points,
                                         std::string_view preset) {
  std::set<int> all_bits;
  for (const DesignPoint& p : points) all_bits.insert(p.quant.bits);
  std::vector<DesignPoint> out;
  for (int q : all_bits) {
    std::vector<DesignPoint> subset;
    for (const DesignPoint& p : points)
      if (p.quant.bits == q) subset.push_back(p);
    for (DesignPoint& p : pareto_front(subset, preset)) out.push_back(std::move(p));
  }
  return out;
}

const DesignPoint& min_energy_point(const std::vector<DesignPoint>& points, double error_target,
                                    std::string_view preset) {
  const DesignPoint* best = nullptr;
  for (const DesignPoint& p : points) {
    if (!p.error_rate || *p.error_rate > error_target) continue;
    if (!best) {
      best = &p;
      continue;
    }
    const double e = p.energy(preset).total, eb = best->energy(preset).total;
    if (e < eb || (e == eb && (p.quant.bits < best->quant.bits ||
                               (p.quant.bits == best->quant.bits && p.stats.params < best->stats.params))))
      best = &p;
  }
  if (!best)
    throw InfeasibleError("no design point reaches error rate <= " + format_double(error_target));
  return *best;
}

std::vector<SensitivityRow> memory_sensitivity_report(const std::vector<DesignPoint>& points,
                                                      const std::vector<std::string>& presets,
                                                      double bin_width) {
  if (!(bin_width > 0.0)) throw ConfigError("error bin width must be positive");
  std::vector<const DesignPoint*> rated;
  for (const DesignPoint& p : points)
    if (p.error_rate) rated.push_back(&p);
  std::vector<SensitivityRow> rows;
  if (rated.empty()) return rows;

  double lo = 1.0, hi = 0.0;
  for (const DesignPoint* p : rated) {
    lo = std::min(lo, *p->error_rate);
    hi = std::max(hi, *p->error_rate);
  }
  const long first_bin = static_cast<long>(std::floor(lo / bin_width + 1e-9));
  const long last_bin = static_cast<long>(std::floor(hi / bin_width + 1e-9));
  const auto bin_of = [&](double e) { return static_cast<long>(std::floor(e / bin_width + 1e-9)); };

  for (const std::string& preset : presets)
    for (long b = first_bin; b <= last_bin; ++b) {
      SensitivityRow row;
      row.preset = preset;
      row.bin_low = static_cast<double>(b) * bin_width;
      row.bin_high = static_cast<double>(b + 1) * bin_width;
      const DesignPoint* best = nullptr;
      for (const DesignPoint* p : rated) {
        if (bin_of(*p->error_rate) != b) continue;
        ++row.count;
        const double e = p->energy(preset).total;
        auto [it, inserted] = row.min_energy_by_bits.emplace(p->quant.bits, e);
        if (!inserted) it->second = std::min(it->second, e);
        if (!best || e < best->energy(preset).total ||
            (e == best->energy(preset).total && p->quant.bits < best->quant.bits))
          best = p;
      }
      if (best) {
        row.best_bits = best->quant.bits;
        row.best_energy = best->energy(preset).total;
      }
      rows.push_back(std::move(row));
    }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV I/O

const std::vector<std::string>& sweep_csv_header() {
  static const std::vector<std::string> kHeader = {
      "nA",  "nB",  "nC",  "FA",   "FB",     "FC",    "Q",          "M",           "dataset",
      "preset", "N_c", "N_s", "A_s", "model_bits", "max_feature_bits", "f_r", "w_r", "E_C",
      "E_W", "E_A", "E_HW", "E_DRAM", "E_inf", "error_rate", "error_source"};
  return kHeader;
}

void write_sweep_csv(std::ostream& out, const std::vector<DesignPoint>& points) {
  const auto& header = sweep_csv_header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const DesignPoint& p : points)
    for (const PresetEnergy& pe : p.energies) {
      const auto& t = p.topology;
      const auto& e = pe.energy;
      out << t.depth[0] << ',' << t.depth[1] << ',' << t.depth[2] << ',' << t.width[0] << ','
          << t.width[1] << ',' << t.width[2] << ',' << p.quant.bits << ',' << p.quant.input_bits
          << ',' << t.dataset.name << ',' << pe.preset << ',' << p.stats.macs << ','
          << p.stats.params << ',' << p.stats.activations << ',' << p.stats.model_bits(p.quant.bits)
          << ',' << p.max_feature_bits << ',' << format_double(e.spill.feature_words) << ','
          << format_double(e.spill.weight_words) << ',' << format_double(e.compute) << ','
          << format_double(e.weights) << ',' << format_double(e.activations) << ','
          << format_double(e.on_chip) << ',' << format_double(e.dram) << ','
          << format_double(e.total) << ',' << (p.error_rate ? format_double(*p.error_rate) : "")
          << ',' << to_string(p.error_source) << '\n';
    }
}

std::vector<DesignPoint> parse_sweep_csv(std::istream& in, const std::string& source) {
  const CsvTable csv = parse_csv(in, source);
  std::map<std::string, std::size_t> column;
  for (const auto& name : sweep_csv_header()) column[name] = csv.column(name, source);

  std::vector<DesignPoint> points;
  std::map<std::string, std::size_t> by_key;
  for (const auto& row : csv.rows) {
    const auto field = [&](const char* name) -> const std::string& { return row.fields[column.at(name)]; };
    const auto integer = [&](const char* name) {
      const long long v = parse_csv_int(field(name), source, row.line);
      if (v < 0) throw DataError(source + ":" + std::to_string(row.line) + ": negative " + name);
      return static_cast<std::uint64_t>(v);
    };
    const auto real = [&](const char* name) { return parse_csv_double(field(name), source, row.line); };

    DesignPoint p;
    p.topology.depth = {integer("nA"), integer("nB"), integer("nC")};
    p.topology.width = {integer("FA"), integer("FB"), integer("FC")};
    try {
      p.topology.dataset = DatasetSpec::preset(field("dataset"));
    } catch (const ConfigError&) {
      p.topology.dataset.name = field("dataset");
    }
    p.quant = QuantSpec::for_bits(static_cast<int>(integer("Q")), static_cast<int>(integer("M")));
    p.stats.macs = integer("N_c");
    p.stats.params = integer("N_s");
    p.stats.activations = integer("A_s");
    p.stats.input_bits = static_cast<std::size_t>(p.quant.input_bits);
    p.max_feature_bits = integer("max_feature_bits");
    if (!field("error_rate").empty()) p.error_rate = real("error_rate");
    try {
      p.error_source = error_source_from_string(field("error_source"));
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(row.line) + ": " + e.what());
    }

    EnergyBreakdown e;
    e.spill.feature_words = real("f_r");
    e.spill.weight_words = real("w_r");
    e.compute = real("E_C");
    e.weights = real("E_W");
    e.activations = real("E_A");
    e.on_chip = real("E_HW");
    e.dram = real("E_DRAM");
    e.total = real("E_inf");

    const std::string key = p.key();
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      by_key.emplace(key, points.size());
      p.energies.push_back({field("preset"), e});
      points.push_back(std::move(p));
    } else {
      points[it->second].energies.push_back({field("preset"), e});
    }
  }
  return points;
}

std::vector<DesignPoint> read_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_sweep_csv(in, path.string());
}

void write_sensitivity_csv(std::ostream& out, const std::vector<SensitivityRow>& rows) {
  out << "preset,error_low,error_high,count,best_Q,best_E_inf,min_E_inf_by_Q\n";
  for (const auto& r : rows) {
    out << r.preset << ',' << format_double(r.bin_low) << ',' << format_double(r.bin_high) << ','
        << r.count << ',' << (r.best_bits ? std::to_string(*r.best_bits) : "") << ','
        << (r.best_bits ? format_double(r.best_energy) : "") << ',';
    bool first = true;
    for (const auto& [q, e] : r.min_energy_by_bits) {
      out << (first ? "" : ";") << q << ':' << format_double(e);
      first = false;
    }
    out << '\n';
  }
}

}  // namespace qnn
