#include "qnn/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qnn/checkpoint.hpp"
#include "qnn/csv.hpp"
#include "qnn/dse.hpp"
#include "qnn/energy.hpp"
#include "qnn/error.hpp"
#include "qnn/svg_plot.hpp"
#include "qnn/topology.hpp"
#include "qnn/train.hpp"

namespace qnn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Global flags shared by every subcommand.
struct RunConfig {
  std::string config_path;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  bool deterministic = false;
  std::string output_dir = ".";
  int verbosity = 0;

  fs::path output(const std::string& name) const { return fs::path(output_dir) / name; }

  void prepare_output() const {
    std::error_code ec;
    fs::create_directories(output_dir, ec);
    if (ec || !fs::is_directory(output_dir))
      throw DataError("output directory '" + output_dir + "' cannot be created");
    const fs::path probe = fs::path(output_dir) / ".qnn_write_probe";
    std::ofstream test(probe);
    if (!test) throw DataError("output directory '" + output_dir + "' is not writable");
    test.close();
    fs::remove(probe, ec);
  }
};

// Quantization flags; unset values fall back to the input document, then defaults.
struct QuantFlags {
  std::optional<int> bits;
  std::optional<int> input_bits;
  std::optional<std::string> act;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--Q,-Q", bits, "Weight/activation bit width Q");
    cmd.add_option("--M,-M", input_bits, "First-layer input bit width M");
    cmd.add_option("--act", act, "Activation: relu | hardtanh");
  }

  QuantSpec resolve(const json& doc) const {
    QuantSpec q = QuantSpec::for_bits(8);
    if (doc.contains("quant")) from_json(doc.at("quant"), q);
    if (bits) {
      q.bits = *bits;
      q.act = QuantSpec::for_bits(*bits).act;
    }
    if (input_bits) q.input_bits = *input_bits;
    if (act) q.act = act_kind_from_string(*act);
    q.validate();
    return q;
  }
};

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("'" + path.string() + "': invalid JSON (byte " + std::to_string(e.byte) + ")");
  }
}

TopologySpec read_topology(const fs::path& path, json& doc) {
  doc = read_json_file(path);
  TopologySpec t;
  try {
    from_json(doc, t);
    t.validate();
  } catch (const ConfigError& e) {
    throw DataError("'" + path.string() + "': " + e.what());
  }
  return t;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

std::string micro_joules(double pj) {
  std::ostringstream s;
  s << std::setprecision(4) << pj * 1e-6 << " uJ";
  return s.str();
}

std::string describe_dataset(const DatasetSpec& d) {
  return d.name + " (" + std::to_string(d.s_in) + "x" + std::to_string(d.s_in) + "x" +
         std::to_string(d.c_in) + ", " + std::to_string(d.num_classes) + " classes)";
}

void print_stats(std::ostream& out, const TopologySpec& t, const QuantSpec& q,
                 const NetworkStats& s) {
  out << "topology      nA=" << t.depth[0] << " nB=" << t.depth[1] << " nC=" << t.depth[2]
      << " FA=" << t.width[0] << " FB=" << t.width[1] << " FC=" << t.width[2] << "  "
      << describe_dataset(t.dataset) << '\n';
  out << "quantization  Q=" << q.bits << " M=" << q.input_bits << " act=" << to_string(q.act)
      << " first-layer factor=" << s.first_layer_factor << '\n';
  out << "N_c (MACs)            " << s.macs << '\n';
  out << "N_s (weights+biases)  " << s.params << '\n';
  out << "A_s (activations)     " << s.activations << '\n';
  out << "model size            " << s.model_bits(q.bits) << " bits\n";
  out << "max feature map       " << max_feature_footprint(s, q.bits) << " bits\n";
  out << "layer  kind      in_words  out_words  weight_words        macs\n";
  for (const LayerFootprint& fp : s.per_layer)
    out << std::setw(5) << fp.layer_index << "  " << std::left << std::setw(8) << to_string(fp.kind)
        << std::right << std::setw(10) << fp.input_words << std::setw(11) << fp.output_words
        << std::setw(14) << fp.weight_words << std::setw(12) << fp.macs << '\n';
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string topology;
  QuantFlags quant;
  std::optional<bool> first_layer_factor;
  std::optional<bool> count_bn;
};

int cmd_analyze(const RunConfig& rc, const AnalyzeArgs& a, std::ostream& out) {
  json doc;
  const TopologySpec t = read_topology(a.topology, doc);
  const QuantSpec q = a.quant.resolve(doc);
  StatsOptions opts;
  if (doc.contains("options") && doc.at("options").is_object()) {
    opts.apply_first_layer_factor = doc["options"].value("first_layer_factor", true);
    opts.count_batchnorm_params = doc["options"].value("count_batchnorm_params", false);
  }
  if (a.first_layer_factor) opts.apply_first_layer_factor = *a.first_layer_factor;
  if (a.count_bn) opts.count_batchnorm_params = *a.count_bn;

  const NetworkStats s = compute_stats(t, q, opts);
  print_stats(out, t, q, s);

  json report = t;
  report["quant"] = q;
  report["options"] = {{"first_layer_factor", opts.apply_first_layer_factor},
                       {"count_batchnorm_params", opts.count_batchnorm_params}};
  report["stats"] = s;
  report["model_bits"] = s.model_bits(q.bits);
  report["max_feature_bits"] = max_feature_footprint(s, q.bits);
  rc.prepare_output();
  write_text(rc.output("analyze.json"), report.dump(2) + "\n");
  return kSuccess;
}

// ---------------------------------------------------------------------------
// energy

struct EnergyArgs {
  std::string topology;
  QuantFlags quant;
  std::string preset = "4Mb";
};

HardwareConfig resolve_hardware(const RunConfig& rc, const std::string& preset) {
  if (rc.config_path.empty()) return HardwareConfig::preset(preset);
  HardwareConfig hw;
  const json doc = read_json_file(rc.config_path);
  from_json(doc.contains("hardware") ? doc.at("hardware") : doc, hw);
  return hw;
}

int cmd_energy(const RunConfig& rc, const EnergyArgs& a, std::ostream& out) {
  json doc;
  const TopologySpec t = read_topology(a.topology, doc);
  const QuantSpec q = a.quant.resolve(doc);
  const HardwareConfig hw = resolve_hardware(rc, a.preset);
  const NetworkStats s = compute_stats(t, q);
  const EnergyBreakdown e = total_energy(s, q, hw);

  out << "hardware      " << hw.name << "  E_MAC(Q)=" << std::setprecision(5) << mac_energy(q.bits, hw)
      << " pJ  p=" << parallelism(q.bits, hw) << '\n';
  out << "quantization  Q=" << q.bits << " M=" << q.input_bits << '\n';
  out << "E_C     " << micro_joules(e.compute) << '\n';
  out << "E_W     " << micro_joules(e.weights) << '\n';
  out << "E_A     " << micro_joules(e.activations) << '\n';
  out << "E_HW    " << micro_joules(e.on_chip) << '\n';
  out << "E_DRAM  " << micro_joules(e.dram) << '\n';
  out << "E_inf   " << micro_joules(e.total) << '\n';

  const std::uint64_t model_bits = s.model_bits(q.bits);
  const std::uint64_t feature_bits = max_feature_footprint(s, q.bits);
  if (hw.infinite_memory) {
    out << "diagnosis     unbounded on-chip memory: no spills, DRAM fetches the input only\n";
  } else {
    out << "diagnosis     weights " << model_bits << " bits vs M_W " << static_cast<std::uint64_t>(hw.weight_buffer_bits)
        << (e.spill.weight_words > 0 ? "  SPILL w_r=" : "  fits, w_r=") << e.spill.weight_words << '\n';
    out << "              max feature map " << feature_bits << " bits vs M_A/2 "
        << static_cast<std::uint64_t>(hw.activation_buffer_bits / 2)
        << (e.spill.feature_words > 0 ? "  SPILL f_r=" : "  fits, f_r=") << e.spill.feature_words << '\n';
  }

  json report = t;
  report["quant"] = q;
  report["hardware"] = hw;
  report["stats"] = {{"N_c", s.macs}, {"N_s", s.params}, {"A_s", s.activations},
                     {"model_bits", model_bits}, {"max_feature_bits", feature_bits}};
  report["energy_pJ"] = e;
  rc.prepare_output();
  write_text(rc.output("energy.json"), report.dump(2) + "\n");
  return kSuccess;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string out_name = "sweep.csv";
};

int cmd_sweep(const RunConfig& rc, const SweepArgs& a, std::ostream& out) {
  SweepGrid grid;
  if (!rc.config_path.empty()) {
    try {
      from_json(read_json_file(rc.config_path), grid);
    } catch (const ConfigError& e) {
      throw DataError("'" + rc.config_path + "': " + e.what());
    }
  }
  const auto points = sweep(grid, rc.jobs);
  rc.prepare_output();
  std::ostringstream csv;
  write_sweep_csv(csv, points);
  const fs::path path = rc.output(a.out_name);
  write_text(path, csv.str());
  out << "evaluated " << points.size() << " design points x " << grid.hardware.size()
      << " hardware configs -> " << path.string() << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------------------
// pareto

struct ParetoArgs {
  std::string sweep_csv;
  std::string accuracy_csv;
  std::string source = "external_table";
  std::vector<std::string> presets;
  std::string flow = "reference";
  int reference_bits = 16;
  std::optional<double> target;
  double bin_width = 0.01;
};

int cmd_pareto(const RunConfig& rc, const ParetoArgs& a, std::ostream& out, std::ostream& err) {
  auto points = read_sweep_csv(a.sweep_csv);
  if (!a.accuracy_csv.empty()) {
    const auto table = read_accuracy_csv(a.accuracy_csv);
    const auto report = attach_accuracy(points, table, error_source_from_string(a.source));
    out << "attached " << report.matched << " error rates (" << a.source << ")\n";
    for (const auto& k : report.unmatched_keys) err << "unmatched accuracy row: " << k << '\n';
  }
  std::vector<DesignPoint> rated;
  std::set<std::string> sources;
  for (const auto& p : points)
    if (p.error_rate) {
      rated.push_back(p);
      sources.insert(std::string(to_string(p.error_source)));
    }
  if (rated.empty()) throw DataError("no design point carries an error rate");
  if (sources.size() > 1)
    err << "warning: mixing error-rate provenances:" << [&] {
      std::string s;
      for (const auto& x : sources) s += " " + x;
      return s;
    }() << '\n';

  std::vector<std::string> presets = a.presets;
  if (presets.empty())
    for (const auto& pe : rated.front().energies) presets.push_back(pe.preset);

  std::vector<DesignPoint> front_rows;
  for (const std::string& preset : presets) {
    std::vector<DesignPoint> front;
    if (a.flow == "reference") front = reference_topology_front(rated, preset, a.reference_bits);
    else if (a.flow == "per-q") front = per_bits_fronts(rated, preset);
    else if (a.flow == "all") front = pareto_front(rated, preset);
    else throw ConfigError("unknown --flow '" + a.flow + "' (expected reference|per-q|all)");
    for (DesignPoint p : front) {
      const EnergyBreakdown e = p.energy(preset);
      p.energies = {{preset, e}};
      front_rows.push_back(std::move(p));
    }
    out << "preset " << preset << ": " << front.size() << " front points (flow " << a.flow << ")\n";
  }

  rc.prepare_output();
  std::ostringstream fcsv;
  write_sweep_csv(fcsv, front_rows);
  write_text(rc.output("pareto.csv"), fcsv.str());

  std::ostringstream mcsv;
  write_sensitivity_csv(mcsv, memory_sensitivity_report(rated, presets, a.bin_width));
  write_text(rc.output("min_energy.csv"), mcsv.str());

  if (a.target) {
    for (const std::string& preset : presets) {
      const DesignPoint& best = min_energy_point(rated, *a.target, preset);
      out << "minimum energy at error <= " << *a.target << " [" << preset << "]: " << best.key()
          << "  E_inf=" << micro_joules(best.energy(preset).total)
          << "  error=" << *best.error_rate << " (" << to_string(best.error_source) << ")\n";
    }
  }
  return kSuccess;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string topology;
  QuantFlags quant;
  std::string data_dir;
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
  std::optional<double> lr_decay;
  std::optional<std::string> optimizer;
  std::optional<double> logit_scale;
  bool recalibrate_bn = false;
  std::string accuracy_csv;
  double noise = 0.5;
};

TrainConfig resolve_train_config(const RunConfig& rc, const TrainArgs& a) {
  TrainConfig cfg;
  if (!rc.config_path.empty()) {
    const json doc = read_json_file(rc.config_path);
    try {
      cfg.epochs = doc.value("epochs", cfg.epochs);
      cfg.batch_size = doc.value("batch_size", cfg.batch_size);
      cfg.learning_rate = doc.value("learning_rate", cfg.learning_rate);
      cfg.lr_decay = doc.value("lr_decay", cfg.lr_decay);
      cfg.momentum = doc.value("momentum", cfg.momentum);
      cfg.beta1 = doc.value("beta1", cfg.beta1);
      cfg.beta2 = doc.value("beta2", cfg.beta2);
      cfg.logit_scale = doc.value("logit_scale", cfg.logit_scale);
      cfg.recalibrate_batchnorm = doc.value("recalibrate_batchnorm", cfg.recalibrate_batchnorm);
      if (doc.contains("optimizer")) cfg.optimizer = optimizer_from_string(doc.at("optimizer").get<std::string>());
    } catch (const json::exception& e) {
      throw DataError("'" + rc.config_path + "': " + e.what());
    }
  }
  cfg.seed = rc.seed;
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.batch) cfg.batch_size = *a.batch;
  if (a.lr) cfg.learning_rate = *a.lr;
  if (a.lr_decay) cfg.lr_decay = *a.lr_decay;
  if (a.optimizer) cfg.optimizer = optimizer_from_string(*a.optimizer);
  if (a.logit_scale) cfg.logit_scale = *a.logit_scale;
  if (a.recalibrate_bn) cfg.recalibrate_batchnorm = true;
  cfg.validate();
  return cfg;
}

int cmd_train(const RunConfig& rc, const TrainArgs& a, std::ostream& out) {
  json doc;
  const TopologySpec t = read_topology(a.topology, doc);
  const QuantSpec q = a.quant.resolve(doc);
  const TrainConfig cfg = resolve_train_config(rc, a);

  fs::path dir = a.data_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("QNN_DATA_DIR")) dir = env;
  }
  if (dir.empty() && t.dataset.source != DataSource::Synthetic)
    throw ConfigError("no dataset directory: pass --data-dir or set QNN_DATA_DIR");

  Dataset train_set, test_set;
  if (t.dataset.source == DataSource::Synthetic) {
    train_set = make_synthetic(t.dataset, a.train_limit ? a.train_limit : 1000, rc.seed, a.noise);
    test_set = make_synthetic(t.dataset, a.test_limit ? a.test_limit : 400, rc.seed ^ 0x7e57u, a.noise);
  } else {
    train_set = load_dataset(t.dataset, dir, Split::Train, a.train_limit);
    test_set = load_dataset(t.dataset, dir, Split::Test, a.test_limit);
  }

  Model model = build_topology(t, q, rc.seed);
  rc.prepare_output();
  std::ostringstream history;
  history << "epoch,train_loss,train_accuracy,test_accuracy\n";
  const auto result = train(model, train_set, test_set, cfg, [&](const EpochRecord& r) {
    history << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.train_accuracy)
            << ',' << format_double(r.test_accuracy) << '\n';
    if (rc.verbosity > 0)
      out << "epoch " << r.epoch << "  loss " << r.train_loss << "  train acc " << r.train_accuracy
          << "  test acc " << r.test_accuracy << '\n';
  });
  const double accuracy = result.history.empty() ? evaluate_accuracy(model, test_set)
                                                 : result.final_test_accuracy();
  const double error = 1.0 - accuracy;

  write_text(rc.output("train_history.csv"), history.str());
  const fs::path ck = save_checkpoint(model, t, q, rc.output("model"));

  const fs::path acc_path = a.accuracy_csv.empty() ? rc.output("accuracy.csv") : fs::path(a.accuracy_csv);
  const bool fresh = !fs::exists(acc_path) || fs::file_size(acc_path) == 0;
  std::ofstream acc(acc_path, std::ios::app | std::ios::binary);
  if (!acc) throw DataError("cannot write '" + acc_path.string() + "'");
  if (fresh) acc << "nA,nB,nC,FA,FB,FC,Q,dataset,error_rate\n";
  acc << accuracy_key(t, q.bits) << ',' << format_double(error) << '\n';

  out << "trained " << accuracy_key(t, q.bits) << " for " << cfg.epochs << " epochs: test error "
      << std::setprecision(4) << error << "\ncheckpoint " << ck.string() << "\naccuracy row -> "
      << acc_path.string() << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------------------
// plot

struct PlotArgs {
  std::string csv;
  std::string kind = "energy";
  std::string preset;
  std::string metric = "N_c";
  std::string out_name = "plot.svg";
  bool linear = false;
};

std::string q_label(int q) { return q == 1 ? "binary (Q=1)" : "int" + std::to_string(q); }

int cmd_plot(const RunConfig& rc, const PlotArgs& a, std::ostream& out) {
  PlotOptions opt;
  opt.deterministic = rc.deterministic;
  std::map<int, PlotSeries> series;

  if (a.kind == "energy" || a.kind == "stats") {
    const auto points = read_sweep_csv(a.csv);
    for (const DesignPoint& p : points) {
      if (!p.error_rate) continue;
      for (const PresetEnergy& pe : p.energies) {
        if (!a.preset.empty() && pe.preset != a.preset) continue;
        auto& s = series[p.quant.bits];
        s.label = q_label(p.quant.bits);
        if (a.kind == "energy") {
          s.points.emplace_back(pe.energy.total * 1e-6, *p.error_rate * 100.0);
        } else {
          double y;
          if (a.metric == "N_c") y = static_cast<double>(p.stats.macs);
          else if (a.metric == "model_bits") y = static_cast<double>(p.stats.model_bits(p.quant.bits));
          else if (a.metric == "max_feature_bits") y = static_cast<double>(p.max_feature_bits);
          else throw ConfigError("unknown --metric '" + a.metric + "' (N_c|model_bits|max_feature_bits)");
          s.points.emplace_back(*p.error_rate * 100.0, y);
        }
        if (a.kind == "stats") break;  // stats do not depend on the preset
      }
    }
    if (a.kind == "energy") {
      opt.title = "Error rate vs energy per inference";
      opt.x_label = "E_inf [uJ]";
      opt.y_label = "error rate [%]";
      opt.log_x = !a.linear;
    } else {
      opt.title = a.metric + " vs error rate";
      opt.x_label = "error rate [%]";
      opt.y_label = a.metric;
      opt.log_y = !a.linear;
    }
  } else if (a.kind == "minimum") {
    const CsvTable csv = read_csv(a.csv);
    const std::size_t c_preset = csv.column("preset", a.csv);
    const std::size_t c_lo = csv.column("error_low", a.csv);
    const std::size_t c_hi = csv.column("error_high", a.csv);
    const std::size_t c_by = csv.column("min_E_inf_by_Q", a.csv);
    for (const auto& row : csv.rows) {
      if (!a.preset.empty() && row.fields[c_preset] != a.preset) continue;
      const double mid = 50.0 * (parse_csv_double(row.fields[c_lo], a.csv, row.line) +
                                 parse_csv_double(row.fields[c_hi], a.csv, row.line));
      std::stringstream entries(row.fields[c_by]);
      std::string item;
      while (std::getline(entries, item, ';')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
          throw DataError(a.csv + ":" + std::to_string(row.line) + ": malformed min_E_inf_by_Q entry");
        const int q = static_cast<int>(parse_csv_int(item.substr(0, colon), a.csv, row.line));
        const double e = parse_csv_double(item.substr(colon + 1), a.csv, row.line);
        auto& s = series[q];
        s.label = q_label(q);
        s.connect = true;
        s.points.emplace_back(mid, e * 1e-6);
      }
    }
    opt.title = "Minimum energy per error-rate bin";
    opt.x_label = "error rate [%]";
    opt.y_label = "min E_inf [uJ]";
    opt.log_y = !a.linear;
  } else {
    throw ConfigError("unknown plot kind '" + a.kind + "' (expected energy|stats|minimum)");
  }

  std::vector<PlotSeries> list;
  std::size_t markers = 0;
  for (auto& [q, s] : series) {
    markers += s.points.size();
    list.push_back(std::move(s));
  }
  rc.prepare_output();
  const fs::path path = rc.output(a.out_name);
  write_text(path, render_svg(list, opt));
  out << "wrote " << path.string() << " (" << markers << " markers, " << list.size() << " series)\n";
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantized neural network training and minimum-energy design-space exploration"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig rc;
  app.add_option("--config", rc.config_path, "Subcommand JSON configuration (sweep grid, train config, hardware)");
  app.add_option("--seed", rc.seed, "Seed for every random choice");
  app.add_option("--jobs", rc.jobs, "Worker threads for sweep evaluation")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", rc.deterministic, "Byte-identical outputs (no timestamps)");
  app.add_option("--output,-o", rc.output_dir, "Output directory");
  app.add_flag("-v,--verbose", rc.verbosity, "More progress output");

  AnalyzeArgs analyze;
  auto* c_analyze = app.add_subcommand("analyze", "Network complexity, size and feature-map statistics");
  c_analyze->add_option("topology", analyze.topology, "Topology JSON")->required();
  analyze.quant.add_to(*c_analyze);
  c_analyze->add_flag("--first-layer-factor,!--no-first-layer-factor", analyze.first_layer_factor,
                      "Apply ceil(M/Q) to the first layer's MACs");
  c_analyze->add_flag("--count-bn-params", analyze.count_bn, "Count batchnorm scale/shift in N_s");

  EnergyArgs energy;
  auto* c_energy = app.add_subcommand("energy", "Inference energy breakdown");
  c_energy->add_option("topology", energy.topology, "Topology JSON")->required();
  energy.quant.add_to(*c_energy);
  c_energy->add_option("--preset", energy.preset, "Hardware preset: 1Mb | 4Mb | infinite");

  SweepArgs sweep_args;
  auto* c_sweep = app.add_subcommand("sweep", "Brute-force sweep over topology x Q");
  c_sweep->add_option("--out", sweep_args.out_name, "Output CSV file name");

  ParetoArgs pareto;
  auto* c_pareto = app.add_subcommand("pareto", "Pareto fronts and minimum-energy tables");
  c_pareto->add_option("sweep", pareto.sweep_csv, "Sweep CSV")->required();
  c_pareto->add_option("--accuracy", pareto.accuracy_csv, "Accuracy CSV to attach");
  c_pareto->add_option("--accuracy-source", pareto.source, "trained_here | external_table");
  c_pareto->add_option("--preset", pareto.presets, "Restrict to these hardware presets");
  c_pareto->add_option("--flow", pareto.flow, "reference (front at reference Q, requantized) | per-q | all");
  c_pareto->add_option("--reference-q", pareto.reference_bits, "Reference precision of the reference flow");
  c_pareto->add_option("--target", pareto.target, "Report the minimum-energy point at this error rate");
  c_pareto->add_option("--bin-width", pareto.bin_width, "Error-bin width of the minimum-energy table");

  TrainArgs train_args;
  auto* c_train = app.add_subcommand("train", "Train a quantized network");
  c_train->add_option("topology", train_args.topology, "Topology JSON")->required();
  train_args.quant.add_to(*c_train);
  c_train->add_option("--data-dir", train_args.data_dir, "Dataset directory (fallback: QNN_DATA_DIR)");
  c_train->add_option("--train-limit", train_args.train_limit, "Use at most N training images");
  c_train->add_option("--test-limit", train_args.test_limit, "Use at most N test images");
  c_train->add_option("--epochs", train_args.epochs);
  c_train->add_option("--batch", train_args.batch);
  c_train->add_option("--lr", train_args.lr);
  c_train->add_option("--lr-decay", train_args.lr_decay);
  c_train->add_option("--optimizer", train_args.optimizer, "adam | sgd");
  c_train->add_option("--logit-scale", train_args.logit_scale, "Logit factor inside the training loss");
  c_train->add_flag("--recalibrate-bn", train_args.recalibrate_bn,
                    "Re-estimate batchnorm statistics after every epoch");
  c_train->add_option("--accuracy-out", train_args.accuracy_csv, "Accuracy CSV to append to");
  c_train->add_option("--noise", train_args.noise, "Noise level of synthetic datasets");

  PlotArgs plot;
  auto* c_plot = app.add_subcommand("plot", "SVG charts from sweep/pareto/min-energy CSVs");
  c_plot->add_option("csv", plot.csv, "Input CSV")->required();
  c_plot->add_option("--kind", plot.kind, "energy | stats | minimum");
  c_plot->add_option("--preset", plot.preset, "Only rows of this hardware preset");
  c_plot->add_option("--metric", plot.metric, "stats metric: N_c | model_bits | max_feature_bits");
  c_plot->add_option("--out", plot.out_name, "Output SVG file name");
  c_plot->add_flag("--linear", plot.linear, "Linear instead of logarithmic axes");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (*c_analyze) return cmd_analyze(rc, analyze, out);
    if (*c_energy) return cmd_energy(rc, energy, out);
    if (*c_sweep) return cmd_sweep(rc, sweep_args, out);
    if (*c_pareto) return cmd_pareto(rc, pareto, out, err);
    if (*c_train) return cmd_train(rc, train_args, out);
    if (*c_plot) return cmd_plot(rc, plot, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace qnn::cli
