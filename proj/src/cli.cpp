#include "luna/cli.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "luna/costmodel.hpp"
#include "luna/de_search.hpp"
#include "luna/error.hpp"
#include "luna/lutnet.hpp"
#include "luna/manifest.hpp"
#include "luna/rtl_emit.hpp"
#include "luna/rtl_interp.hpp"
#include "luna/trace_data.hpp"

namespace fs = std::filesystem;

namespace luna {

namespace {

struct Common {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true, const std::string& out_names = "--out-dir") {
  cmd->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  cmd->add_option("--jobs", c.jobs, "Concurrent candidate evaluations")->check(CLI::PositiveNumber)->capture_default_str();
  auto* o = cmd->add_option(out_names, c.out_dir, "Output directory");
  if (out_required) o->required();
}

struct CostOptions {
  std::string target;
  std::string weights;
  std::string calibration;

  CostWeights resolve() const {
    if (!weights.empty()) {
      std::vector<double> w;
      std::stringstream ss(weights);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          std::size_t used = 0;
          w.push_back(std::stod(item, &used));
          if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
          throw ConfigError("--weights expects three numbers wa,wl,wf");
        }
      }
      if (w.size() != 3) throw ConfigError("--weights expects three numbers wa,wl,wf");
      CostWeights cw{w[0], w[1], w[2]};
      cw.validate();
      return cw;
    }
    if (target == "area") return CostWeights::area_optimized();
    if (target == "latency") return CostWeights::latency_optimized();
    return CostWeights::fidelity_optimized();
  }

  CalibrationModel model() const {
    if (calibration.empty()) return {};
    try {
      return calibration_from_json(nlohmann::json::parse(read_file(calibration)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(calibration + ": " + e.what());
    }
  }
};

void add_cost(CLI::App* cmd, CostOptions& c) {
  auto* t = cmd->add_option("--target", c.target, "Weight preset")->check(CLI::IsMember({"area", "latency", "fidelity"}));
  auto* w = cmd->add_option("--weights", c.weights, "Explicit weights wa,wl,wf summing to 1");
  t->excludes(w);
  cmd->add_option("--calibration", c.calibration, "Calibration JSON")->check(CLI::ExistingFile);
}

struct TrainFlags {
  int epochs = 0;
  std::size_t batch = 0;
  double lr = 0.01;
  std::string optimizer = "adam";
};

void add_train(CLI::App* cmd, TrainFlags& t) {
  cmd->add_option("--epochs", t.epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--batch", t.batch, "Mini-batch size")->check(CLI::Range(2, 1 << 24))->capture_default_str();
  cmd->add_option("--lr", t.lr, "Learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--optimizer", t.optimizer, "adam or sgd")
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
}

Optimizer optimizer_of(const std::string& s) { return s == "sgd" ? Optimizer::sgd : Optimizer::adam; }

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
  return fs::path(dir);
}

nlohmann::json read_json(const fs::path& p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LUNA integrator + LUT network co-design toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  // gen-data
  Common gen_c;
  SynthParams synth;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic two-class I/Q dataset");
  add_common(gen, gen_c, true, "--out-dir,--out");
  gen->add_option("--n", synth.n, "Number of traces")->capture_default_str();
  gen->add_option("--trace-length,--T", synth.trace_length, "Samples per channel")->capture_default_str();
  gen->add_option("--separation", synth.separation, "Distance between class means")->capture_default_str();
  gen->add_option("--noise-sd", synth.noise_sd, "Gaussian noise standard deviation")->capture_default_str();

  // import-npy
  Common imp_c;
  std::string npy_traces, npy_labels;
  auto* imp = app.add_subcommand("import-npy", "Convert NumPy trace and label arrays to the dataset format");
  add_common(imp, imp_c);
  imp->add_option("--traces", npy_traces, "Trace array, shape (n,T,2) or (n,2T)")->required()->check(CLI::ExistingFile);
  imp->add_option("--labels", npy_labels, "Label array, shape (n)")->required()->check(CLI::ExistingFile);

  // search and probe share the candidate evaluation options
  struct SearchFlags {
    Common c;
    CostOptions cost;
    TrainFlags train{5, 512};
    std::string data, split, space;
    double area_prune = 20000.0;
  };
  auto add_search_flags = [&](CLI::App* cmd, SearchFlags& f) {
    add_common(cmd, f.c);
    add_cost(cmd, f.cost);
    add_train(cmd, f.train);
    cmd->add_option("--data", f.data, "Dataset file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--split", f.split, "Split JSON overriding the default 90/10 split")->check(CLI::ExistingFile);
    cmd->add_option("--space", f.space, "Search-space JSON")->check(CLI::ExistingFile);
    cmd->add_option("--area-max", f.area_prune, "Area prune bound in LUTs")->capture_default_str();
  };

  SearchFlags sf;
  int np = 75, gmax = 150, patience = 40;
  double f_de = 0.7, cr = 0.8;
  auto* search = app.add_subcommand("search", "Differential-evolution design search");
  add_search_flags(search, sf);
  search->add_option("--np", np, "Population size")->capture_default_str();
  search->add_option("--gmax", gmax, "Maximum generations")->capture_default_str();
  search->add_option("--patience", patience, "Stagnant generations before stopping")->capture_default_str();
  search->add_option("--f", f_de, "DE scale factor")->capture_default_str();
  search->add_option("--cr", cr, "DE crossover rate")->capture_default_str();

  SearchFlags pf;
  std::size_t probe_n = 100;
  auto* probe = app.add_subcommand("probe", "Evaluate random on-grid design points");
  add_search_flags(probe, pf);
  probe->add_option("--n", probe_n, "Number of probes")->check(CLI::PositiveNumber)->capture_default_str();

  // finalize
  Common fin_c;
  CostOptions fin_cost;
  TrainFlags fin_train{30, 1024};
  std::string fin_data, fin_split, fin_design, fin_tables, fin_name = "luna";
  std::size_t fin_probes = 1000;
  int fin_jitter = 64;
  auto* fin = app.add_subcommand("finalize", "Train, extract tables, emit HDL and verify it");
  add_common(fin, fin_c);
  add_cost(fin, fin_cost);
  add_train(fin, fin_train);
  fin->add_option("--data", fin_data, "Dataset file")->required()->check(CLI::ExistingFile);
  fin->add_option("--split", fin_split, "Split JSON")->check(CLI::ExistingFile);
  fin->add_option("--design", fin_design, "Design point JSON")->required()->check(CLI::ExistingFile);
  fin->add_option("--tables", fin_tables, "Use an existing table net instead of training")->check(CLI::ExistingFile);
  fin->add_option("--name", fin_name, "HDL module prefix")->capture_default_str();
  fin->add_option("--probe-traces", fin_probes, "Traces checked against the interpreter")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fin->add_option("--jitter", fin_jitter, "Uniform sample jitter on probe traces")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  // emit-rtl
  Common emit_c;
  std::string emit_design, emit_tables, emit_data, emit_name = "luna";
  std::size_t emit_T = kDefaultTraceLength, emit_verify = 0;
  auto* emit_cmd = app.add_subcommand("emit-rtl", "Emit HDL for a design and its table net");
  add_common(emit_cmd, emit_c);
  emit_cmd->add_option("--design", emit_design, "Design point JSON")->required()->check(CLI::ExistingFile);
  emit_cmd->add_option("--tables", emit_tables, "Table net JSON")->required()->check(CLI::ExistingFile);
  emit_cmd->add_option("--trace-length", emit_T, "Samples per channel")->capture_default_str();
  emit_cmd->add_option("--name", emit_name, "HDL module prefix")->capture_default_str();
  emit_cmd->add_option("--data", emit_data, "Dataset used for verification traces")->check(CLI::ExistingFile);
  emit_cmd->add_option("--verify", emit_verify, "Probe traces to check (needs --data)")->capture_default_str();

  // report
  Common rep_c;
  CostOptions rep_cost;
  std::string rep_design;
  std::vector<std::string> rep_inputs;
  std::size_t rep_T = kDefaultTraceLength;
  auto* rep = app.add_subcommand("report", "Hardware estimate for a design, or a CSV of cost reports");
  add_common(rep, rep_c, false);
  add_cost(rep, rep_cost);
  rep->add_option("--design", rep_design, "Design point JSON")->check(CLI::ExistingFile);
  rep->add_option("--trace-length", rep_T, "Samples per channel")->capture_default_str();
  rep->add_option("--reports", rep_inputs, "report.json files to tabulate")->check(CLI::ExistingFile);

  // calibrate
  Common cal_c;
  std::string cal_samples;
  auto* cal = app.add_subcommand("calibrate", "Fit the area model to measured LUT counts");
  add_common(cal, cal_c);
  cal->add_option("--samples", cal_samples, "Samples JSON")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const Clock clock;
  RunManifest man;
  man.argv = args;

  try {
    if (*gen) {
      synth.seed = gen_c.seed;
      auto ds = synth_dataset(synth);
      const auto dir = prepare_dir(gen_c.out_dir);
      write_dataset(ds, dir / "dataset.bin");
      man.command = "gen-data";
      man.seed = synth.seed;
      man.config = {{"n", synth.n},
                    {"trace_length", synth.trace_length},
                    {"separation", synth.separation},
                    {"noise_sd", synth.noise_sd}};
      man.outputs = {dir / "dataset.bin"};
      man.wall_seconds = clock.seconds();
      write_manifest(man, dir);
      out << "wrote " << (dir / "dataset.bin").string() << " (" << ds.size() << " traces)\n";
      return kExitOk;
    }

    if (*imp) {
      auto ds = import_npy(npy_traces, npy_labels);
      const auto dir = prepare_dir(imp_c.out_dir);
      write_dataset(ds, dir / "dataset.bin");
      man.command = "import-npy";
      man.seed = imp_c.seed;
      man.inputs = {npy_traces, npy_labels};
      man.outputs = {dir / "dataset.bin"};
      man.wall_seconds = clock.seconds();
      write_manifest(man, dir);
      out << "wrote " << (dir / "dataset.bin").string() << " (" << ds.size() << " traces, T=" << ds.trace_length()
          << ")\n";
      return kExitOk;
    }

    auto search_config = [](const SearchFlags& f) {
      SearchConfig cfg;
      cfg.weights = f.cost.resolve();
      cfg.search_epochs = f.train.epochs;
      cfg.search_batch = f.train.batch;
      cfg.learning_rate = f.train.lr;
      cfg.optimizer = optimizer_of(f.train.optimizer);
      cfg.area_prune = f.area_prune;
      cfg.jobs = f.c.jobs;
      cfg.seed = f.c.seed;
      if (!f.space.empty()) {
        cfg.space = space_from_json(read_json(f.space));
        cfg.space.normalize();
      }
      return cfg;
    };
    auto load = [](const std::string& data, const std::string& split) {
      return load_dataset(data, split.empty() ? std::nullopt : std::optional<fs::path>(split));
    };
    auto record_inputs = [](RunManifest& m, std::initializer_list<std::string> paths) {
      for (const auto& p : paths)
        if (!p.empty()) m.inputs.emplace_back(p);
    };

    if (*search) {
      auto cfg = search_config(sf);
      cfg.np = np;
      cfg.g_max = gmax;
      cfg.patience = patience;
      cfg.f_de = f_de;
      cfg.cr = cr;
      cfg.validate();
      const auto calib = sf.cost.model();
      const auto ds = load(sf.data, sf.split);
      const auto dir = prepare_dir(sf.c.out_dir);
      const auto res = run_search(ds, cfg, calib);
      write_file(dir / "best_design.json", to_json(res.best).dump(2) + "\n");
      write_file(dir / "best_report.json", to_json(res.best_report).dump(2) + "\n");
      write_file(dir / "trajectory.csv", trajectory_csv(res));
      write_file(dir / "search_log.csv", search_log_csv(res));
      man.command = "search";
      man.seed = cfg.seed;
      man.config = to_json(cfg);
      man.config["calibration"] = to_json(calib);
      man.config["jobs"] = cfg.jobs;
      record_inputs(man, {sf.data, sf.split, sf.space, sf.cost.calibration});
      man.outputs = {dir / "best_design.json", dir / "best_report.json", dir / "trajectory.csv",
                     dir / "search_log.csv"};
      man.wall_seconds = clock.seconds();
      write_manifest(man, dir);
      out << "generations " << res.generations << (res.early_stopped ? " (early stop)" : "") << "\n";
      out << "best cost " << format_double(res.best_report.composite) << " fidelity "
          << format_double(res.best_report.fidelity) << " area " << format_double(res.best_report.area_luts)
          << " latency " << res.best_report.latency_cycles << "\n";
      return kExitOk;
    }

    if (*probe) {
      const auto cfg = search_config(pf);
      cfg.validate();
      const auto calib = pf.cost.model();
      const auto ds = load(pf.data, pf.split);
      const auto dir = prepare_dir(pf.c.out_dir);
      const auto rows = random_probe(probe_n, ds, cfg, calib);
      write_file(dir / "probe.csv", probe_csv(rows));
      man.command = "probe";
      man.seed = cfg.seed;
      man.config = to_json(cfg);
      man.config["n"] = probe_n;
      man.config["calibration"] = to_json(calib);
      record_inputs(man, {pf.data, pf.split, pf.space, pf.cost.calibration});
      man.outputs = {dir / "probe.csv"};
      man.wall_seconds = clock.seconds();
      write_manifest(man, dir);
      out << "wrote " << rows.size() << " probe rows to " << (dir / "probe.csv").string() << "\n";
      return kExitOk;
    }

    if (*fin) {
      const auto weights = fin_cost.resolve();
      const auto calib = fin_cost.model();
      const auto ds = load(fin_data, fin_split);
      const auto dp = design_from_json(read_json(fin_design));
      const auto cfg = dp.integrator();
      const std::size_t T = ds.trace_length();
      const auto dir = prepare_dir(fin_c.out_dir);
      man.command = "finalize";
      man.seed = fin_c.seed;
      record_inputs(man, {fin_data, fin_split, fin_design, fin_tables, fin_cost.calibration});

      TruthTableNet ttn;
      if (!fin_tables.empty()) {
        ttn = read_table_net(fin_tables);
      } else {
        const auto train_set = featurize(ds, ds.train_indices, cfg);
        const auto net = build_topology(dp, feature_layout(cfg, T), derive_seed(fin_c.seed, {0}));
        TrainOptions opt;
        opt.epochs = fin_train.epochs;
        opt.batch_size = fin_train.batch;
        opt.learning_rate = fin_train.lr;
        opt.optimizer = optimizer_of(fin_train.optimizer);
        opt.seed = derive_seed(fin_c.seed, {1});
        const auto trained = train(net, train_set, opt);
        write_file(dir / "trained_net.json", to_json(trained).dump() + "\n");
        ttn = extract_tables(trained);
        write_table_net(ttn, dir / "tables.json");
        if (!(read_table_net(dir / "tables.json") == ttn))
          throw VerificationError("table net changed across a write/read round trip");
        man.outputs = {dir / "trained_net.json", dir / "tables.json", dir / "tables.bin"};
      }

      const double fid = fidelity(ttn, cfg, ds, ds.test_indices);
      const auto hdl = emit(dp, ttn, cfg, T, fin_name);
      for (const auto& p : write_hdl(hdl, dir)) man.outputs.push_back(p);

      EquivalenceReport eq;
      for (int round = 0; round < 10 && eq.checked < fin_probes; ++round) {
        const auto traces = probe_traces(ds, fin_probes - eq.checked, fin_jitter,
                                         derive_seed(fin_c.seed, {2, static_cast<std::uint64_t>(round)}));
        const auto r = check_equivalence(hdl, ttn, cfg, traces);
        eq.checked += r.checked;
        eq.class_mismatches += r.class_mismatches;
        eq.cycle_mismatches += r.cycle_mismatches;
        eq.skipped_overflow += r.skipped_overflow;
      }

      CostReport report = hardware_report(dp, calib, T);
      report.fidelity = fid;
      report.composite = composite_cost(report.area_luts, report.latency_cycles, fid, weights);
      auto rj = to_json(report);
      rj["equivalence"] = {{"checked", eq.checked},
                           {"class_mismatches", eq.class_mismatches},
                           {"cycle_mismatches", eq.cycle_mismatches},
                           {"skipped_overflow", eq.skipped_overflow},
                           {"interpreter_latency", hdl.latency}};
      rj["table_checksum"] = hex64(table_checksum(ttn));
      write_file(dir / "report.json", rj.dump(2) + "\n");
      write_file(dir / "report.csv", report_csv_header() + "\n" + report_csv_row(fin_name, report) + "\n");
      man.outputs.push_back(dir / "report.json");
      man.outputs.push_back(dir / "report.csv");

      man.config = {{"design", to_json(dp)},
                    {"epochs", fin_train.epochs},
                    {"batch", fin_train.batch},
                    {"learning_rate", fin_train.lr},
                    {"optimizer", fin_train.optimizer},
                    {"weights", {weights.area, weights.latency, weights.fidelity}},
                    {"calibration", to_json(calib)},
                    {"probe_traces", fin_probes},
                    {"jitter", fin_jitter},
                    {"name", fin_name},
                    {"trained", fin_tables.empty()}};
      man.wall_seconds = clock.seconds();
      write_manifest(man, dir);

      out << "fidelity " << format_double(fid) << " area " << format_double(report.area_luts) << " latency "
          << report.latency_cycles << " deployed " << report.deployed_latency_cycles() << "\n";
      out << "equivalence " << eq.checked << " traces, " << eq.class_mismatches << " class mismatches, "
          << eq.cycle_mismatches << " latency mismatches\n";
      if (eq.checked < fin_probes) {
        err << "error: only " << eq.checked << " of " << fin_probes << " probe traces fit the feature width\n";
        return kExitVerification;
      }
      if (!eq.passed()) {
        err << "error: HDL does not match the table net\n";
        return kExitVerification;
      }
      return kExitOk;
    }

    if (*emit_cmd) {
      const auto dp = design_from_json(read_json(emit_design));
      const auto ttn = read_table_net(emit_tables);
      std::optional<Dataset> ds;
      if (!emit_data.empty()) {
        ds = load_dataset(emit_data);
        emit_T = ds->trace_length();
      }
      if (emit_verify > 0 && !ds) throw ConfigError("--verify needs --data");
      const auto cfg = dp.integrator();
      const auto hdl = emit(dp, ttn, cfg, emit_T, emit_name);
      const auto dir = prepare_dir(emit_c.out_dir);
      man.command = "emit-rtl";
      man.seed = emit_c.seed;
      record_inputs(man, {emit_design, emit_tables, emit_data});
      man.outputs = write_hdl(hdl, dir);
      man.config = {{"trace_length", emit_T}, {"name", emit_name}, {"verify", emit_verify}};
      EquivalenceReport eq;
      if (emit_verify > 0) eq = check_equivalence(hdl, ttn, cfg, probe_traces(*ds, emit_verify, 64, emit_c.seed));
      man.wall_seconds = clock.seconds();
      write_manifest(man, dir);
      out << "emitted " << hdl.files.size() << " HDL files, latency " << hdl.latency << " cycles\n";
      if (emit_verify > 0) {
        out << "equivalence " << eq.checked << " traces, " << eq.class_mismatches << " class mismatches\n";
        if (!eq.passed()) return kExitVerification;
      }
      return kExitOk;
    }

    if (*rep) {
      if (rep_design.empty() == rep_inputs.empty()) throw ConfigError("report needs exactly one of --design or --reports");
      std::string text;
      if (!rep_design.empty()) {
        const auto dp = design_from_json(read_json(rep_design));
        const auto r = hardware_report(dp, rep_cost.model(), rep_T);
        auto j = to_json(r);
        j.erase("fidelity");
        j.erase("composite");
        j.erase("status");
        text = j.dump(2) + "\n";
      } else {
        text = report_csv_header() + "\n";
        for (const auto& p : rep_inputs)
          text += report_csv_row(fs::path(p).parent_path().filename().string(), report_from_json(read_json(p))) + "\n";
      }
      out << text;
      if (!rep_c.out_dir.empty()) {
        const auto dir = prepare_dir(rep_c.out_dir);
        const auto file = dir / (rep_design.empty() ? "report.csv" : "estimate.json");
        write_file(file, text);
        man.command = "report";
        man.seed = rep_c.seed;
        record_inputs(man, {rep_design, rep_cost.calibration});
        for (const auto& p : rep_inputs) man.inputs.emplace_back(p);
        man.outputs = {file};
        man.config = {{"trace_length", rep_T}};
        man.wall_seconds = clock.seconds();
        write_manifest(man, dir);
      }
      return kExitOk;
    }

    if (*cal) {
      const auto j = read_json(cal_samples);
      std::vector<IntegratorSample> is;
      std::vector<NetworkSample> ns;
      try {
        for (const auto& s : j.value("integrator", nlohmann::json::array()))
          is.push_back({s.at("inputs").get<int>(), s.at("bitwidth").get<int>(), s.at("luts").get<double>()});
        for (const auto& s : j.value("network", nlohmann::json::array()))
          ns.push_back({s.at("analytic").get<double>(), s.at("measured").get<double>()});
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(cal_samples + ": " + e.what());
      }
      const auto model = calibrate(is, ns);
      const auto dir = prepare_dir(cal_c.out_dir);
      write_file(dir / "calibration.json", to_json(model).dump(2) + "\n");
      man.command = "calibrate";
      man.seed = cal_c.seed;
      man.inputs = {cal_samples};
      man.outputs = {dir / "calibration.json"};
      man.wall_seconds = clock.seconds();
      write_manifest(man, dir);
      out << to_json(model).dump(2) << "\n";
      return kExitOk;
    }
  } catch (const VerificationError& e) {
    err << "verification failed: " << e.what() << "\n";
    return kExitVerification;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "invalid data: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FeatureOverflow& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InfeasibleTopology& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TableSizeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConsistencyError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace luna
