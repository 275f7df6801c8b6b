#include "luna/de_search.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "luna/error.hpp"
#include "luna/integrator.hpp"

namespace luna {

namespace {

// Seed-path tags for the search's own random streams.
constexpr std::uint64_t kInitStream = 0x696e6974;
constexpr std::uint64_t kOffspringStream = 0x6f666673;
constexpr std::uint64_t kProbeStream = 0x70726f62;
constexpr std::uint64_t kEvalStream = 0x6576616c;

bool has_window(const IntegratorConfig& c, std::size_t trace_length) {
  return c.num_windows > 0 && c.start_sample < trace_length && (trace_length - c.start_sample) / c.num_windows > 0;
}

std::string optimizer_name(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

}  // namespace

void SearchConfig::validate() const {
  if (np < 4) throw ConfigError("population size must be at least 4");
  if (!(f_de > 0.0 && f_de <= 2.0)) throw ConfigError("F_DE must be in (0, 2]");
  if (!(cr >= 0.0 && cr <= 1.0)) throw ConfigError("CR must be in [0, 1]");
  if (g_max < 0) throw ConfigError("G_max must be non-negative");
  if (patience < 1 || patience > std::max(1, g_max)) throw ConfigError("patience must be in [1, G_max]");
  if (search_epochs < 1) throw ConfigError("search epochs must be positive");
  if (search_batch < 2) throw ConfigError("search batch must be at least 2");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(area_prune > 0.0)) throw ConfigError("area prune bound must be positive");
  if (init_attempts < 1) throw ConfigError("init attempts must be positive");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (!(normalizers.area_max > 0 && normalizers.latency_max > 0 && normalizers.fidelity_floor < 1.0))
    throw ConfigError("invalid cost normalizers");
  weights.validate();
}

nlohmann::ordered_json to_json(const SearchConfig& c) {
  nlohmann::ordered_json j;
  j["np"] = c.np;
  j["f_de"] = c.f_de;
  j["cr"] = c.cr;
  j["g_max"] = c.g_max;
  j["patience"] = c.patience;
  j["weights"] = {c.weights.area, c.weights.latency, c.weights.fidelity};
  j["normalizers"] = {{"area_max", c.normalizers.area_max},
                      {"latency_max", c.normalizers.latency_max},
                      {"fidelity_floor", c.normalizers.fidelity_floor}};
  j["search_epochs"] = c.search_epochs;
  j["search_batch"] = c.search_batch;
  j["learning_rate"] = c.learning_rate;
  j["optimizer"] = optimizer_name(c.optimizer);
  j["area_prune"] = c.area_prune;
  j["init_attempts"] = c.init_attempts;
  j["seed"] = c.seed;
  j["space"] = to_json(c.space);
  return j;
}

std::string prune_reason(const DesignPoint& dp, const SearchConfig& cfg, const CalibrationModel& calib,
                         std::size_t trace_length) {
  if (!cfg.space.contains(dp)) return "off-grid";
  const auto icfg = dp.integrator();
  if (!has_window(icfg, trace_length)) return "empty window";
  const auto layout = feature_layout(icfg, trace_length);
  const auto shapes = layer_shapes(dp);
  if (layout.bits() < static_cast<std::size_t>(shapes.front().fan_in)) return "too few feature bits";
  for (const auto& s : shapes)
    if (s.input_bits() > kMaxTableInputs) return "table exceeds 16 inputs";
  const double area = area_estimate(dp, calib, trace_length).total();
  if (area > cfg.area_prune) return "area above prune bound";
  return {};
}

namespace {

// Report for a design rejected by prune_reason; hardware fields stay zero when
// the design has no valid window.
CostReport rejected_report(const DesignPoint& dp, const CalibrationModel& calib, std::size_t trace_length,
                           const std::string& why) {
  CostReport r;
  if (has_window(dp.integrator(), trace_length)) r = hardware_report(dp, calib, trace_length);
  r.composite = kSentinelCost;
  r.status = why == "area above prune bound" ? EvalStatus::pruned : EvalStatus::infeasible;
  r.note = why;
  return r;
}

}  // namespace

CostReport evaluate(const DesignPoint& dp, const Dataset& ds, const SearchConfig& cfg,
                    const CalibrationModel& calib, std::uint64_t candidate_seed) {
  if (const auto why = prune_reason(dp, cfg, calib, ds.meta.trace_length); !why.empty())
    return rejected_report(dp, calib, ds.meta.trace_length, why);
  CostReport r = hardware_report(dp, calib, ds.meta.trace_length);
  r.composite = kSentinelCost;
  const auto icfg = dp.integrator();
  FeatureSet train_set;
  FeatureSet test_set;
  try {
    train_set = featurize(ds, ds.train_indices, icfg);
    test_set = featurize(ds, ds.test_indices, icfg);
  } catch (const FeatureOverflow& e) {
    r.status = EvalStatus::infeasible;
    r.note = e.what();
    return r;
  }
  NetTopology net;
  try {
    net = build_topology(dp, feature_layout(icfg, ds.meta.trace_length), derive_seed(candidate_seed, {0}));
  } catch (const InfeasibleTopology& e) {
    r.status = EvalStatus::infeasible;
    r.note = e.what();
    return r;
  } catch (const TableSizeError& e) {
    r.status = EvalStatus::infeasible;
    r.note = e.what();
    return r;
  }
  TrainOptions opt;
  opt.epochs = cfg.search_epochs;
  opt.batch_size = cfg.search_batch;
  opt.learning_rate = cfg.learning_rate;
  opt.optimizer = cfg.optimizer;
  opt.seed = derive_seed(candidate_seed, {1});
  TrainedNet trained;
  try {
    trained = train(net, train_set, opt);
  } catch (const TrainingError& e) {
    r.status = EvalStatus::diverged;
    r.note = e.what();
    return r;
  }
  const auto ttn = extract_tables(trained);
  r.fidelity = fidelity(ttn, test_set);
  r.composite = composite_cost(r.area_luts, r.latency_cycles, r.fidelity, cfg.weights, cfg.normalizers);
  r.status = EvalStatus::ok;
  return r;
}

Evaluator make_evaluator(const Dataset& ds, const SearchConfig& cfg, const CalibrationModel& calib) {
  return [&ds, cfg, calib](const DesignPoint& dp, std::uint64_t seed) { return evaluate(dp, ds, cfg, calib, seed); };
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n || failed.load()) return;
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  const auto count = std::min(workers, n);
  pool.reserve(count);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

Encoded mutate(const Population& pop, std::size_t i, double f_de, Rng& rng) {
  const std::size_t np = pop.size();
  if (np < 4) throw ConfigError("mutation needs at least 4 members");
  std::size_t a, b, c;
  do a = rng.below(np); while (a == i);
  do b = rng.below(np); while (b == i || b == a);
  do c = rng.below(np); while (c == i || c == a || c == b);
  const auto va = encode(pop.members[a]);
  const auto vb = encode(pop.members[b]);
  const auto vc = encode(pop.members[c]);
  Encoded m{};
  for (std::size_t j = 0; j < kFieldCount; ++j) m[j] = va[j] + f_de * (vb[j] - vc[j]);
  return m;
}

Encoded crossover(const Encoded& mutant, const DesignPoint& parent, double cr, Rng& rng) {
  const auto p = encode(parent);
  const std::size_t k = rng.below(kFieldCount);
  Encoded o{};
  for (std::size_t j = 0; j < kFieldCount; ++j) {
    const double u = rng.uniform();
    o[j] = (j == k || u < cr) ? mutant[j] : p[j];
  }
  return o;
}

std::uint64_t candidate_seed(std::uint64_t master, int generation, std::size_t slot) {
  return derive_seed(master, {kEvalStream, static_cast<std::uint64_t>(generation), slot});
}

namespace {

void evaluate_all(const std::vector<DesignPoint>& designs, int generation, const SearchConfig& cfg,
                  const Evaluator& eval, std::vector<CostReport>& out) {
  out.assign(designs.size(), CostReport{});
  parallel_for(designs.size(), cfg.jobs, [&](std::size_t k) {
    out[k] = eval(designs[k], candidate_seed(cfg.seed, generation, k));
  });
}

std::size_t argmin(const std::vector<CostReport>& reports) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < reports.size(); ++k)
    if (reports[k].composite < reports[best].composite) best = k;
  return best;
}

}  // namespace

SearchResult run_search(std::size_t trace_length, const SearchConfig& cfg, const CalibrationModel& calib,
                        const Evaluator& eval) {
  cfg.validate();
  const auto np = static_cast<std::size_t>(cfg.np);

  Population pop;
  Rng init_rng(derive_seed(cfg.seed, {kInitStream}));
  for (std::size_t k = 0; k < np; ++k) {
    bool found = false;
    for (int attempt = 0; attempt < cfg.init_attempts && !found; ++attempt) {
      auto dp = sample_design(init_rng, cfg.space);
      if (prune_reason(dp, cfg, calib, trace_length).empty()) {
        pop.members.push_back(dp);
        found = true;
      }
    }
    if (!found)
      throw SearchError("no feasible design found after " + std::to_string(cfg.init_attempts) +
                        " samples; the search space is empty after pruning");
  }

  SearchResult result;
  evaluate_all(pop.members, 0, cfg, eval, pop.reports);
  for (std::size_t k = 0; k < np; ++k) result.log.push_back({0, k, pop.members[k], pop.reports[k], true});
  pop.best = argmin(pop.reports);
  result.trajectory.push_back(pop.cost(pop.best));

  for (int g = 1; g <= cfg.g_max; ++g) {
    Rng rng(derive_seed(cfg.seed, {kOffspringStream, static_cast<std::uint64_t>(g)}));
    std::vector<DesignPoint> trials(np);
    for (std::size_t i = 0; i < np; ++i) {
      const auto m = mutate(pop, i, cfg.f_de, rng);
      trials[i] = sanitize(crossover(m, pop.members[i], cfg.cr, rng), cfg.space);
    }
    std::vector<CostReport> trial_reports;
    evaluate_all(trials, g, cfg, eval, trial_reports);

    const double before = pop.cost(pop.best);
    for (std::size_t i = 0; i < np; ++i) {
      const bool accept = trial_reports[i].composite < pop.reports[i].composite;
      result.log.push_back({g, i, trials[i], trial_reports[i], accept});
      if (accept) {
        pop.members[i] = trials[i];
        pop.reports[i] = trial_reports[i];
      }
    }
    pop.best = argmin(pop.reports);
    pop.generation = g;
    result.trajectory.push_back(pop.cost(pop.best));
    pop.no_improve = pop.cost(pop.best) < before ? 0 : pop.no_improve + 1;
    if (pop.no_improve >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  result.generations = pop.generation;
  result.best = pop.members[pop.best];
  result.best_report = pop.reports[pop.best];
  return result;
}

SearchResult run_search(const Dataset& ds, const SearchConfig& cfg, const CalibrationModel& calib) {
  const auto c0 = label_counts(ds, ds.train_indices);
  const auto c1 = label_counts(ds, ds.test_indices);
  if (c0[0] == 0 || c0[1] == 0 || c1[0] == 0 || c1[1] == 0)
    throw ConfigError("both classes must be present in the train and test splits");
  return run_search(ds.meta.trace_length, cfg, calib, make_evaluator(ds, cfg, calib));
}

std::vector<ProbeRow> random_probe(std::size_t n, std::size_t trace_length, const SearchConfig& cfg,
                                   const CalibrationModel& calib, const Evaluator& eval) {
  if (n < 1) throw ConfigError("probe count must be at least 1");
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, {kProbeStream}));
  std::vector<ProbeRow> rows(n);
  for (auto& row : rows) row.design = sample_design(rng, cfg.space);
  parallel_for(n, cfg.jobs, [&](std::size_t k) {
    const auto& dp = rows[k].design;
    if (const auto why = prune_reason(dp, cfg, calib, trace_length); !why.empty()) {
      rows[k].report = rejected_report(dp, calib, trace_length, why);
      return;
    }
    rows[k].report = eval(dp, derive_seed(cfg.seed, {kProbeStream, k}));
  });
  return rows;
}

std::vector<ProbeRow> random_probe(std::size_t n, const Dataset& ds, const SearchConfig& cfg,
                                   const CalibrationModel& calib) {
  return random_probe(n, ds.meta.trace_length, cfg, calib, make_evaluator(ds, cfg, calib));
}

std::string trajectory_csv(const SearchResult& r) {
  std::ostringstream os;
  os << "generation,best_cost\n";
  for (std::size_t g = 0; g < r.trajectory.size(); ++g) os << g << ',' << format_double(r.trajectory[g]) << '\n';
  return os.str();
}

namespace {

std::string design_columns() {
  std::string h;
  for (std::size_t f = 0; f < kFieldCount; ++f) h += "," + std::string(field_name(static_cast<Field>(f)));
  return h;
}

std::string design_values(const DesignPoint& dp) {
  std::string s;
  for (double v : encode(dp)) s += "," + std::to_string(static_cast<long long>(v));
  return s;
}

}  // namespace

std::string search_log_csv(const SearchResult& r) {
  std::ostringstream os;
  os << "generation,member,cost,area,latency,fidelity,status,accepted" << design_columns() << '\n';
  for (const auto& row : r.log) {
    os << row.generation << ',' << row.member << ',' << format_double(row.report.composite) << ','
       << format_double(row.report.area_luts) << ',' << row.report.latency_cycles << ','
       << format_double(row.report.fidelity) << ',' << to_string(row.report.status) << ','
       << (row.accepted ? 1 : 0) << design_values(row.design) << '\n';
  }
  return os.str();
}

std::string probe_csv(const std::vector<ProbeRow>& rows) {
  std::ostringstream os;
  os << "probe,status,area,integrator_area,network_area,latency,fidelity,composite" << design_columns() << '\n';
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k].report;
    os << k << ',' << to_string(r.status) << ',' << format_double(r.area_luts) << ','
       << format_double(r.integrator_luts) << ',' << format_double(r.network_luts) << ',' << r.latency_cycles << ','
       << format_double(r.fidelity) << ',' << format_double(r.composite) << design_values(rows[k].design) << '\n';
  }
  return os.str();
}

}  // namespace luna
