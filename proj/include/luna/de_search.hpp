#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "luna/costmodel.hpp"
#include "luna/design_space.hpp"
#include "luna/lutnet.hpp"
#include "luna/rng.hpp"
#include "luna/trace_data.hpp"

namespace luna {

struct SearchConfig {
  int np = 75;
  double f_de = 0.7;
  double cr = 0.8;
  int g_max = 150;
  int patience = 40;
  CostWeights weights;
  CostNormalizers normalizers;
  int search_epochs = 5;
  std::size_t search_batch = 512;
  double learning_rate = 0.01;
  Optimizer optimizer = Optimizer::adam;
  double area_prune = 20000.0;
  int init_attempts = 1000;  // resamples per slot before giving up
  int jobs = 1;
  std::uint64_t seed = 0;
  SearchSpace space = SearchSpace::defaults();

  /// Throws ConfigError.
  void validate() const;
};

nlohmann::ordered_json to_json(const SearchConfig& c);

/// Candidate evaluation: a pure function of the design and its seed.
using Evaluator = std::function<CostReport(const DesignPoint&, std::uint64_t)>;

/// Cheap structural checks (feature bits, table sizes, grid) and the area
/// bound. Returns the reason for rejection, or an empty string.
std::string prune_reason(const DesignPoint& dp, const SearchConfig& cfg, const CalibrationModel& calib,
                         std::size_t trace_length);

/// Integrate, build, train, extract, measure fidelity on the test split, cost.
/// Infeasible, pruned and diverged candidates get kSentinelCost.
CostReport evaluate(const DesignPoint& dp, const Dataset& ds, const SearchConfig& cfg,
                    const CalibrationModel& calib, std::uint64_t candidate_seed);

Evaluator make_evaluator(const Dataset& ds, const SearchConfig& cfg, const CalibrationModel& calib);

/// Runs fn(k) for k in [0, n) on at most `jobs` threads. The first exception
/// thrown is rethrown after all workers stop.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct Population {
  std::vector<DesignPoint> members;
  std::vector<CostReport> reports;
  int generation = 0;
  std::size_t best = 0;
  int no_improve = 0;

  double cost(std::size_t i) const { return reports[i].composite; }
  std::size_t size() const { return members.size(); }
};

/// m = v_a + F (v_b - v_c) with a, b, c distinct, different from i.
Encoded mutate(const Population& pop, std::size_t i, double f_de, Rng& rng);
/// Binomial crossover with a forced mutant index.
Encoded crossover(const Encoded& mutant, const DesignPoint& parent, double cr, Rng& rng);

struct SearchLogRow {
  int generation = 0;
  std::size_t member = 0;
  DesignPoint design;
  CostReport report;
  bool accepted = false;
};

struct SearchResult {
  DesignPoint best;
  CostReport best_report;
  std::vector<double> trajectory;  // best cost after generation 0, 1, ...
  std::vector<SearchLogRow> log;
  int generations = 0;
  bool early_stopped = false;
};

/// Seed of the candidate in a given generation and slot.
std::uint64_t candidate_seed(std::uint64_t master, int generation, std::size_t slot);

SearchResult run_search(std::size_t trace_length, const SearchConfig& cfg, const CalibrationModel& calib,
                        const Evaluator& eval);
SearchResult run_search(const Dataset& ds, const SearchConfig& cfg, const CalibrationModel& calib);

struct ProbeRow {
  DesignPoint design;
  CostReport report;
};

std::vector<ProbeRow> random_probe(std::size_t n, std::size_t trace_length, const SearchConfig& cfg,
                                   const CalibrationModel& calib, const Evaluator& eval);
std::vector<ProbeRow> random_probe(std::size_t n, const Dataset& ds, const SearchConfig& cfg,
                                   const CalibrationModel& calib);

std::string trajectory_csv(const SearchResult& r);
std::string search_log_csv(const SearchResult& r);
std::string probe_csv(const std::vector<ProbeRow>& rows);

}  // namespace luna
