#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "luna/design_space.hpp"

namespace luna {

struct CostWeights {
  double area = 1.0 / 3;
  double latency = 1.0 / 3;
  double fidelity = 1.0 / 3;

  /// Throws ConfigError unless all weights are non-negative and sum to 1 (1e-9).
  void validate() const;

  static CostWeights area_optimized() { return {0.8, 0.1, 0.1}; }
  static CostWeights latency_optimized() { return {0.1, 0.8, 0.1}; }
  static CostWeights fidelity_optimized() { return {0.1, 0.1, 0.8}; }
};

struct CostNormalizers {
  double area_max = 20000.0;
  double latency_max = 14.0;
  double fidelity_floor = 0.90;
};

/// Scalar objective. Values above 1 are kept; no clamping.
double composite_cost(double area_luts, double latency_cycles, double fidelity, const CostWeights& w,
                      const CostNormalizers& norm = {});

/// LUTs for an X-input, Y-output table: Y * max(1, (2^(X-4) - (-1)^X) / 3).
double lut_cost(int inputs, int outputs);

/// Default integrator model: an N-input tree of b-bit operands, one LUT per
/// operand bit per adder, operands growing one bit per level.
double adder_tree_luts(int inputs, int bitwidth);

struct CalibrationModel {
  /// Least-squares coefficients over ((N-1)*b, N-1); empty means the analytic tree model.
  std::optional<std::array<double, 2>> integrator_coefficients;
  double network_correction = 1.0;

  double integrator_tree_luts(int inputs, int bitwidth) const;
};

struct AreaBreakdown {
  double integrator = 0.0;
  double network = 0.0;
  double total() const { return integrator + network; }
};

/// Sum of per-neuron table costs, before the correction factor.
double network_analytic_luts(const DesignPoint& dp);

AreaBreakdown area_estimate(const DesignPoint& dp, const CalibrationModel& calib, std::size_t trace_length);

/// Adder-tree depth plus one cycle per NEQ layer.
int latency_estimate(const DesignPoint& dp, std::size_t trace_length);

inline constexpr int kOutputSaveCycles = 2;
int deployed_latency(const DesignPoint& dp, std::size_t trace_length);

struct IntegratorSample {
  int inputs = 0;
  int bitwidth = 0;
  double luts = 0.0;
};

struct NetworkSample {
  double analytic_luts = 0.0;
  double measured_luts = 0.0;
};

/// Throws CalibrationError on too few samples or a rank-deficient design matrix.
CalibrationModel calibrate(std::span<const IntegratorSample> integrator, std::span<const NetworkSample> network);

nlohmann::ordered_json to_json(const CalibrationModel& c);
CalibrationModel calibration_from_json(const nlohmann::json& j);

enum class EvalStatus { ok, pruned, infeasible, diverged };
std::string to_string(EvalStatus s);

/// Larger than any feasible composite; assigned to candidates that lose selection unconditionally.
inline constexpr double kSentinelCost = 1.0e9;

struct CostReport {
  EvalStatus status = EvalStatus::ok;
  double area_luts = 0.0;
  double integrator_luts = 0.0;
  double network_luts = 0.0;
  int latency_cycles = 0;
  int integrator_cycles = 0;
  int network_stages = 0;
  double fidelity = 0.0;
  double composite = kSentinelCost;
  std::string note;

  int deployed_latency_cycles() const { return latency_cycles + kOutputSaveCycles; }
  friend bool operator==(const CostReport&, const CostReport&) = default;
};

/// Fills area and latency fields; fidelity and composite are left to the caller.
CostReport hardware_report(const DesignPoint& dp, const CalibrationModel& calib, std::size_t trace_length);

nlohmann::ordered_json to_json(const CostReport& r);
CostReport report_from_json(const nlohmann::json& j);

/// Fixed column order of the report CSV.
std::string report_csv_header();
std::string report_csv_row(const std::string& name, const CostReport& r);

/// Round-trip exact decimal for a double.
std::string format_double(double v);

}  // namespace luna
