#include "luna/costmodel.hpp"

#include <cmath>
#include <cstdio>

#include <Eigen/Dense>

#include "luna/error.hpp"
#include "luna/integrator.hpp"
#include "luna/lutnet.hpp"

namespace luna {

void CostWeights::validate() const {
  if (!(area >= 0 && latency >= 0 && fidelity >= 0)) throw ConfigError("cost weights must be non-negative");
  if (std::abs(area + latency + fidelity - 1.0) > 1e-9) throw ConfigError("cost weights must sum to 1");
}

double composite_cost(double area_luts, double latency_cycles, double fidelity, const CostWeights& w,
                      const CostNormalizers& norm) {
  return w.area * (area_luts / norm.area_max) + w.latency * (latency_cycles / norm.latency_max) +
         w.fidelity * (1.0 - fidelity) / (1.0 - norm.fidelity_floor);
}

double lut_cost(int inputs, int outputs) {
  const double sign = (inputs % 2 == 0) ? 1.0 : -1.0;  // (-1)^X
  const double per_bit = (std::ldexp(1.0, inputs - 4) - sign) / 3.0;
  return outputs * std::max(1.0, per_bit);
}

double adder_tree_luts(int inputs, int bitwidth) {
  double luts = 0.0;
  int width = bitwidth;
  for (int n = inputs; n > 1; n = (n + 1) / 2, ++width) luts += static_cast<double>(n / 2) * width;
  return luts;
}

double CalibrationModel::integrator_tree_luts(int inputs, int bitwidth) const {
  if (!integrator_coefficients) return adder_tree_luts(inputs, bitwidth);
  const double n1 = inputs - 1;
  const auto& c = *integrator_coefficients;
  return std::max(0.0, c[0] * n1 * bitwidth + c[1] * n1);
}

double network_analytic_luts(const DesignPoint& dp) {
  double luts = 0.0;
  for (const auto& s : layer_shapes(dp)) luts += s.neurons * lut_cost(s.input_bits(), s.output_bits);
  return luts;
}

AreaBreakdown area_estimate(const DesignPoint& dp, const CalibrationModel& calib, std::size_t trace_length) {
  const auto cfg = dp.integrator();
  const auto len = static_cast<int>(window_length(cfg, trace_length));
  AreaBreakdown a;
  a.integrator = 2.0 * dp.num_windows * calib.integrator_tree_luts(len, kAdcBits - dp.shift_m);
  a.network = calib.network_correction * network_analytic_luts(dp);
  return a;
}

int latency_estimate(const DesignPoint& dp, std::size_t trace_length) {
  return integrator_cycles(dp.integrator(), trace_length) + dp.stage_count();
}

int deployed_latency(const DesignPoint& dp, std::size_t trace_length) {
  return latency_estimate(dp, trace_length) + kOutputSaveCycles;
}

CalibrationModel calibrate(std::span<const IntegratorSample> integrator, std::span<const NetworkSample> network) {
  if (integrator.empty() && network.empty()) throw CalibrationError("no calibration samples");
  CalibrationModel model;
  if (!integrator.empty()) {
    if (integrator.size() < 2) throw CalibrationError("integrator regression needs at least 2 samples");
    Eigen::MatrixXd A(static_cast<Eigen::Index>(integrator.size()), 2);
    Eigen::VectorXd y(static_cast<Eigen::Index>(integrator.size()));
    for (std::size_t k = 0; k < integrator.size(); ++k) {
      const auto& s = integrator[k];
      const auto row = static_cast<Eigen::Index>(k);
      A(row, 0) = double(s.inputs - 1) * s.bitwidth;
      A(row, 1) = double(s.inputs - 1);
      y(row) = s.luts;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < 2) throw CalibrationError("integrator design matrix is rank-deficient");
    const Eigen::VectorXd c = qr.solve(y);
    model.integrator_coefficients = std::array<double, 2>{c(0), c(1)};
  }
  if (!network.empty()) {
    double sum = 0.0;
    for (const auto& s : network) {
      if (!(s.analytic_luts > 0.0)) throw CalibrationError("network sample has non-positive analytic LUTs");
      sum += s.measured_luts / s.analytic_luts;
    }
    model.network_correction = sum / static_cast<double>(network.size());
    if (!(model.network_correction >= 0.0)) throw CalibrationError("negative correction factor");
  }
  return model;
}

nlohmann::ordered_json to_json(const CalibrationModel& c) {
  nlohmann::ordered_json j;
  if (c.integrator_coefficients)
    j["integrator_coefficients"] = *c.integrator_coefficients;
  else
    j["integrator_coefficients"] = nullptr;
  j["network_correction"] = c.network_correction;
  return j;
}

CalibrationModel calibration_from_json(const nlohmann::json& j) {
  try {
    CalibrationModel c;
    if (j.contains("integrator_coefficients") && !j.at("integrator_coefficients").is_null())
      c.integrator_coefficients = j.at("integrator_coefficients").get<std::array<double, 2>>();
    c.network_correction = j.value("network_correction", 1.0);
    if (!(c.network_correction >= 0.0)) throw ConfigError("network_correction must be non-negative");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("calibration JSON: ") + e.what());
  }
}

std::string to_string(EvalStatus s) {
  switch (s) {
    case EvalStatus::ok: return "ok";
    case EvalStatus::pruned: return "pruned";
    case EvalStatus::infeasible: return "infeasible";
    case EvalStatus::diverged: return "diverged";
  }
  return "unknown";
}

namespace {

EvalStatus status_from_string(const std::string& s) {
  if (s == "ok") return EvalStatus::ok;
  if (s == "pruned") return EvalStatus::pruned;
  if (s == "infeasible") return EvalStatus::infeasible;
  if (s == "diverged") return EvalStatus::diverged;
  throw FormatError("unknown status " + s);
}

}  // namespace

CostReport hardware_report(const DesignPoint& dp, const CalibrationModel& calib, std::size_t trace_length) {
  CostReport r;
  const auto area = area_estimate(dp, calib, trace_length);
  r.integrator_luts = area.integrator;
  r.network_luts = area.network;
  r.area_luts = area.total();
  r.integrator_cycles = integrator_cycles(dp.integrator(), trace_length);
  r.network_stages = dp.stage_count();
  r.latency_cycles = r.integrator_cycles + r.network_stages;
  return r;
}

nlohmann::ordered_json to_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["status"] = to_string(r.status);
  j["area_luts"] = r.area_luts;
  j["integrator_luts"] = r.integrator_luts;
  j["network_luts"] = r.network_luts;
  j["latency_cycles"] = r.latency_cycles;
  j["integrator_cycles"] = r.integrator_cycles;
  j["network_stages"] = r.network_stages;
  j["deployed_latency_cycles"] = r.deployed_latency_cycles();
  j["fidelity"] = r.fidelity;
  j["composite"] = r.composite;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

CostReport report_from_json(const nlohmann::json& j) {
  try {
    CostReport r;
    r.status = status_from_string(j.at("status").get<std::string>());
    r.area_luts = j.at("area_luts").get<double>();
    r.integrator_luts = j.at("integrator_luts").get<double>();
    r.network_luts = j.at("network_luts").get<double>();
    r.latency_cycles = j.at("latency_cycles").get<int>();
    r.integrator_cycles = j.at("integrator_cycles").get<int>();
    r.network_stages = j.at("network_stages").get<int>();
    r.fidelity = j.at("fidelity").get<double>();
    r.composite = j.at("composite").get<double>();
    r.note = j.value("note", std::string{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("cost report JSON: ") + e.what());
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string report_csv_header() {
  return "name,status,area_luts,integrator_luts,network_luts,latency_cycles,deployed_latency_cycles,fidelity,"
         "composite";
}

std::string report_csv_row(const std::string& name, const CostReport& r) {
  return name + "," + to_string(r.status) + "," + format_double(r.area_luts) + "," +
         format_double(r.integrator_luts) + "," + format_double(r.network_luts) + "," +
         std::to_string(r.latency_cycles) + "," + std::to_string(r.deployed_latency_cycles()) + "," +
         format_double(r.fidelity) + "," + format_double(r.composite);
}

}  // namespace luna
