#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "luna/rtl_emit.hpp"
#include "luna/trace_data.hpp"

namespace luna {

/// Elaborated netlist of the restricted synchronous HDL dialect produced by
/// emit(): ANSI-port modules, wire/reg declarations, continuous assigns,
/// a single clock edge with nonblocking assigns, exhaustive case functions,
/// named-port instances, +, >>>, bit/part selects, concatenation, $signed and
/// sized literals. Widths are limited to 64 bits. Throws ParseError otherwise.
class Netlist {
 public:
  static Netlist parse(std::span<const std::string> sources, const std::string& top);

  struct Port {
    std::string name;
    int width = 1;
    bool is_signed = false;
    bool is_input = true;
    int signal = -1;
  };
  const std::vector<Port>& ports() const;
  const Port& port(const std::string& name) const;  // throws InterfaceError

  struct Impl;
  const Impl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const Impl> impl_;
};

/// Cycle-accurate simulation state; registers start at zero.
class Simulator {
 public:
  explicit Simulator(const Netlist& nl);

  void set(const std::string& input, std::int64_t value);
  std::int64_t get(const std::string& port) const;
  /// Recomputes all combinational signals.
  void settle();
  /// One rising clock edge followed by settle().
  void tick();
  void reset();

 private:
  const Netlist* nl_;
  std::vector<std::int64_t> values_;
};

struct SimResult {
  int class_bit = 0;
  int cycles = 0;  // clock edges from valid_in to valid_out
};

/// Presents the trace samples and valid_in for one cycle, then clocks until
/// valid_out. Throws InterfaceError if the ports do not fit the trace or
/// valid_out never rises within max_cycles.
SimResult interpret(const Netlist& nl, const TraceRecord& trace, int max_cycles = 1024);
SimResult interpret(const HdlDesign& hdl, const TraceRecord& trace);

struct EquivalenceReport {
  std::size_t checked = 0;
  std::size_t class_mismatches = 0;
  std::size_t cycle_mismatches = 0;
  std::size_t skipped_overflow = 0;  // traces whose features overflow the word width
  bool passed() const { return checked > 0 && class_mismatches == 0 && cycle_mismatches == 0; }
};

/// Compares interpret(hdl) against infer(ttn, integrate(trace)) and the
/// emitted latency on every trace.
EquivalenceReport check_equivalence(const HdlDesign& hdl, const TruthTableNet& ttn, const IntegratorConfig& cfg,
                                    std::span<const TraceRecord> traces);

/// Dataset records drawn uniformly with per-sample uniform jitter in
/// [-jitter, jitter], clamped to the 14-bit range.
std::vector<TraceRecord> probe_traces(const Dataset& ds, std::size_t n, int jitter, std::uint64_t seed);

}  // namespace luna
