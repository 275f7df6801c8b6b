#include "luna/rtl_emit.hpp"

#include <cctype>
#include <cstdio>
#include <sstream>

#include "luna/error.hpp"

namespace luna {

namespace {

bool valid_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

std::string range(int width) { return width > 1 ? "[" + std::to_string(width - 1) + ":0] " : ""; }

std::string sample_port(char ch, std::size_t n) { return std::string("s_") + ch + "_" + std::to_string(n); }

std::string hex_literal(int width, std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%d'h%0*llx", width, (width + 3) / 4, static_cast<unsigned long long>(v));
  return buf;
}

void check_consistency(const DesignPoint& dp, const TruthTableNet& ttn, const IntegratorConfig& cfg,
                       std::size_t trace_length) {
  if (!(cfg == dp.integrator())) throw ConsistencyError("integrator config does not match the design point");
  if (!(ttn.input == feature_layout(cfg, trace_length)))
    throw ConsistencyError("table net input layout does not match the integrator features");
  const auto shapes = layer_shapes(dp);
  if (ttn.layers.size() != shapes.size()) throw ConsistencyError("table net layer count does not match the design");
  for (std::size_t j = 0; j < shapes.size(); ++j) {
    const auto& l = ttn.layers[j];
    if (!(l.shape == shapes[j]))
      throw ConsistencyError("layer " + std::to_string(j) + " shape does not match the design");
    const std::size_t preds = j == 0 ? ttn.input.bits() : static_cast<std::size_t>(shapes[j - 1].neurons);
    if (l.connectivity.size() != static_cast<std::size_t>(l.shape.neurons) ||
        l.tables.size() != static_cast<std::size_t>(l.shape.neurons))
      throw ConsistencyError("layer " + std::to_string(j) + " neuron count mismatch");
    const std::size_t entries = std::size_t{1} << l.shape.input_bits();
    for (int k = 0; k < l.shape.neurons; ++k) {
      if (l.tables[k].size() != entries) throw ConsistencyError("truth table size mismatch");
      if (l.connectivity[k].size() != static_cast<std::size_t>(l.shape.fan_in))
        throw ConsistencyError("fan-in mismatch");
      for (auto c : l.connectivity[k])
        if (c >= preds) throw ConsistencyError("connection index out of range");
      for (auto v : l.tables[k])
        if (v >> l.shape.output_bits) throw ConsistencyError("table entry wider than the output bits");
    }
  }
}

std::string tree_name(std::size_t w, char ch, int level, std::size_t k) {
  return "a" + std::to_string(w) + ch + "_" + std::to_string(level) + "_" + std::to_string(k);
}

std::string emit_integrator(const std::string& mod, const IntegratorConfig& cfg, std::size_t trace_length,
                            int word_width) {
  const auto len = window_length(cfg, trace_length);
  const int levels = ceil_log2(len);
  const int w0 = kAdcBits - cfg.shift_m;
  const int ws = tree_sum_width(cfg, trace_length);
  std::ostringstream os;
  os << "// " << cfg.num_windows << " window(s) of " << len << " samples from sample " << cfg.start_sample
     << ", shift_m " << cfg.shift_m << ", shift_n " << cfg.shift_n << "\n";
  os << "module " << mod << " (\n  input wire clk";
  for (std::size_t n = cfg.start_sample; n < cfg.start_sample + cfg.num_windows * len; ++n)
    os << ",\n  input wire signed [13:0] " << sample_port('i', n) << ",\n  input wire signed [13:0] "
       << sample_port('q', n);
  for (std::size_t f = 0; f < 2 * cfg.num_windows; ++f) os << ",\n  output wire signed " << range(word_width) << "f" << f;
  os << "\n);\n";

  std::ostringstream regs;
  for (std::size_t w = 0; w < cfg.num_windows; ++w) {
    for (char ch : {'i', 'q'}) {
      os << "\n  // window " << w << " " << (ch == 'i' ? "I" : "Q") << "\n";
      for (std::size_t k = 0; k < len; ++k)
        os << "  wire signed " << range(w0) << tree_name(w, ch, 0, k) << " = "
           << sample_port(ch, cfg.start_sample + w * len + k) << " >>> " << cfg.shift_m << ";\n";
      std::size_t n = len;
      for (int level = 1; level <= levels; ++level) {
        const std::size_t next = (n + 1) / 2;
        for (std::size_t k = 0; k < next; ++k) {
          const auto dst = tree_name(w, ch, level, k);
          os << "  reg signed " << range(w0 + level) << dst << ";\n";
          if (2 * k + 1 < n)
            regs << "    " << dst << " <= " << tree_name(w, ch, level - 1, 2 * k) << " + "
                 << tree_name(w, ch, level - 1, 2 * k + 1) << ";\n";
          else
            regs << "    " << dst << " <= " << tree_name(w, ch, level - 1, 2 * k) << ";\n";
        }
        n = next;
      }
      const std::size_t f = 2 * w + (ch == 'q' ? 1 : 0);
      os << "  wire signed " << range(ws) << "sum" << f << " = " << tree_name(w, ch, levels, 0) << ";\n";
      os << "  assign f" << f << " = sum" << f << " >>> " << cfg.shift_n << ";\n";
    }
  }
  if (levels > 0) os << "\n  always @(posedge clk) begin\n" << regs.str() << "  end\n";
  os << "endmodule\n";
  return os.str();
}

std::string element_bit(const TruthTableNet& ttn, std::size_t layer, std::uint32_t element, int bit) {
  if (layer == 0) {
    const auto ww = static_cast<std::uint32_t>(ttn.input.word_width);
    return "f" + std::to_string(element / ww) + "[" + std::to_string(element % ww) + "]";
  }
  return "l" + std::to_string(layer - 1) + "_" + std::to_string(element) + "[" + std::to_string(bit) + "]";
}

std::string emit_lutnet(const std::string& mod, const TruthTableNet& ttn) {
  std::ostringstream os;
  const int out_bits = ttn.output_bits();
  os << "module " << mod << " (\n  input wire clk";
  for (std::size_t f = 0; f < ttn.input.words; ++f)
    os << ",\n  input wire signed " << range(ttn.input.word_width) << "f" << f;
  os << ",\n  output wire " << range(out_bits) << "code\n);\n";

  std::ostringstream regs;
  for (std::size_t j = 0; j < ttn.layers.size(); ++j) {
    const auto& layer = ttn.layers[j];
    const int x = layer.shape.input_bits();
    const int y = layer.shape.output_bits;
    const int b = layer.shape.element_bits;
    os << "\n  // layer " << j << ": " << layer.shape.neurons << " x " << x << "-in " << y << "-out\n";
    for (std::size_t k = 0; k < static_cast<std::size_t>(layer.shape.neurons); ++k) {
      const std::string fn = "t" + std::to_string(j) + "_" + std::to_string(k);
      const std::string reg = "l" + std::to_string(j) + "_" + std::to_string(k);
      os << "  function " << range(y) << fn << ";\n    input " << range(x) << "idx;\n    case (idx)\n";
      const auto& table = layer.tables[k];
      for (std::size_t p = 0; p < table.size(); ++p)
        os << "      " << hex_literal(x, p) << ": " << fn << " = " << y << "'d" << int(table[p]) << ";\n";
      os << "    endcase\n  endfunction\n";
      os << "  reg " << range(y) << reg << ";\n";
      const auto& conn = layer.connectivity[k];
      regs << "    " << reg << " <= " << fn << "({";
      bool first = true;
      for (std::size_t e = conn.size(); e-- > 0;) {
        for (int t = b - 1; t >= 0; --t) {
          regs << (first ? "" : ", ") << element_bit(ttn, j, conn[e], t);
          first = false;
        }
      }
      regs << "});\n";
    }
  }
  os << "\n  always @(posedge clk) begin\n" << regs.str() << "  end\n";
  os << "  assign code = l" << ttn.layers.size() - 1 << "_0;\n";
  os << "endmodule\n";
  return os.str();
}

std::string emit_top(const std::string& name, const IntegratorConfig& cfg, std::size_t trace_length,
                     const TruthTableNet& ttn, int latency) {
  const auto len = window_length(cfg, trace_length);
  const std::size_t first = cfg.start_sample;
  const std::size_t last = cfg.start_sample + cfg.num_windows * len;
  const int out_bits = ttn.output_bits();
  std::ostringstream os;
  os << "// latency " << latency << " cycles from valid_in to valid_out\n";
  os << "module " << name << "_top (\n  input wire clk,\n  input wire valid_in";
  for (std::size_t n = first; n < last; ++n)
    os << ",\n  input wire signed [13:0] " << sample_port('i', n) << ",\n  input wire signed [13:0] "
       << sample_port('q', n);
  os << ",\n  output wire class_out,\n  output wire valid_out\n);\n";
  for (std::size_t f = 0; f < ttn.input.words; ++f)
    os << "  wire signed " << range(ttn.input.word_width) << "f" << f << ";\n";
  os << "  wire " << range(out_bits) << "code;\n\n";

  os << "  " << name << "_integrator u_integrator (\n    .clk(clk)";
  for (std::size_t n = first; n < last; ++n)
    for (char ch : {'i', 'q'}) os << ",\n    ." << sample_port(ch, n) << "(" << sample_port(ch, n) << ")";
  for (std::size_t f = 0; f < ttn.input.words; ++f) os << ",\n    .f" << f << "(f" << f << ")";
  os << "\n  );\n\n";

  os << "  " << name << "_lutnet u_lutnet (\n    .clk(clk)";
  for (std::size_t f = 0; f < ttn.input.words; ++f) os << ",\n    .f" << f << "(f" << f << ")";
  os << ",\n    .code(code)\n  );\n\n";

  for (int d = 1; d <= latency; ++d) os << "  reg v" << d << ";\n";
  os << "  always @(posedge clk) begin\n    v1 <= valid_in;\n";
  for (int d = 2; d <= latency; ++d) os << "    v" << d << " <= v" << d - 1 << ";\n";
  os << "  end\n";
  os << "  assign valid_out = v" << latency << ";\n";
  os << "  assign class_out = code[" << out_bits - 1 << "];\n";
  os << "endmodule\n";
  return os.str();
}

}  // namespace

std::vector<std::string> HdlDesign::sources() const {
  std::vector<std::string> out;
  for (const auto& f : files) out.push_back(f.second);
  return out;
}

HdlDesign emit(const DesignPoint& dp, const TruthTableNet& ttn, const IntegratorConfig& cfg,
               std::size_t trace_length, const std::string& name) {
  if (!valid_identifier(name)) throw ConfigError("module name must be a plain identifier: " + name);
  check_consistency(dp, ttn, cfg, trace_length);

  HdlDesign d;
  d.name = name;
  d.top = name + "_top";
  d.integrator_cycles = integrator_cycles(cfg, trace_length);
  d.network_stages = static_cast<int>(ttn.layers.size());
  d.latency = d.integrator_cycles + d.network_stages;
  d.files.emplace_back(name + "_integrator.v",
                       emit_integrator(name + "_integrator", cfg, trace_length, ttn.input.word_width));
  d.files.emplace_back(name + "_lutnet.v", emit_lutnet(name + "_lutnet", ttn));
  d.files.emplace_back(name + "_top.v", emit_top(name, cfg, trace_length, ttn, d.latency));

  auto& m = d.manifest;
  m["name"] = name;
  m["top"] = d.top;
  m["design"] = to_json(dp);
  m["trace_length"] = trace_length;
  m["latency_cycles"] = d.latency;
  m["integrator_cycles"] = d.integrator_cycles;
  m["network_stages"] = d.network_stages;
  char sum[20];
  std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(table_checksum(ttn)));
  m["table_checksum"] = sum;
  auto files = nlohmann::ordered_json::array();
  for (const auto& f : d.files) {
    std::snprintf(sum, sizeof sum, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(f.second.data(), f.second.size())));
    files.push_back({{"file", f.first}, {"fnv1a64", sum}});
  }
  m["files"] = files;
  return d;
}

std::vector<std::filesystem::path> write_hdl(const HdlDesign& d, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> paths;
  for (const auto& [file, text] : d.files) {
    paths.push_back(dir / file);
    write_file(paths.back(), text);
  }
  paths.push_back(dir / (d.name + "_hdl.json"));
  write_file(paths.back(), d.manifest.dump(2) + "\n");
  return paths;
}

}  // namespace luna
