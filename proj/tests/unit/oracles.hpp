#pragma once

#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "luna/integrator.hpp"

namespace luna::test {

using BigInt = boost::multiprecision::cpp_int;

/// floor(a / 2^k) by division, independent of shift semantics.
inline BigInt floor_div_pow2(const BigInt& a, unsigned k) {
  const BigInt d = BigInt(1) << k;
  BigInt q = a / d;  // truncates toward zero
  if (a < 0 && q * d != a) q -= 1;
  return q;
}

struct OracleFeatures {
  std::vector<BigInt> words;
  int width = 0;
  bool fits = true;
};

/// Width-unlimited reference of the integrator formula.
inline OracleFeatures integrate_oracle(const TraceRecord& t, const IntegratorConfig& cfg) {
  const std::size_t T = t.i_samples.size();
  const std::size_t len = (T - cfg.start_sample) / cfg.num_windows;
  std::size_t lg = 0;
  while ((std::size_t{1} << lg) < len) ++lg;
  int width = 14 - cfg.shift_m + static_cast<int>(lg) - cfg.shift_n;
  width = std::max(1, std::min(16, width));
  OracleFeatures out;
  out.width = width;
  const BigInt lo = -(BigInt(1) << (width - 1));
  const BigInt hi = (BigInt(1) << (width - 1)) - 1;
  for (std::size_t w = 0; w < cfg.num_windows; ++w) {
    for (const auto* ch : {&t.i_samples, &t.q_samples}) {
      BigInt acc = 0;
      for (std::size_t s = cfg.start_sample + w * len; s < cfg.start_sample + (w + 1) * len; ++s)
        acc += floor_div_pow2(BigInt((*ch)[s]), static_cast<unsigned>(cfg.shift_m));
      const BigInt word = floor_div_pow2(acc, static_cast<unsigned>(cfg.shift_n));
      if (word < lo || word > hi) out.fits = false;
      out.words.push_back(word);
    }
  }
  return out;
}

}  // namespace luna::test
