#pragma once

// Run artifacts.
//
// periods.csv, one row per (run, miner, period, scheme), header included:
//   run_id            run identifier (scenario name + seed)
//   miner             miner name from the scenario
//   period            period index
//   reward            reward credited for that period, decimal with 12 fractional digits
//   cumulative_reward running sum of `reward` over periods, same format
//   scheme            fproportional | pplns | proportional | pps
//   reward_exact      `reward` as an exact fraction "p/q"
//
// FiberPool rewards are bucketed by the period of the block that paid them and
// include blocks a miner mined solo. Rows are ordered by scheme, miner, period.

#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fiberpool/engine.hpp"

namespace fiberpool {

inline std::string run_id(const RunStats& s) { return s.scenario + "-seed" + std::to_string(s.seed); }

inline void write_period_rows(std::ostream& out, const std::string& id, const std::string& scheme,
                              const std::vector<std::string>& names, const std::vector<std::vector<Amount>>& reward) {
  for (std::size_t m = 0; m < names.size(); ++m) {
    Amount cumulative = 0;
    for (std::size_t p = 0; p < reward[m].size(); ++p) {
      cumulative += reward[m][p];
      out << id << ',' << names[m] << ',' << p << ',' << to_decimal_string(reward[m][p]) << ','
          << to_decimal_string(cumulative) << ',' << scheme << ',' << to_exact_string(reward[m][p]) << '\n';
    }
  }
}

inline void write_periods_csv(std::ostream& out, const RunStats& s, bool header = true) {
  if (header) out << "run_id,miner,period,reward,cumulative_reward,scheme,reward_exact\n";
  std::vector<std::string> names;
  for (const auto& m : s.miners) names.push_back(m.name);
  std::vector<std::vector<Amount>> fp(s.miners.size(), std::vector<Amount>(s.periods));
  for (std::size_t m = 0; m < s.miners.size(); ++m)
    for (std::uint64_t p = 0; p < s.periods; ++p) fp[m][p] = s.reward(m, p);
  const std::string id = run_id(s);
  write_period_rows(out, id, "fproportional", names, fp);
  for (const auto& b : s.baselines) write_period_rows(out, id, to_string(b.scheme), names, b.reward);
}

inline std::string periods_csv(const RunStats& s) {
  std::ostringstream out;
  write_periods_csv(out, s);
  return out.str();
}

}  // namespace fiberpool
