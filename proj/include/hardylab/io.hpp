#pragma once

// JSON and CSV serialisation of specs and reports. CSV numbers are written
// with 17 significant digits through std::to_chars (no locale involvement).

#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hardylab/error.hpp"
#include "hardylab/evolution.hpp"
#include "hardylab/forms.hpp"
#include "hardylab/grid.hpp"
#include "hardylab/hardy.hpp"
#include "hardylab/spectrum.hpp"
#include "hardylab/weights.hpp"

namespace hardylab {

using json = nlohmann::ordered_json;

// --- JSON -----------------------------------------------------------------

inline json to_json(const WeightSpec &w) {
  return json{{"family", std::string(to_string(w.family))},
              {"gamma", w.gamma},
              {"delta", w.delta},
              {"m", w.m},
              {"k1", w.k1},
              {"k2", w.k2},
              {"dim", w.dim}};
}

/// Strict: exactly the seven fields, every one present.
inline WeightSpec weight_from_json(const json &j) {
  if (!j.is_object())
    throw ConfigError("weight: expected an object");
  static const char *keys[] = {"family", "gamma", "delta", "m",
                               "k1",     "k2",    "dim"};
  for (const auto &[k, v] : j.items()) {
    bool known = false;
    for (const char *key : keys)
      known = known || k == key;
    if (!known)
      throw ConfigError("weight: unknown field '" + k + "'");
  }
  for (const char *key : keys)
    if (!j.contains(key))
      throw ConfigError(std::string("weight: missing field '") + key + "'");
  WeightSpec w;
  try {
    w.family = family_from_string(j.at("family").get<std::string>());
    w.gamma = j.at("gamma").get<double>();
    w.delta = j.at("delta").get<double>();
    w.m = j.at("m").get<double>();
    w.k1 = j.at("k1").get<double>();
    w.k2 = j.at("k2").get<double>();
    if (!j.at("dim").is_number_integer())
      throw ConfigError("weight: dim must be an integer");
    w.dim = j.at("dim").get<int>();
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("weight: ") + e.what());
  } catch (const DomainError &e) {
    throw ConfigError(e.what());
  }
  try {
    w.validate();
  } catch (const DomainError &e) {
    throw ConfigError(e.what());
  }
  return w;
}

inline json to_json(const RadialGrid &g) {
  return json{{"R", g.R()},
              {"n", g.size()},
              {"r1", g.r1()},
              {"grading", std::string(to_string(g.grading))},
              {"ratio", g.ratio},
              {"quad_order", g.quad_order},
              {"dim", g.dim}};
}

inline json to_json(const H3Report &h) {
  return json{{"holds", h.holds},           {"max_violation", h.max_violation},
              {"witness_r", h.witness_r},   {"alpha", h.alpha},
              {"eps", h.eps},               {"tolerance", h.tolerance}};
}

inline json to_json(const HardyReport &r) {
  json hist = json::array();
  for (const auto &h : r.refinement_history)
    hist.push_back(json{{"n", h.n},
                        {"r1", h.r1},
                        {"c_star", h.c_star},
                        {"residual", h.residual}});
  return json{{"c_star", r.c_star},
              {"c_theory", r.c_theory},
              {"c_extrapolated", r.c_extrapolated},
              {"residual", r.residual},
              {"monotone", r.monotone},
              {"refinement_history", hist}};
}

inline json to_json(const SpectrumReport &r) {
  json trend = json::array();
  for (const auto &p : r.trend)
    trend.push_back(json{{"n", p.n},
                         {"r1", p.r1},
                         {"lambda1", p.lambda1},
                         {"residual", p.residual}});
  return json{{"c", r.c},   {"lambda1", r.lambda1}, {"residual", r.residual},
              {"n", r.n},   {"r1", r.r1},           {"trend", trend}};
}

inline json to_json(const BlowupWitness &b) {
  return json{{"c", b.c},
              {"eta", b.eta},
              {"eps_list", b.eps_list},
              {"quotients", b.quotients},
              {"C1", b.C1},
              {"C2_eps", b.C2_eps},
              {"numerator_bounds", b.numerator_bounds},
              {"bounds", b.bounds}};
}

inline json to_json(const SweepReport &s) {
  json rows = json::array();
  for (const auto &r : s.rows)
    rows.push_back(json{{"trunc_n", r.trunc_n},
                        {"omega_fit", r.omega_fit},
                        {"lambda1", r.lambda1},
                        {"lambda1_residual", r.lambda1_residual},
                        {"agreement", r.agreement},
                        {"positivity_certified", r.positivity_certified}});
  return json{{"c", s.c},
              {"tau", s.tau},
              {"T", s.T},
              {"classification", std::string(to_string(s.classification))},
              {"rows", rows}};
}

/// Summary of a trace; the time series itself goes to CSV.
inline json to_json(const EvolutionTrace &t) {
  return json{{"c", t.c},
              {"truncation_n", t.truncation_n},
              {"tau", t.tau},
              {"scheme", std::string(to_string(t.scheme))},
              {"steps", t.times.empty() ? 0 : t.times.size() - 1},
              {"omega_fit", t.omega_fit},
              {"initial_norm", t.norms.front()},
              {"final_log_norm", t.log_norms.back()},
              {"initial_mass", t.masses.front()},
              {"final_mass", t.masses.back()},
              {"positivity_certified", t.positivity_certified},
              {"nonnegative_start", t.nonnegative_start},
              {"positivity_violations", t.positivity_violations},
              {"min_component_ratio", t.min_component_ratio},
              {"energy_excess", t.energy_excess}};
}

// --- CSV ------------------------------------------------------------------

namespace detail {

inline std::string csv_number(double v) {
  std::string s;
  append_double(s, v);
  return s;
}

class CsvWriter {
public:
  CsvWriter(std::ostream &os, std::initializer_list<const char *> header)
      : os_(os) {
    bool first = true;
    for (const char *h : header) {
      if (!first)
        os_ << ',';
      os_ << h;
      first = false;
    }
    os_ << '\n';
  }

  CsvWriter &num(double v) {
    sep();
    line_ += csv_number(v);
    return *this;
  }
  CsvWriter &integer(long long v) {
    sep();
    line_ += std::to_string(v);
    return *this;
  }
  CsvWriter &text(std::string_view v) {
    sep();
    if (v.find_first_of(",\"\n") == std::string_view::npos) {
      line_ += v;
      return *this;
    }
    line_ += '"';
    for (char ch : v) {
      if (ch == '"')
        line_ += '"';
      line_ += ch;
    }
    line_ += '"';
    return *this;
  }
  void end() {
    line_ += '\n';
    os_ << line_;
    line_.clear();
    open_ = false;
  }

private:
  void sep() {
    if (open_)
      line_ += ',';
    open_ = true;
  }
  std::ostream &os_;
  std::string line_;
  bool open_ = false;
};

} // namespace detail

inline void write_history_csv(std::ostream &os, const HardyReport &r) {
  detail::CsvWriter w(os, {"n", "r1", "c_star", "residual"});
  for (const auto &h : r.refinement_history)
    w.integer(h.n).num(h.r1).num(h.c_star).num(h.residual).end();
}

inline void write_dichotomy_csv(std::ostream &os,
                                const std::vector<DichotomyRow> &rows) {
  detail::CsvWriter w(os,
                      {"c", "n", "r1", "lambda1", "residual", "classification"});
  for (const auto &row : rows)
    for (const auto &p : row.report.trend)
      w.num(row.c)
          .integer(p.n)
          .num(p.r1)
          .num(p.lambda1)
          .num(p.residual)
          .text(to_string(row.classification))
          .end();
}

inline void write_trend_csv(std::ostream &os, const SpectrumReport &r) {
  detail::CsvWriter w(os, {"n", "r1", "lambda1", "residual"});
  for (const auto &p : r.trend)
    w.integer(p.n).num(p.r1).num(p.lambda1).num(p.residual).end();
}

inline void write_trace_csv(std::ostream &os, const EvolutionTrace &t) {
  detail::CsvWriter w(os, {"t", "norm", "mass"});
  for (std::size_t i = 0; i < t.times.size(); ++i)
    w.num(t.times[i]).num(t.norms[i]).num(t.masses[i]).end();
}

inline void write_sweep_csv(std::ostream &os, const SweepReport &s) {
  detail::CsvWriter w(os, {"trunc_n", "omega_fit", "classification"});
  for (const auto &r : s.rows)
    w.num(r.trunc_n).num(r.omega_fit).text(to_string(s.classification)).end();
}

inline void write_witness_csv(std::ostream &os, const BlowupWitness &b) {
  detail::CsvWriter w(os, {"eps", "quotient", "C2_eps", "bound"});
  for (std::size_t i = 0; i < b.eps_list.size(); ++i)
    w.num(b.eps_list[i]).num(b.quotients[i]).num(b.C2_eps[i]).num(b.bounds[i]).end();
}

inline void write_text_file(const std::filesystem::path &p,
                            const std::string &content) {
  std::ofstream f(p, std::ios::binary);
  if (!f)
    throw Error("cannot write " + p.string());
  f << content;
  if (!f)
    throw Error("write failed for " + p.string());
}

} // namespace hardylab
