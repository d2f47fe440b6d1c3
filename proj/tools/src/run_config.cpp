#include "run_config.hpp"

#include <fstream>
#include <set>

#include "utc/error.hpp"

namespace utc::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

void RunConfig::validate() const {
  if (mode != "tc" && mode != "utc" && mode != "var" && mode != "market") {
    throw ConfigError("unknown mode '" + mode + "' (expected tc, utc, var or market)");
  }
  hyper.validate();
  train.validate();
  filter.validate();
  if (gate && mode != "utc") throw ConfigError("uncertainty gating needs mode utc");
  if (!(t_y > 0.0)) throw ConfigError("t_y must be > 0");
  if (var_lag < 0) throw ConfigError("VAR lag must be >= 0 (0 selects by AIC)");
  if (var_max_lag < 1) throw ConfigError("VAR max lag must be >= 1");
}

void apply_json(RunConfig& c, const json& j) {
  check_keys(j, {"mode", "seed", "threads", "t_y", "trader", "company", "em", "gate", "var"}, "config");
  read(j, "mode", c.mode);
  read(j, "seed", c.train.seed);
  read(j, "threads", c.train.threads);
  read(j, "t_y", c.t_y);
  if (j.contains("trader")) {
    const json& t = j.at("trader");
    check_keys(t, {"max_terms", "max_delay", "weight_bound"}, "trader");
    read(t, "max_terms", c.hyper.max_terms);
    read(t, "max_delay", c.hyper.max_delay);
    read(t, "weight_bound", c.hyper.weight_bound);
  }
  if (j.contains("company")) {
    const json& t = j.at("company");
    check_keys(t,
               {"num_traders", "prune_ratio", "fit_rounds", "rounds", "noise_var", "prior_var",
                "gm_components"},
               "company");
    read(t, "num_traders", c.train.num_traders);
    read(t, "prune_ratio", c.train.prune_ratio);
    read(t, "fit_rounds", c.train.fit_rounds);
    read(t, "rounds", c.train.rounds);
    read(t, "noise_var", c.train.noise_var);
    read(t, "prior_var", c.train.prior_var);
    read(t, "gm_components", c.train.gm_components);
  }
  if (j.contains("em")) {
    const json& t = j.at("em");
    check_keys(t, {"tol", "max_iter", "restarts", "cov_floor", "empty_mass"}, "em");
    read(t, "tol", c.train.em.tol);
    read(t, "max_iter", c.train.em.max_iter);
    read(t, "restarts", c.train.em.restarts);
    read(t, "cov_floor", c.train.em.cov_floor);
    read(t, "empty_mass", c.train.em.empty_mass);
  }
  if (j.contains("gate")) {
    const json& t = j.at("gate");
    check_keys(t, {"enabled", "lookback", "quantile", "min_history", "invert", "pool_stocks"}, "gate");
    read(t, "enabled", c.gate);
    read(t, "lookback", c.filter.lookback);
    read(t, "quantile", c.filter.quantile);
    read(t, "min_history", c.filter.min_history);
    read(t, "invert", c.filter.invert);
    read(t, "pool_stocks", c.filter.pool_stocks);
  }
  if (j.contains("var")) {
    const json& t = j.at("var");
    check_keys(t, {"lag", "max_lag"}, "var");
    read(t, "lag", c.var_lag);
    read(t, "max_lag", c.var_max_lag);
  }
}

void apply_json_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  apply_json(config, j);
}

json to_json(const RunConfig& c) {
  return {{"mode", c.mode},
          {"seed", c.train.seed},
          {"t_y", c.t_y},
          {"trader",
           {{"max_terms", c.hyper.max_terms},
            {"max_delay", c.hyper.max_delay},
            {"weight_bound", c.hyper.weight_bound}}},
          {"company",
           {{"num_traders", c.train.num_traders},
            {"prune_ratio", c.train.prune_ratio},
            {"fit_rounds", c.train.fit_rounds},
            {"rounds", c.train.rounds},
            {"noise_var", c.train.noise_var},
            {"prior_var", c.train.prior_var},
            {"gm_components", c.train.gm_components}}},
          {"em",
           {{"tol", c.train.em.tol},
            {"max_iter", c.train.em.max_iter},
            {"restarts", c.train.em.restarts},
            {"cov_floor", c.train.em.cov_floor},
            {"empty_mass", c.train.em.empty_mass}}},
          {"gate",
           {{"enabled", c.gate},
            {"lookback", c.filter.lookback},
            {"quantile", c.filter.quantile},
            {"min_history", c.filter.min_history},
            {"invert", c.filter.invert},
            {"pool_stocks", c.filter.pool_stocks}}},
          {"var", {{"lag", c.var_lag}, {"max_lag", c.var_max_lag}}}};
}

}  // namespace utc::cli
