#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "utc/backtest.hpp"
#include "utc/company.hpp"
#include "utc/trader.hpp"
#include "utc/var_model.hpp"

namespace utc {

inline constexpr int kModelFormatVersion = 1;

/// {target_stock, terms: [{p, q, d, f, op, act}], weight_mean, weight_cov}
std::string trader_to_json(const Trader& trader);
Trader trader_from_json(std::string_view text);

/// {format_version, mode, target_stock, generation, hyper, train_cfg, traders}
std::string company_to_json(const Company& company);
Company company_from_json(std::string_view text);

/// A trained model file: a company per target symbol, or a VAR baseline.
struct StoredModel {
  std::string kind;  // "company_bundle" or "var"
  std::vector<std::string> symbols;
  std::optional<CompanyBundle> bundle;
  std::optional<VarModel> var;
};

std::string bundle_to_json(const CompanyBundle& bundle);
std::string var_to_json(const VarModel& model, const std::vector<std::string>& symbols);
StoredModel model_from_json(std::string_view text);

void save_text(const std::string& path, const std::string& text);
std::string load_text(const std::string& path);

/// {ar, risk, sr, sr_defined, mdd, mdd_ratio, cr, cr_defined, t_y}
std::string report_to_json(const BacktestReport& report);

/// One JSON-lines record: {round, mean_R, min_R, max_R, n_educated, n_pruned[, symbol]}.
std::string round_stats_to_json(const RoundStats& stats, std::string_view symbol = {});

}  // namespace utc
