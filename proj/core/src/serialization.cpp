#include "utc/serialization.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "utc/error.hpp"

namespace utc {

using nlohmann::json;

namespace {

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) vec_json(m.row(r).transpose()).swap(a.emplace_back());
  return a;
}

Eigen::VectorXd json_vec(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a.at(i).get<double>();
  return v;
}

Eigen::MatrixXd json_mat(const json& a, Eigen::Index cols_if_empty = 0) {
  const auto rows = static_cast<Eigen::Index>(a.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(a.at(0).size()) : cols_if_empty;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = a.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw InputError("ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

json trader_json(const Trader& t) {
  json terms = json::array();
  for (const auto& term : t.params.terms) {
    terms.push_back({{"p", term.p},
                     {"q", term.q},
                     {"d", term.d},
                     {"f", term.f},
                     {"op", std::string(to_string(term.op))},
                     {"act", std::string(to_string(term.act))}});
  }
  return {{"target_stock", t.params.target_stock},
          {"terms", std::move(terms)},
          {"weight_mean", vec_json(t.weights.mean)},
          {"weight_cov", mat_json(t.weights.cov)}};
}

Trader trader_from(const json& j) {
  Trader t;
  t.params.target_stock = j.at("target_stock").get<int>();
  for (const auto& term : j.at("terms")) {
    TermParams p;
    p.p = term.at("p").get<int>();
    p.q = term.at("q").get<int>();
    p.d = term.at("d").get<int>();
    p.f = term.at("f").get<int>();
    const auto op = parse_operator(term.at("op").get<std::string>());
    const auto act = parse_activation(term.at("act").get<std::string>());
    if (!op || !act) throw InputError("unknown operator or activation tag in trader JSON");
    p.op = *op;
    p.act = *act;
    t.params.terms.push_back(p);
  }
  t.weights.mean = json_vec(j.at("weight_mean"));
  t.weights.cov = json_mat(j.at("weight_cov"), t.weights.mean.size());
  const auto m = static_cast<Eigen::Index>(t.params.terms.size());
  if (t.weights.mean.size() != m || t.weights.cov.rows() != m || t.weights.cov.cols() != m) {
    throw InputError("trader weight shapes do not match its term count");
  }
  return t;
}

json company_json(const Company& c) {
  const auto& h = c.hyper;
  const auto& k = c.config;
  json traders = json::array();
  for (const auto& t : c.traders) traders.push_back(trader_json(t));
  return {{"format_version", kModelFormatVersion},
          {"mode", std::string(to_string(c.mode))},
          {"target_stock", c.target_stock},
          {"generation", c.generation},
          {"hyper",
           {{"max_terms", h.max_terms},
            {"max_delay", h.max_delay},
            {"num_stocks", h.num_stocks},
            {"weight_bound", h.weight_bound}}},
          {"train_cfg",
           {{"num_traders", k.num_traders},
            {"prune_ratio", k.prune_ratio},
            {"fit_rounds", k.fit_rounds},
            {"rounds", k.rounds},
            {"noise_var", k.noise_var},
            {"prior_var", k.prior_var},
            {"gm_components", k.gm_components},
            {"seed", k.seed},
            {"em",
             {{"tol", k.em.tol},
              {"max_iter", k.em.max_iter},
              {"restarts", k.em.restarts},
              {"cov_floor", k.em.cov_floor},
              {"empty_mass", k.em.empty_mass}}}}},
          {"traders", std::move(traders)}};
}

void check_version(const json& j) {
  const int v = j.at("format_version").get<int>();
  if (v != kModelFormatVersion) {
    throw InputError("unsupported model format_version " + std::to_string(v));
  }
}

Company company_from(const json& j) {
  check_version(j);
  Company c;
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.target_stock = j.at("target_stock").get<int>();
  c.generation = j.value("generation", std::uint64_t{0});
  const json& h = j.at("hyper");
  c.hyper.max_terms = h.at("max_terms").get<int>();
  c.hyper.max_delay = h.at("max_delay").get<int>();
  c.hyper.num_stocks = h.at("num_stocks").get<int>();
  c.hyper.weight_bound = h.at("weight_bound").get<double>();
  const json& k = j.at("train_cfg");
  c.config.num_traders = k.at("num_traders").get<int>();
  c.config.prune_ratio = k.at("prune_ratio").get<double>();
  c.config.fit_rounds = k.at("fit_rounds").get<int>();
  c.config.rounds = k.at("rounds").get<int>();
  c.config.noise_var = k.at("noise_var").get<double>();
  c.config.prior_var = k.at("prior_var").get<double>();
  c.config.gm_components = k.at("gm_components").get<int>();
  c.config.seed = k.at("seed").get<std::uint64_t>();
  if (k.contains("em")) {
    const json& e = k.at("em");
    c.config.em.tol = e.at("tol").get<double>();
    c.config.em.max_iter = e.at("max_iter").get<int>();
    c.config.em.restarts = e.at("restarts").get<int>();
    c.config.em.cov_floor = e.at("cov_floor").get<double>();
    c.config.em.empty_mass = e.at("empty_mass").get<double>();
  }
  for (const auto& t : j.at("traders")) c.traders.push_back(trader_from(t));
  c.validate();
  return c;
}

json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
}

template <typename Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid model JSON: ") + e.what());
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string trader_to_json(const Trader& trader) { return trader_json(trader).dump(); }

Trader trader_from_json(std::string_view text) {
  return guarded([&] { return trader_from(parse(text)); });
}

std::string company_to_json(const Company& company) { return company_json(company).dump(); }

Company company_from_json(std::string_view text) {
  return guarded([&] { return company_from(parse(text)); });
}

std::string bundle_to_json(const CompanyBundle& bundle) {
  json companies = json::array();
  for (const auto& c : bundle.companies) companies.push_back(company_json(c));
  json j = {{"format_version", kModelFormatVersion},
            {"kind", "company_bundle"},
            {"symbols", bundle.symbols},
            {"companies", std::move(companies)}};
  return j.dump();
}

std::string var_to_json(const VarModel& model, const std::vector<std::string>& symbols) {
  json coefs = json::array();
  for (const auto& a : model.coefficients) coefs.push_back(mat_json(a));
  json j = {{"format_version", kModelFormatVersion},
            {"kind", "var"},
            {"symbols", symbols},
            {"lag", model.lag},
            {"effective_samples", model.effective_samples},
            {"intercept", vec_json(model.intercept)},
            {"coefficients", std::move(coefs)},
            {"residual_cov", mat_json(model.residual_cov)}};
  return j.dump();
}

StoredModel model_from_json(std::string_view text) {
  return guarded([&] {
    const json j = parse(text);
    check_version(j);
    StoredModel m;
    m.kind = j.at("kind").get<std::string>();
    m.symbols = j.at("symbols").get<std::vector<std::string>>();
    if (m.kind == "company_bundle") {
      CompanyBundle b;
      b.symbols = m.symbols;
      for (const auto& c : j.at("companies")) b.companies.push_back(company_from(c));
      m.bundle = std::move(b);
    } else if (m.kind == "var") {
      VarModel v;
      v.lag = j.at("lag").get<int>();
      v.effective_samples = j.value("effective_samples", 0);
      v.intercept = json_vec(j.at("intercept"));
      for (const auto& a : j.at("coefficients")) v.coefficients.push_back(json_mat(a));
      v.residual_cov = json_mat(j.at("residual_cov"));
      if (static_cast<int>(v.coefficients.size()) != v.lag) {
        throw InputError("VAR model lag does not match its coefficient count");
      }
      m.var = std::move(v);
    } else {
      throw InputError("unknown model kind '" + m.kind + "'");
    }
    return m;
  });
}

void save_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string load_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string report_to_json(const BacktestReport& r) {
  json j = {{"ar", r.ar},
            {"risk", r.risk},
            {"sr", optional_json(r.sr)},
            {"sr_defined", r.sr.has_value()},
            {"mdd", r.mdd},
            {"mdd_ratio", optional_json(r.mdd_ratio)},
            {"cr", optional_json(r.cr)},
            {"cr_defined", r.cr.has_value()},
            {"t_y", r.t_y}};
  return j.dump();
}

std::string round_stats_to_json(const RoundStats& s, std::string_view symbol) {
  json j = {{"round", s.round},       {"mean_R", s.mean_r},         {"min_R", s.min_r},
            {"max_R", s.max_r},       {"n_educated", s.n_educated}, {"n_pruned", s.n_pruned}};
  if (!symbol.empty()) j["symbol"] = std::string(symbol);
  return j.dump();
}

}  // namespace utc
