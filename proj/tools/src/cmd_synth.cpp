#include <json.hpp>

#include <fstream>
#include <ostream>

#include "commands.hpp"
#include "utc/csv_io.hpp"
#include "utc/error.hpp"
#include "utc/synthetic.hpp"

namespace utc::cli {

namespace {

struct SynthArgs {
  int n = 0;
  std::uint64_t seed = 0;
  double noise_sd = -1.0;  // < 0 keeps the generator default
  int burn_in = 50;
  int shift_time = 200;
  int stocks = 20;
  std::vector<int> shifts = {500, 900, 1200};
  std::vector<double> volatility = {1.0, 2.5};
  std::string out_path;
};

void emit(const ReturnPanel& panel, const nlohmann::json& spec, const SynthArgs& a,
          std::ostream& out, std::ostream& err) {
  if (a.out_path.empty()) {
    write_return_csv(out, panel);
    err << spec.dump() << '\n';
  } else {
    write_return_csv(a.out_path, panel);
    out << spec.dump() << '\n';
  }
}

SyntheticSpec base_spec(const SynthArgs& a) {
  SyntheticSpec s;
  s.n_samples = a.n;
  s.seed = a.seed;
  if (a.noise_sd >= 0.0) s.noise_sd = a.noise_sd;
  s.burn_in = a.burn_in;
  s.validate();
  return s;
}

nlohmann::json describe(const SyntheticSpec& s, const char* kind) {
  return {{"generator", kind},
          {"n_samples", s.n_samples},
          {"seed", s.seed},
          {"noise_sd", s.noise_sd},
          {"burn_in", s.burn_in}};
}

void add_common(CLI::App& sub, SynthArgs& a) {
  sub.add_option("--seed", a.seed, "root seed");
  sub.add_option("--noise-sd", a.noise_sd, "standard deviation of every noise term");
  sub.add_option("--out", a.out_path, "output CSV (default: stdout)");
}

}  // namespace

void add_synth(CLI::App& app, std::ostream& out, std::ostream& err) {
  CLI::App* synth = app.add_subcommand("synth", "write a generated return panel");
  synth->require_subcommand(1);

  auto nl_args = std::make_shared<SynthArgs>();
  CLI::App* nl = synth->add_subcommand("nonlinear", "bivariate nonlinear system y0, y1");
  nl->add_option("--n", nl_args->n, "samples after burn-in")->required();
  nl->add_option("--burn-in", nl_args->burn_in, "discarded leading samples");
  add_common(*nl, *nl_args);
  nl->callback([nl_args, &out, &err] {
    const SyntheticSpec s = base_spec(*nl_args);
    emit(gen_nonlinear(s), describe(s, "nonlinear"), *nl_args, out, err);
  });

  auto sh_args = std::make_shared<SynthArgs>();
  CLI::App* sh = synth->add_subcommand("shift", "nonlinear system plus y2 with a coefficient flip");
  sh->add_option("--n", sh_args->n, "samples after burn-in")->default_val(500);
  sh->add_option("--burn-in", sh_args->burn_in, "discarded leading samples");
  sh->add_option("--shift-time", sh_args->shift_time, "first sample of the second regime")
      ->default_val(200);
  add_common(*sh, *sh_args);
  sh->callback([sh_args, &out, &err] {
    SyntheticSpec s = base_spec(*sh_args);
    s.shift_time = sh_args->shift_time;
    nlohmann::json d = describe(s, "shift");
    d["shift_time"] = sh_args->shift_time;
    emit(gen_shift(s, gen_nonlinear(s)), d, *sh_args, out, err);
  });

  auto rg_args = std::make_shared<SynthArgs>();
  CLI::App* rg = synth->add_subcommand("regime", "multi-stock panel with regime changes");
  rg->add_option("--n", rg_args->n, "samples after burn-in")->default_val(1500);
  rg->add_option("--stocks", rg_args->stocks, "number of stocks")->default_val(20);
  rg->add_option("--shifts", rg_args->shifts, "regime change times")->delimiter(',');
  rg->add_option("--volatility", rg_args->volatility, "noise multiplier per regime, cycled")
      ->delimiter(',');
  rg->add_option("--burn-in", rg_args->burn_in, "discarded leading samples");
  add_common(*rg, *rg_args);
  rg->callback([rg_args, &out, &err] {
    RegimePanelSpec s;
    s.num_stocks = rg_args->stocks;
    s.n_samples = rg_args->n;
    s.seed = rg_args->seed;
    if (rg_args->noise_sd >= 0.0) s.noise_sd = rg_args->noise_sd;
    s.shift_times = rg_args->shifts;
    s.volatility = rg_args->volatility;
    s.burn_in = rg_args->burn_in;
    const nlohmann::json d = {{"generator", "regime"},   {"n_samples", s.n_samples},
                              {"num_stocks", s.num_stocks}, {"seed", s.seed},
                              {"noise_sd", s.noise_sd},   {"shift_times", s.shift_times},
                              {"volatility", s.volatility}, {"burn_in", s.burn_in}};
    emit(gen_regime_panel(s), d, *rg_args, out, err);
  });
}

void add_returns(CLI::App& app, std::ostream& out) {
  struct Args {
    std::string prices, out_path;
  };
  auto args = std::make_shared<Args>();
  CLI::App* ret = app.add_subcommand("returns", "return panel utilities");
  ret->require_subcommand(1);
  CLI::App* ex = ret->add_subcommand("export", "convert a price CSV to a log-return CSV");
  ex->add_option("--prices", args->prices, "price CSV")->required()->check(CLI::ExistingFile);
  ex->add_option("--out", args->out_path, "output CSV (default: stdout)");
  ex->callback([args, &out] {
    const ReturnPanel r = compute_log_returns(load_price_csv(args->prices));
    if (args->out_path.empty()) {
      write_return_csv(out, r);
    } else {
      write_return_csv(args->out_path, r);
    }
  });
}

}  // namespace utc::cli
