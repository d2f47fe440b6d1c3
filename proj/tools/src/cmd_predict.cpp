#include <fstream>
#include <ostream>
#include <sstream>

#include "commands.hpp"
#include "utc/csv_io.hpp"
#include "utc/error.hpp"
#include "utc/serialization.hpp"
#include "utc/var_model.hpp"

namespace utc::cli {

namespace {

struct PredictArgs {
  DataFlags data;
  std::string model_path;
  std::string out_path;
  std::optional<int> first, last, tail;
};

/// Rows reordered to the model's symbol order; extra panel symbols are dropped.
ReturnPanel align_to_model(const ReturnPanel& panel, const std::vector<std::string>& symbols) {
  std::vector<std::string> missing;
  Eigen::MatrixXd r(static_cast<Eigen::Index>(symbols.size()), panel.num_times());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const int k = panel.find_symbol(symbols[i]);
    if (k < 0) {
      missing.push_back(symbols[i]);
      continue;
    }
    r.row(static_cast<Eigen::Index>(i)) = panel.returns().row(k);
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << "panel lacks symbols the model was trained on:";
    for (const auto& s : missing) os << ' ' << s;
    throw InputError(os.str());
  }
  return ReturnPanel(symbols, panel.timestamps(), std::move(r));
}

void run_predict(const PredictArgs& a, std::ostream& out) {
  const StoredModel model = model_from_json(load_text(a.model_path));
  const ReturnPanel panel = align_to_model(a.data.load(), model.symbols);
  const int n = panel.num_times();

  int earliest = 0;
  if (model.bundle) {
    for (const auto& c : model.bundle->companies) earliest = std::max(earliest, c.hyper.max_history());
  } else {
    earliest = model.var->lag - 1;
  }
  int first = earliest;
  int last = n - 1;
  if (a.tail) first = std::max(earliest, n - *a.tail);
  if (a.first) first = *a.first;
  if (a.last) last = *a.last;
  if (first < earliest || last >= n || first > last) {
    std::ostringstream os;
    os << "prediction rows [" << first << ", " << last << "] must lie within [" << earliest << ", "
       << n - 1 << "]";
    throw ConfigError(os.str());
  }

  std::ofstream file;
  if (!a.out_path.empty()) {
    file.open(a.out_path);
    if (!file) throw InputError("cannot write " + a.out_path);
  }
  std::ostream& o = a.out_path.empty() ? out : file;

  if (model.var) {
    o << "timestamp,symbol,mean\n";
    for (int t = first; t <= last; ++t) {
      const Eigen::VectorXd mu = predict_var(*model.var, panel, t);
      for (int i = 0; i < panel.num_stocks(); ++i) {
        o << panel.timestamps()[static_cast<std::size_t>(t)] << ','
          << panel.symbols()[static_cast<std::size_t>(i)] << ',' << format_double(mu[i]) << '\n';
      }
    }
    return;
  }
  o << "timestamp,symbol,mean,sigma\n";
  for (int t = first; t <= last; ++t) {
    for (const auto& c : model.bundle->companies) {
      const PredictionWithUncertainty p = aggregate_predict(c, panel, t);
      o << panel.timestamps()[static_cast<std::size_t>(t)] << ','
        << panel.symbols()[static_cast<std::size_t>(c.target_stock)] << ','
        << format_double(p.mean) << ',' << (c.mode == Mode::UTC ? format_double(p.sigma) : "")
        << '\n';
    }
  }
}

}  // namespace

void add_predict(CLI::App& app, std::ostream& out) {
  auto args = std::make_shared<PredictArgs>();
  CLI::App* sub = app.add_subcommand(
      "predict", "forecast next-period returns; rows are labelled with the forecast origin");
  args->data.attach(*sub);
  sub->add_option("--model", args->model_path, "model JSON from train")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", args->out_path, "output CSV (default: stdout)");
  sub->add_option("--first-row", args->first, "first forecast origin (row index)");
  sub->add_option("--last-row", args->last, "last forecast origin (row index)");
  sub->add_option("--tail", args->tail, "forecast from the last N rows");
  sub->callback([args, &out] { run_predict(*args, out); });
}

}  // namespace utc::cli
