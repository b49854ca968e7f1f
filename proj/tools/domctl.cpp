#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "dom/config.hpp"
#include "dom/error.hpp"
#include "dom/runner.hpp"
#include "dom/telemetry.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Leftover `--key=value` / `--key value` arguments become config overrides.
dom::KeyValues overrides_from(const std::vector<std::string>& extras) {
  dom::KeyValues out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0) throw dom::ConfigError("unexpected argument '" + a + "'");
    const auto eq = a.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
    } else if (i + 1 < extras.size()) {
      out.emplace_back(a.substr(2), extras[++i]);
    } else {
      throw dom::ConfigError("override '" + a + "' has no value");
    }
  }
  return out;
}

dom::RunConfig resolve(const std::string& config_path, const std::vector<std::string>& extras) {
  const auto kv = overrides_from(extras);
  return config_path.empty() ? dom::parse_config("", kv) : dom::load_config(config_path, kv);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void print_summary(const dom::RunReport& r) {
  std::cout << "best epoch " << r.best.epoch << " error " << num(r.best.error) << "\n"
            << "last epoch " << r.last.epoch << " error " << num(r.last.error) << "\n"
            << "diff " << num(r.diff) << "\n";
}

int cmd_validate(const std::string& config_path, const std::vector<std::string>& extras, bool print) {
  const auto cfg = resolve(config_path, extras);
  const auto v = dom::validate(cfg);
  if (print) std::cout << dom::dump_config(cfg);
  if (!v.empty()) {
    std::cerr << dom::describe(v);
    return kExitConfig;
  }
  std::cout << "ok\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& extras, bool quiet) {
  auto cfg = resolve(config_path, extras);
  if (cfg.output_dir.empty()) cfg.output_dir = "run";
  dom::RunOptions opts;
  if (!quiet) {
    opts.on_epoch = [](const dom::EpochRecord& e) {
      std::cout << "epoch " << e.epoch << " lr " << num(e.lr) << " train_loss " << num(e.train_loss) << " train_acc "
                << num(e.train_acc) << " test_acc " << num(e.test_acc);
      if (e.robust_acc) std::cout << " robust_acc " << num(*e.robust_acc);
      std::cout << std::endl;
    };
  }
  const auto result = dom::run(cfg, opts);
  print_summary(result.report);
  std::cout << "outputs in " << cfg.output_dir << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& extras, const std::string& axis,
              const std::string& values, const std::string& seeds, const std::string& out) {
  const auto cfg = resolve(config_path, extras);
  std::vector<std::uint64_t> seed_list;
  for (const auto& s : split(seeds)) seed_list.push_back(std::stoull(s));
  const auto vals = split(values);
  const auto rows = dom::sweep(cfg, axis, vals, seed_list, out);
  for (const auto& r : rows) {
    std::cout << axis << "=" << r.value << " seed " << r.seed << " best " << num(r.report.best.error) << " last "
              << num(r.report.last.error) << " diff " << num(r.report.diff) << "\n";
  }
  std::cout << "table in " << (fs::path(out) / "sweep.csv").string() << "\n";
  return kExitOk;
}

int cmd_analyze(const std::string& ledger_path, int epoch, int aux_epoch, double threshold, int horizon,
                const std::string& bins, double fig4_threshold, int fig4_window, const std::string& out) {
  const auto ledger = dom::LossLedger::read_csv(ledger_path);
  const auto nat_epochs = ledger.epochs(dom::LossChannel::natural);
  if (nat_epochs.empty()) throw dom::ConfigError("ledger has no natural-loss entries");
  if (epoch <= 0) epoch = nat_epochs.back();
  const fs::path dir = out.empty() ? fs::path(ledger_path).parent_path() / "analysis" : fs::path(out);
  fs::create_directories(dir);

  std::vector<double> edges{0.0};
  for (const auto& b : split(bins)) edges.push_back(std::stod(b));
  edges.push_back(INFINITY);

  {
    std::ofstream f(dir / "proportions.csv");
    f << "epoch,channel,lower,upper,fraction\n";
    for (auto ch : {dom::LossChannel::natural, dom::LossChannel::adversarial}) {
      for (int e : ledger.epochs(ch)) {
        const auto p = dom::loss_range_proportions(ledger, ch, e, edges);
        for (std::size_t i = 0; i < p.size(); ++i) {
          f << e << ',' << dom::to_string(ch) << ',' << num(edges[i]) << ',' << num(edges[i + 1]) << ',' << num(p[i])
            << '\n';
        }
      }
    }
  }
  const auto p = dom::loss_range_proportions(ledger, dom::LossChannel::natural, epoch, edges);
  std::cout << "natural loss proportions at epoch " << epoch << ":";
  for (double v : p) std::cout << ' ' << num(v);
  std::cout << "\n";

  if (ledger.has_epoch(dom::LossChannel::adversarial, epoch)) {
    const auto d = dom::overlap_rate_deciles(ledger.at(dom::LossChannel::natural, epoch),
                                             ledger.at(dom::LossChannel::adversarial, epoch));
    std::ofstream f(dir / "deciles.csv");
    f << "decile,overlap\n";
    std::cout << "overlap deciles:";
    for (std::size_t i = 0; i < d.size(); ++i) {
      f << i + 1 << ',' << num(d[i]) << '\n';
      std::cout << ' ' << num(d[i]);
    }
    std::cout << "\n";
    std::vector<int> window;
    for (int e : ledger.epochs(dom::LossChannel::adversarial)) {
      if (e > epoch - fig4_window && e <= epoch) window.push_back(e);
    }
    const auto g = dom::adversarial_loss_by_natural_group(ledger, window, fig4_threshold);
    std::ofstream g4(dir / "fig4.csv");
    g4 << "group,natural_threshold,count,mean_adversarial_loss\n"
       << "low," << num(fig4_threshold) << ',' << g.low_count << ',' << num(g.low_natural_mean) << '\n'
       << "high," << num(fig4_threshold) << ',' << g.high_count << ',' << num(g.high_natural_mean) << '\n';
  }

  if (aux_epoch > 0) {
    const auto tags =
        dom::tag_memorization(ledger, ledger.at(dom::LossChannel::natural, aux_epoch), epoch, threshold);
    std::size_t counts[3] = {0, 0, 0};
    std::ofstream f(dir / "tags.csv");
    f << "sample_id,tag,reference_epoch\n";
    for (const auto& t : tags) {
      ++counts[static_cast<int>(t.tag)];
      f << t.id << ',' << dom::to_string(t.tag) << ',' << t.reference_epoch << '\n';
    }
    std::cout << "tags: original_hc " << counts[0] << " transformed_hc " << counts[1] << " normal " << counts[2]
              << "\n";
    if (horizon > 0 && (counts[0] == 0 || counts[1] == 0)) {
      std::cout << "persistence: skipped, a tagged group is empty\n";
    } else if (horizon > 0) {
      const int last = nat_epochs.back();
      const auto c = dom::persistence_curves(ledger, tags, epoch, std::min(horizon, last - epoch));
      std::ofstream pc(dir / "persistence.csv");
      pc << "epoch,original_hc,transformed_hc\n";
      for (std::size_t i = 0; i < c.epochs.size(); ++i) {
        pc << c.epochs[i] << ',' << num(c.original[i]) << ',' << num(c.transformed[i]) << '\n';
      }
    }
  }
  std::cout << "analysis in " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train, sweep and analyse runs with the DOM over-memorization toolkit"};
  app.require_subcommand(1);
  std::string config_path;

  auto* train = app.add_subcommand("train", "run one training job");
  train->allow_extras();
  train->add_option("-c,--config", config_path, "key = value config file");
  bool quiet = false;
  train->add_flag("-q,--quiet", quiet, "no per-epoch lines");

  auto* validate = app.add_subcommand("validate", "check a config and exit 2 on violations");
  validate->allow_extras();
  validate->add_option("-c,--config", config_path, "key = value config file");
  bool print = false;
  validate->add_flag("--print", print, "print the resolved config");

  auto* sweep = app.add_subcommand("sweep", "grid over one scalar key");
  sweep->allow_extras();
  sweep->add_option("-c,--config", config_path, "key = value config file");
  std::string axis, values, seeds, sweep_out = "sweep";
  sweep->add_option("--axis", axis, "config key to vary")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_option("--seeds", seeds, "comma-separated seeds (default: config seed)");
  sweep->add_option("--out", sweep_out, "output directory")->capture_default_str();

  auto* analyze = app.add_subcommand("analyze", "recompute telemetry from an exported ledger");
  std::string ledger_path, analyze_out, bins = "0.2,0.5,1,2";
  int epoch = 0, aux_epoch = 0, horizon = 0, fig4_window = 10;
  double threshold = 0.2, fig4_threshold = 1.5;
  analyze->add_option("ledger", ledger_path, "ledger.csv")->required()->check(CLI::ExistingFile);
  analyze->add_option("--epoch", epoch, "epoch to analyse (default: last)");
  analyze->add_option("--aux-epoch", aux_epoch, "reference epoch for original/transformed tags");
  analyze->add_option("--threshold", threshold, "high-confidence loss threshold")->capture_default_str();
  analyze->add_option("--horizon", horizon, "persistence epochs after --epoch");
  analyze->add_option("--bins", bins, "interior loss-range edges")->capture_default_str();
  analyze->add_option("--fig4-threshold", fig4_threshold, "natural-loss split for grouped adversarial loss")->capture_default_str();
  analyze->add_option("--fig4-window", fig4_window, "epochs averaged for grouped adversarial loss")->capture_default_str();
  analyze->add_option("--out", analyze_out, "output directory (default: <ledger dir>/analysis)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) return cmd_train(config_path, train->remaining(), quiet);
    if (*validate) return cmd_validate(config_path, validate->remaining(), print);
    if (*sweep) return cmd_sweep(config_path, sweep->remaining(), axis, values, seeds, sweep_out);
    if (*analyze) {
      return cmd_analyze(ledger_path, epoch, aux_epoch, threshold, horizon, bins, fig4_threshold, fig4_window,
                         analyze_out);
    }
  } catch (const dom::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dom::NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
