#include "dom/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "dom/attack.hpp"
#include "dom/augment.hpp"
#include "dom/checkpoint.hpp"
#include "dom/error.hpp"
#include "dom/loss.hpp"
#include "dom/optim.hpp"
#include "dom/rng.hpp"
#include "dom/scheduler.hpp"
#include "dom/timing.hpp"

namespace dom {

namespace {

// Stream labels for derive_seed.
constexpr std::uint64_t kShuffle = 0x5348554646ULL;
constexpr std::uint64_t kStdAug = 0x535441554755ULL;
constexpr std::uint64_t kTrainAttack = 0x41544b54ULL;
constexpr std::uint64_t kLedgerAttack = 0x41544b4cULL;
constexpr std::uint64_t kEvalAttack = 0x41544b45ULL;
constexpr std::uint64_t kDaDraw = 0x4441ULL;

void truncate(Dataset& d, std::size_t limit) {
  if (limit == 0 || limit >= d.size()) return;
  d.records.resize(limit);
  if (!d.clean_labels.empty()) d.clean_labels.resize(limit);
  std::set<std::uint64_t> kept;
  for (const auto& r : d.records) kept.insert(r.id);
  std::erase_if(d.noisy_ids, [&](std::uint64_t id) { return !kept.count(id); });
}

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Per-sample natural losses over the whole set, forward only.
std::vector<double> natural_losses(const Model& model, const Dataset& data, std::size_t bs) {
  std::vector<double> out;
  out.reserve(data.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += bs) {
    idx.clear();
    for (std::size_t i = start; i < std::min(start + bs, data.size()); ++i) idx.push_back(i);
    const Batch b = data.gather(idx);
    const auto l = evaluate_loss(model, b.x, b.y).values;
    out.insert(out.end(), l.begin(), l.end());
  }
  return out;
}

std::vector<double> adversarial_losses(const Model& model, const Dataset& data, const AttackSpec& spec,
                                       std::uint64_t seed, std::size_t bs) {
  std::vector<double> out;
  out.reserve(data.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += bs) {
    idx.clear();
    for (std::size_t i = start; i < std::min(start + bs, data.size()); ++i) idx.push_back(i);
    const Batch b = data.gather(idx);
    const Perturbation p = perturb(model, b, spec, seed);
    const auto l = evaluate_loss(model, add_perturbation(b.x, p), b.y, LossRole::at).values;
    out.insert(out.end(), l.begin(), l.end());
  }
  return out;
}

void require_finite_losses(std::span<const double> losses, const char* what) {
  for (double l : losses) {
    if (!std::isfinite(l)) throw NumericalError(std::string("non-finite ") + what);
  }
}

std::string fmt17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Artifacts {
  std::filesystem::path dir;
  bool enabled = false;

  std::filesystem::path operator/(const std::string& name) const { return dir / name; }
};

void write_proportions(const LossLedger& ledger, std::span<const double> edges, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "epoch,channel,lower,upper,fraction\n";
  for (auto ch : {LossChannel::natural, LossChannel::adversarial}) {
    for (int e : ledger.epochs(ch)) {
      const auto p = loss_range_proportions(ledger, ch, e, edges);
      for (std::size_t i = 0; i < p.size(); ++i) {
        out << e << ',' << to_string(ch) << ',' << fmt17(edges[i]) << ',' << fmt17(edges[i + 1]) << ','
            << fmt17(p[i]) << '\n';
      }
    }
  }
}

}  // namespace

std::string describe(std::span<const Violation> violations) {
  std::string out;
  for (const auto& v : violations) out += v.field + ": " + v.message + "\n";
  return out;
}

DataSplits load_data(const RunConfig& c) {
  const auto& d = c.data;
  DataSplits s;
  if (d.source == "synthetic") {
    SyntheticSpec spec;
    spec.n_samples = d.n_train;
    spec.n_classes = d.classes;
    spec.sample_shape = d.shape;
    spec.label_noise_rate = d.label_noise;
    spec.seed = d.seed;
    spec.cluster_std = d.cluster_std;
    spec.stream = 0;
    s.train = make_synthetic(spec);
    spec.n_samples = d.n_test;
    spec.label_noise_rate = 0.0;
    spec.stream = 1;
    spec.id_offset = d.n_train;
    spec.split = Split::test;
    s.test = make_synthetic(spec);
  } else if (d.source == "idx") {
    s.train = load_idx(d.train_images, d.train_labels, Split::train, 0);
    s.test = load_idx(d.test_images, d.test_labels, Split::test, 1ULL << 40);
  } else if (d.source == "cifar") {
    s.train = load_cifar_binary(d.train_path, Split::train, 0);
    s.test = load_cifar_binary(d.test_path, Split::test, 1ULL << 40);
  } else if (d.source == "domd") {
    s.train = load_domd(d.train_path);
    s.test = load_domd(d.test_path);
  } else {
    throw ConfigError("data.source: unknown source '" + d.source + "'");
  }
  truncate(s.train, d.limit_train);
  truncate(s.test, d.limit_test);
  if (s.train.empty() || s.test.empty()) throw ConfigError("data: empty train or test set");
  if (s.train.sample_shape != s.test.sample_shape) {
    throw FormatError(FormatError::Code::bad_size, "train and test sample shapes differ: " +
                                                       shape_string(s.train.sample_shape) + " vs " +
                                                       shape_string(s.test.sample_shape));
  }
  const int classes = std::max(s.train.num_classes, s.test.num_classes);
  s.train.num_classes = s.test.num_classes = classes;
  return s;
}

Model build_model(const RunConfig& c, const Shape& sample_shape, std::size_t num_classes) {
  if (c.model.arch == "convnet") {
    if (sample_shape.size() != 3) throw ConfigError("model.arch: convnet needs C,H,W samples, got " + shape_string(sample_shape));
    return Model::convnet(sample_shape, c.model.channels, num_classes, c.model_seed());
  }
  return Model::mlp(sample_shape, c.model.hidden, num_classes, c.model_seed());
}

RunResult run(const RunConfig& config, const RunOptions& options) {
  if (const auto v = validate(config); !v.empty()) throw ConfigError("invalid config:\n" + describe(v));

  const DataSplits data = load_data(config);
  const Dataset& train = data.train;
  const Dataset& test = data.test;

  Artifacts art;
  art.enabled = options.write_outputs && !config.output_dir.empty();
  art.dir = config.output_dir;
  if (art.enabled) {
    std::filesystem::create_directories(art.dir);
    std::ofstream(art / "config.txt") << dump_config(config);
  }

  const int E = config.train.epochs;
  const int K = config.resolved_warmup();
  const int aux_epoch = config.resolved_aux_epoch();
  const LrSchedule schedule = config.schedule();
  const Paradigm paradigm = config.paradigm;
  const bool adversarial = is_adversarial(paradigm);
  const DomSpec& dom = config.dom;
  const std::size_t M = config.train.batch_size;
  const std::uint64_t seed = config.seed;
  const bool std_aug = config.data.standard_augment && train.is_image();
  const SelectionMetric metric =
      adversarial ? SelectionMetric::max_robust_accuracy : SelectionMetric::min_test_error;
  const double report_threshold =
      dom.threshold.kind == ThresholdRule::Kind::fixed ? dom.threshold.value : std::nan("");

  Model model = build_model(config, train.sample_shape, static_cast<std::size_t>(train.num_classes));
  Sgd sgd(config.train.sgd);

  RunResult result{.report = {},
                   .context = {to_string(paradigm), to_string(dom.mode), report_threshold, K, seed},
                   .ledger = {},
                   .aux_losses = {},
                   .tags = {},
                   .persistence = std::nullopt,
                   .deciles = std::nullopt,
                   .grouped_adversarial = std::nullopt,
                   .param_history = {},
                   .model = model};

  std::vector<std::uint64_t> train_ids(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) train_ids[i] = train.records[i].id;
  std::set<std::uint64_t> removed;

  std::vector<EpochRecord> history;
  std::optional<Checkpoint> best_ckpt;
  double best_error = std::numeric_limits<double>::infinity();
  PhaseTimer timer;
  int epoch = 0;
  std::size_t batch_index = 0;
  std::vector<std::uint64_t> batch_ids;

  try {
    for (epoch = 1; epoch <= E; ++epoch) {
      EpochRecord rec;
      rec.epoch = epoch;
      rec.lr = schedule.lr_at(epoch - 1);
      timer.reset();
      const auto train_start = Clock::now();
      timer.start();

      std::vector<std::size_t> active;
      active.reserve(train.size());
      for (std::size_t i = 0; i < train.size(); ++i) {
        if (!removed.count(train_ids[i])) active.push_back(i);
      }
      const auto perm = shuffled_indices(active.size(), derive_seed({seed, kShuffle, static_cast<std::uint64_t>(epoch)}));
      const std::size_t nb = (active.size() + M - 1) / M;
      const std::uint64_t attack_seed = derive_seed({seed, kTrainAttack, static_cast<std::uint64_t>(epoch)});
      const StepContext ctx{paradigm, &config.attack, attack_seed, &timer};
      std::optional<FamilyAugmentSource> da_source;
      if (dom.mode == DomMode::da) {
        da_source.emplace(dom.da_ops, train.sample_shape, dom.da_magnitude,
                          derive_seed({seed, kDaDraw, static_cast<std::uint64_t>(epoch)}));
      }

      std::vector<std::size_t> positions;
      for (batch_index = 0; batch_index < nb; ++batch_index) {
        positions.clear();
        for (std::size_t k = batch_index * M; k < std::min((batch_index + 1) * M, active.size()); ++k) {
          positions.push_back(active[perm[k]]);
        }
        Batch batch = train.gather(positions);
        batch_ids = batch.ids;
        if (std_aug) {
          for (std::size_t i = 0; i < batch.size(); ++i) {
            Rng rng(derive_seed({seed, kStdAug, static_cast<std::uint64_t>(epoch), batch.ids[i]}));
            const auto a = standard_augment(batch.x.sample(i), train.sample_shape, rng);
            std::copy(a.begin(), a.end(), batch.x.sample(i).begin());
          }
        }
        const double lr = schedule.lr_at((epoch - 1) + static_cast<double>(batch_index) / static_cast<double>(nb));
        timer.mark(Phase::data);

        StepGradient step;
        if (dom.mode != DomMode::off && epoch > K) {
          const auto nt = evaluate_loss(model, batch.x, batch.y).values;
          require_finite_losses(nt, "natural loss");
          const double thr = resolve_threshold(dom.threshold, nt);
          const BatchPlan plan = plan_batch(dom.mode, epoch, K, nt, batch.ids, thr);
          rec.dom.high_confidence += plan.high_confidence.size();
          rec.dom.retained += plan.retained.size();
          timer.mark(Phase::dom);
          if (dom.mode == DomMode::re) {
            step = dom_re_grad(model, batch, plan, ctx, dom.strict_fidelity);
          } else {
            const Batch hc = subset(batch, plan.high_confidence);
            const DaResult da =
                dom_da_transform(model, hc, thr, dom.da_strength, dom.da_iterations, *da_source);
            rec.dom.da_evaluations += da.evaluations;
            rec.dom.da_accepted += da.accepted();
            timer.mark(Phase::dom);
            step = dom_da_grad(model, batch, plan, da.x, ctx);
          }
        } else {
          step = baseline_grad(model, batch, ctx);
        }
        if (!std::isfinite(step.mean_loss)) throw NumericalError("non-finite training loss");
        if (step.count == 0) {
          ++rec.dom.skipped_steps;
        } else {
          sgd.step(model, step.grads, lr);
          for (double p : model.params()) {
            if (!std::isfinite(p)) throw NumericalError("non-finite parameter after update");
          }
        }
        timer.mark(Phase::backward);
      }
      batch_index = nb;
      batch_ids.clear();

      rec.timing.train_total = since(train_start);
      rec.timing.data = timer.seconds(Phase::data);
      rec.timing.dom = timer.seconds(Phase::dom);
      rec.timing.attack = timer.seconds(Phase::attack);
      rec.timing.backward = timer.seconds(Phase::backward);

      const auto eval_start = Clock::now();
      const auto nat = natural_losses(model, train, config.eval.batch_size);
      require_finite_losses(nat, "natural loss");
      double sum = 0.0;
      std::size_t below = 0;
      for (double l : nat) {
        sum += l;
        if (!std::isnan(report_threshold) && l < report_threshold) ++below;
      }
      rec.train_loss = sum / static_cast<double>(nat.size());
      rec.train_acc = 100.0 * natural_accuracy(model, train, config.eval.batch_size);
      if (!std::isnan(report_threshold)) rec.train_hc_fraction = static_cast<double>(below) / nat.size();
      if (config.telemetry.ledger) {
        result.ledger.record_epoch(LossChannel::natural, epoch, train_ids, nat);
        if (adversarial) {
          const auto adv = adversarial_losses(model, train, config.attack,
                                              derive_seed({seed, kLedgerAttack, static_cast<std::uint64_t>(epoch)}),
                                              config.eval.batch_size);
          require_finite_losses(adv, "adversarial loss");
          result.ledger.record_epoch(LossChannel::adversarial, epoch, train_ids, adv);
        }
      }
      rec.test_acc = 100.0 * natural_accuracy(model, test, config.eval.batch_size);
      rec.test_error = 100.0 - rec.test_acc;
      if (adversarial && (epoch % config.eval.every == 0 || epoch == E)) {
        rec.robust_acc = 100.0 * robust_accuracy(model, test, config.eval.attack, derive_seed({seed, kEvalAttack}),
                                                 config.eval.batch_size);
      }

      const Checkpoint ckpt{model, epoch, CheckpointRole::last, rec.train_acc, rec.test_acc, rec.robust_acc};
      const bool selectable = metric == SelectionMetric::min_test_error || rec.robust_acc.has_value();
      if (selectable && selection_error(rec, metric) < best_error) {
        best_error = selection_error(rec, metric);
        best_ckpt = ckpt;
        best_ckpt->role = CheckpointRole::best;
      }
      if (epoch == aux_epoch) {
        for (std::size_t i = 0; i < nat.size(); ++i) result.aux_losses[train_ids[i]] = nat[i];
        if (art.enabled && config.telemetry.checkpoints) {
          Checkpoint aux = ckpt;
          aux.role = CheckpointRole::aux;
          save_checkpoint(aux, art / "aux.domc");
        }
      }
      if (epoch == config.telemetry.probe_epoch) {
        LossById current;
        for (std::size_t i = 0; i < nat.size(); ++i) current[train_ids[i]] = nat[i];
        result.tags = tag_memorization(current, result.aux_losses, epoch, dom.threshold.value);
        for (const auto& t : result.tags) {
          if (t.tag != MemoTag::normal) removed.insert(t.id);
        }
      }
      rec.timing.eval = since(eval_start);

      if (options.keep_param_history) {
        result.param_history.emplace_back(model.params().begin(), model.params().end());
      }
      if (options.on_epoch) options.on_epoch(rec);
      history.push_back(std::move(rec));
    }
  } catch (const NumericalError& e) {
    if (art.enabled) {
      std::ofstream dump(art / "nan_dump.txt");
      dump << "error: " << e.what() << "\nlayer: " << e.layer() << "\nepoch: " << epoch
           << "\nbatch: " << batch_index << "\nbatch_ids:";
      for (auto id : batch_ids) dump << ' ' << id;
      dump << "\nmax_abs_param: " << fmt17(max_abs(model.params())) << '\n';
      std::size_t bad = 0;
      for (double p : model.params()) bad += std::isfinite(p) ? 0 : 1;
      dump << "non_finite_params: " << bad << '\n';
    }
    throw;
  }

  result.report = finalize_report(std::move(history), metric);
  result.model = model;

  const auto& ledger = result.ledger;
  if (config.telemetry.probe_epoch > 0) {
    const int horizon = std::min(config.telemetry.probe_horizon, E - config.telemetry.probe_epoch);
    try {
      result.persistence = persistence_curves(ledger, result.tags, config.telemetry.probe_epoch, horizon);
    } catch (const Error&) {
      // An empty tagged group leaves the curves undefined.
    }
  }
  if (adversarial && config.telemetry.ledger) {
    result.deciles = overlap_rate_deciles(ledger.at(LossChannel::natural, E), ledger.at(LossChannel::adversarial, E));
    std::vector<int> window;
    for (int e = std::max(1, E - config.telemetry.fig4_window + 1); e <= E; ++e) window.push_back(e);
    result.grouped_adversarial =
        adversarial_loss_by_natural_group(ledger, window, config.telemetry.fig4_threshold);
  }

  if (art.enabled) {
    write_report(result.report, result.context, art / "report.json");
    if (config.telemetry.checkpoints) {
      if (best_ckpt) save_checkpoint(*best_ckpt, art / "best.domc");
      const auto& last = result.report.epochs.back();
      save_checkpoint({model, E, CheckpointRole::last, last.train_acc, last.test_acc, last.robust_acc},
                      art / "last.domc");
    }
    if (config.telemetry.ledger) {
      ledger.write_csv(art / "ledger.csv");
      std::vector<double> edges{0.0};
      edges.insert(edges.end(), config.telemetry.bins.begin(), config.telemetry.bins.end());
      edges.push_back(std::numeric_limits<double>::infinity());
      write_proportions(ledger, edges, art / "proportions.csv");
    }
    if (result.deciles) {
      std::ofstream out(art / "deciles.csv");
      out << "decile,overlap\n";
      for (std::size_t i = 0; i < 10; ++i) out << i + 1 << ',' << fmt17((*result.deciles)[i]) << '\n';
    }
    if (result.grouped_adversarial) {
      const auto& g = *result.grouped_adversarial;
      std::ofstream out(art / "fig4.csv");
      out << "group,natural_threshold,count,mean_adversarial_loss\n";
      out << "low," << fmt17(config.telemetry.fig4_threshold) << ',' << g.low_count << ','
          << fmt17(g.low_natural_mean) << '\n';
      out << "high," << fmt17(config.telemetry.fig4_threshold) << ',' << g.high_count << ','
          << fmt17(g.high_natural_mean) << '\n';
    }
    if (!result.tags.empty()) {
      std::ofstream out(art / "tags.csv");
      out << "sample_id,tag,reference_epoch\n";
      for (const auto& t : result.tags) out << t.id << ',' << to_string(t.tag) << ',' << t.reference_epoch << '\n';
    }
    if (result.persistence) {
      const auto& p = *result.persistence;
      std::ofstream out(art / "persistence.csv");
      out << "epoch,original_hc,transformed_hc\n";
      for (std::size_t i = 0; i < p.epochs.size(); ++i) {
        out << p.epochs[i] << ',' << fmt17(p.original[i]) << ',' << fmt17(p.transformed[i]) << '\n';
      }
    }
  }
  return result;
}

std::vector<SweepRow> sweep(const RunConfig& base, std::string_view axis, std::span<const std::string> values,
                            std::span<const std::uint64_t> seeds, const std::filesystem::path& out_dir) {
  if (!is_scalar_key(axis)) throw ConfigError("sweep axis '" + std::string(axis) + "' is not a scalar key");
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<std::uint64_t> seed_list(seeds.begin(), seeds.end());
  if (seed_list.empty()) seed_list.push_back(base.seed);

  std::vector<RunConfig> configs;
  for (const auto& v : values) {
    for (auto s : seed_list) {
      RunConfig c = base;
      set_config_value(c, axis, v);
      c.seed = s;
      if (!out_dir.empty()) {
        c.output_dir = (out_dir / (std::string(axis) + "=" + v) / ("seed_" + std::to_string(s))).string();
      }
      if (const auto bad = validate(c); !bad.empty()) {
        throw ConfigError("sweep value " + std::string(axis) + "=" + v + ":\n" + describe(bad));
      }
      configs.push_back(std::move(c));
    }
  }

  std::vector<SweepRow> rows;
  std::size_t k = 0;
  for (const auto& v : values) {
    for (auto s : seed_list) {
      rows.push_back({v, s, run(configs[k++]).report});
    }
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_sweep_csv(axis, rows, out_dir / "sweep.csv");
  }
  return rows;
}

void write_sweep_csv(std::string_view axis, std::span<const SweepRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  const auto opt = [](const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); };
  out << axis << ",seed,best_epoch,best_error,last_error,diff,best_robust_acc,last_robust_acc,"
      << "last_test_acc,da_evaluations,high_confidence\n";
  for (const auto& r : rows) {
    std::size_t evals = 0, hc = 0;
    for (const auto& e : r.report.epochs) {
      evals += e.dom.da_evaluations;
      hc += e.dom.high_confidence;
    }
    out << r.value << ',' << r.seed << ',' << r.report.best.epoch << ',' << fmt17(r.report.best.error) << ','
        << fmt17(r.report.last.error) << ',' << fmt17(r.report.diff) << ',' << opt(r.report.best.robust_acc) << ','
        << opt(r.report.last.robust_acc) << ',' << fmt17(r.report.epochs.back().test_acc) << ',' << evals << ','
        << hc << '\n';
  }
}

}  // namespace dom
