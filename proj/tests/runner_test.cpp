#include <doctest.h>

#include <algorithm>
#include <fstream>

#include "dom/attack.hpp"
#include "dom/checkpoint.hpp"
#include "dom/error.hpp"
#include "dom/runner.hpp"
#include "support.hpp"

using namespace dom;

namespace {

RunConfig small(KeyValues extra = {}) {
  KeyValues kv{{"paradigm", "natural"},     {"data.n_train", "240"},  {"data.n_test", "120"},
               {"data.classes", "3"},       {"data.shape", "8"},      {"model.hidden", "16"},
               {"train.epochs", "3"},       {"train.batch_size", "32"}, {"lr.decay_epochs", "2"},
               {"seed", "5"}};
  kv.insert(kv.end(), extra.begin(), extra.end());
  return parse_config("", kv);
}

RunOptions quiet() {
  RunOptions o;
  o.write_outputs = false;
  return o;
}

}  // namespace

TEST_CASE("a short natural run produces a complete history") {
  const auto r = run(small(), quiet());
  REQUIRE(r.report.epochs.size() == 3);
  for (const auto& e : r.report.epochs) {
    CHECK(e.test_error >= 0.0);
    CHECK(e.test_error <= 100.0);
    CHECK(e.train_hc_fraction.has_value());
    CHECK_FALSE(e.robust_acc.has_value());
  }
  CHECK(r.report.epochs[0].lr == doctest::Approx(0.1));
  CHECK(r.report.epochs[2].lr == doctest::Approx(0.01));
  CHECK(r.ledger.at(LossChannel::natural, 3).size() == 240);
}

TEST_CASE("identical configs give identical deterministic reports") {
  const auto cfg = small({{"dom.mode", "DA"}, {"dom.warmup", "1"}});
  const auto a = run(cfg, quiet());
  const auto b = run(cfg, quiet());
  CHECK(report_to_json(a.report, a.context, false) == report_to_json(b.report, b.context, false));
  CHECK(std::equal(a.model.params().begin(), a.model.params().end(), b.model.params().begin()));
}

TEST_CASE("DOM leaves the warm-up epochs bit-identical to the baseline") {
  RunOptions o = quiet();
  o.keep_param_history = true;
  const auto off = run(small({{"train.epochs", "2"}, {"lr.decay_epochs", "1"}}), o);
  const auto re = run(small({{"train.epochs", "2"}, {"lr.decay_epochs", "1"}, {"dom.mode", "RE"}, {"dom.warmup", "1"}}), o);
  REQUIRE(off.param_history.size() == 2);
  REQUIRE(re.param_history.size() == 2);
  CHECK(off.param_history[0] == re.param_history[0]);
  CHECK(re.report.epochs[0].dom.high_confidence == 0);
  CHECK(re.report.epochs[1].dom.high_confidence + re.report.epochs[1].dom.retained == 240);
}

TEST_CASE("the best checkpoint reproduces its recorded metrics") {
  auto cfg = small({{"train.epochs", "4"}});
  cfg.output_dir = test::scratch("runner_best").string();
  const auto r = run(cfg);
  const auto ckpt = load_checkpoint(std::filesystem::path(cfg.output_dir) / "best.domc");
  CHECK(ckpt.epoch == r.report.best.epoch);
  const auto data = load_data(cfg);
  CHECK(100.0 * natural_accuracy(ckpt.model, data.test, 256) == ckpt.test_acc);
  CHECK(100.0 - ckpt.test_acc == r.report.best.test_error);
  for (const char* f : {"report.json", "config.txt", "last.domc", "aux.domc", "ledger.csv", "proportions.csv"}) {
    CHECK(std::filesystem::exists(std::filesystem::path(cfg.output_dir) / f));
  }
  CHECK(dump_config(load_config(std::filesystem::path(cfg.output_dir) / "config.txt")) == dump_config(cfg));
}

TEST_CASE("phase timings account for the training wall clock") {
  const auto r = run(small({{"paradigm", "at_multi"}, {"attack.steps", "3"}, {"train.epochs", "2"},
                            {"lr.decay_epochs", "1"}, {"dom.mode", "RE"}, {"dom.warmup", "1"}}),
                     quiet());
  double phases = 0.0, total = 0.0;
  for (const auto& e : r.report.epochs) {
    phases += e.timing.phase_sum();
    total += e.timing.train_total;
    CHECK(e.timing.attack > 0.0);
  }
  CHECK(std::abs(phases - total) <= 0.05 * total);
}

TEST_CASE("adversarial runs record robust accuracy and deciles") {
  const auto r = run(small({{"paradigm", "at_multi"}, {"attack.steps", "2"}, {"eval.steps", "2"},
                            {"train.epochs", "2"}, {"lr.decay_epochs", "1"}, {"eval.every", "5"}}),
                     quiet());
  CHECK_FALSE(r.report.epochs[0].robust_acc.has_value());
  CHECK(r.report.epochs[1].robust_acc.has_value());
  CHECK(r.report.selection == SelectionMetric::max_robust_accuracy);
  CHECK(r.deciles.has_value());
  CHECK(r.ledger.at(LossChannel::adversarial, 2).size() == 240);
}

TEST_CASE("DA spends at most gamma evaluations per high-confidence sample") {
  for (int gamma : {1, 3}) {
    const auto r = run(small({{"dom.mode", "DA"}, {"dom.warmup", "1"}, {"dom.threshold", "50"},
                              {"dom.iterations", std::to_string(gamma)}}),
                       quiet());
    for (const auto& e : r.report.epochs) {
      CHECK(e.dom.da_evaluations == static_cast<std::size_t>(gamma) * e.dom.high_confidence);
      CHECK(e.dom.da_accepted == 0);
    }
    CHECK(r.report.epochs[2].dom.high_confidence == 240);
  }
}

TEST_CASE("the probe removes tagged samples and yields persistence curves") {
  const auto r = run(small({{"train.epochs", "6"}, {"lr.decay_epochs", "2"}, {"telemetry.probe_epoch", "3"},
                            {"telemetry.probe_horizon", "3"}, {"dom.threshold", "0.5"}}),
                     quiet());
  REQUIRE(r.tags.size() == 240);
  std::size_t tagged = 0;
  for (const auto& t : r.tags) tagged += t.tag != MemoTag::normal ? 1 : 0;
  CHECK(tagged > 0);
  if (r.persistence) CHECK(r.persistence->original.size() == 4);
}

TEST_CASE("sweeps cover every value and seed") {
  const auto dir = test::scratch("runner_sweep");
  const std::vector<std::string> values{"0.2", "0.5"};
  const std::vector<std::uint64_t> seeds{1, 2};
  const auto rows = sweep(small({{"train.epochs", "2"}, {"lr.decay_epochs", "1"}}), "dom.threshold", values, seeds, dir);
  CHECK(rows.size() == 4);
  CHECK(std::filesystem::exists(dir / "sweep.csv"));
  CHECK(std::filesystem::exists(dir / "dom.threshold=0.5" / "seed_2" / "report.json"));
  CHECK_THROWS_AS(sweep(small(), "model.hidden", values, seeds, dir), ConfigError);
}

TEST_CASE("invalid configs are rejected before training") {
  CHECK_THROWS_AS(run(small({{"dom.warmup", "3"}}), quiet()), ConfigError);
  CHECK_THROWS_AS(run(small({{"lr.base", "1e300"}}), quiet()), NumericalError);
}
