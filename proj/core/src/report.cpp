#include "dom/report.hpp"

#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "dom/error.hpp"

namespace dom {

double selection_error(const EpochRecord& e, SelectionMetric metric) {
  if (metric == SelectionMetric::min_test_error) return e.test_error;
  if (!e.robust_acc) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 - *e.robust_acc;
}

namespace {

CheckpointSummary summarize(const EpochRecord& e, SelectionMetric metric) {
  return {e.epoch, e.test_error, e.robust_acc, selection_error(e, metric)};
}

}  // namespace

RunReport finalize_report(std::vector<EpochRecord> history, SelectionMetric metric) {
  if (history.empty()) throw Error("finalize_report: empty history");
  RunReport r;
  r.selection = metric;
  r.epochs = std::move(history);
  const EpochRecord* best = nullptr;
  for (const auto& e : r.epochs) {
    const double err = selection_error(e, metric);
    if (err != err) continue;
    if (!best || err < selection_error(*best, metric)) best = &e;
  }
  if (!best) throw Error("finalize_report: no epoch carries the selection metric");
  r.best = summarize(*best, metric);
  r.last = summarize(r.epochs.back(), metric);
  if (r.last.error != r.last.error) throw Error("finalize_report: final epoch lacks the selection metric");
  r.diff = r.best.error - r.last.error;
  return r;
}

namespace {

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json summary_json(const CheckpointSummary& s) {
  return {{"epoch", s.epoch}, {"error", s.error}, {"test_error", s.test_error}, {"robust_acc", optional_number(s.robust_acc)}};
}

}  // namespace

std::string report_to_json(const RunReport& report, const ReportContext& ctx, bool include_timing) {
  using nlohmann::json;
  json j;
  j["paradigm"] = ctx.paradigm;
  j["dom_mode"] = ctx.dom_mode;
  j["selection_metric"] = report.selection == SelectionMetric::min_test_error ? "min_test_error" : "max_robust_accuracy";
  j["threshold"] = ctx.threshold;
  j["warmup_epoch"] = ctx.warmup_epoch;
  j["seed"] = ctx.seed;

  json epochs = json::object();
  std::vector<int> ep;
  std::vector<double> lr, train_loss, train_acc, test_acc, test_error;
  std::vector<json> robust, hc_frac;
  std::vector<std::size_t> hc, retained, da_eval, da_acc, skipped;
  for (const auto& e : report.epochs) {
    ep.push_back(e.epoch);
    lr.push_back(e.lr);
    train_loss.push_back(e.train_loss);
    train_acc.push_back(e.train_acc);
    test_acc.push_back(e.test_acc);
    test_error.push_back(e.test_error);
    robust.push_back(optional_number(e.robust_acc));
    hc_frac.push_back(optional_number(e.train_hc_fraction));
    hc.push_back(e.dom.high_confidence);
    retained.push_back(e.dom.retained);
    da_eval.push_back(e.dom.da_evaluations);
    da_acc.push_back(e.dom.da_accepted);
    skipped.push_back(e.dom.skipped_steps);
  }
  epochs["epoch"] = ep;
  epochs["lr"] = lr;
  epochs["train_loss"] = train_loss;
  epochs["train_acc"] = train_acc;
  epochs["test_acc"] = test_acc;
  epochs["test_error"] = test_error;
  epochs["robust_acc"] = robust;
  epochs["train_hc_fraction"] = hc_frac;
  epochs["dom_high_confidence"] = hc;
  epochs["dom_retained"] = retained;
  epochs["dom_da_evaluations"] = da_eval;
  epochs["dom_da_accepted"] = da_acc;
  epochs["dom_skipped_steps"] = skipped;
  j["epochs"] = epochs;
  j["best"] = summary_json(report.best);
  j["last"] = summary_json(report.last);
  j["diff"] = report.diff;

  if (include_timing) {
    json t = json::object();
    std::vector<double> data, dom, attack, bwd, total, eval;
    EpochTiming sum;
    for (const auto& e : report.epochs) {
      data.push_back(e.timing.data);
      dom.push_back(e.timing.dom);
      attack.push_back(e.timing.attack);
      bwd.push_back(e.timing.backward);
      total.push_back(e.timing.train_total);
      eval.push_back(e.timing.eval);
      sum.data += e.timing.data;
      sum.dom += e.timing.dom;
      sum.attack += e.timing.attack;
      sum.backward += e.timing.backward;
      sum.train_total += e.timing.train_total;
      sum.eval += e.timing.eval;
    }
    t["per_epoch"] = {{"data", data}, {"dom", dom}, {"attack", attack}, {"backward", bwd}, {"train_total", total}, {"eval", eval}};
    t["totals"] = {{"data", sum.data}, {"dom", sum.dom}, {"attack", sum.attack}, {"backward", sum.backward},
                   {"train_total", sum.train_total}, {"eval", sum.eval}};
    j["timing"] = t;
  }
  return j.dump(2);
}

void write_report(const RunReport& report, const ReportContext& ctx, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(FormatError::Code::io, "cannot write " + path.string());
  out << report_to_json(report, ctx) << '\n';
}

}  // namespace dom
