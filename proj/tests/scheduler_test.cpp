#include <doctest.h>

#include <algorithm>
#include <map>

#include "dom/error.hpp"
#include "dom/loss.hpp"
#include "dom/scheduler.hpp"
#include "support.hpp"

using namespace dom;

namespace {

// Returns draw values fixed in advance per (id, iteration).
class ScriptedSource : public AugmentSource {
 public:
  std::map<std::pair<std::uint64_t, int>, std::vector<double>> script;
  int calls = 0;
  std::vector<double> draw(std::span<const double>, std::uint64_t id, int iteration) override {
    ++calls;
    return script.at({id, iteration});
  }
};

}  // namespace

TEST_CASE("percentile interpolates between order statistics") {
  const std::vector<double> v{4, 0, 3, 1, 2};
  CHECK(percentile(v, 40) == doctest::Approx(1.6).epsilon(1e-15));
  CHECK(percentile(v, 50) == 2.0);
  const std::vector<double> c(7, 0.37);
  CHECK(percentile(c, 40) == 0.37);
  CHECK(resolve_threshold(ThresholdRule::fixed(0.2), v) == 0.2);
  CHECK(resolve_threshold(ThresholdRule::adaptive(40), v) == doctest::Approx(1.6));
  CHECK_THROWS(percentile(std::vector<double>{}, 40));
}

TEST_CASE("plan_batch gates on warm-up and splits strictly") {
  const std::vector<double> losses{0.1, 0.3, 0.2, 0.05};
  const std::vector<std::uint64_t> ids{10, 11, 12, 13};
  const auto warm = plan_batch(DomMode::re, 3, 3, losses, ids, 0.2);
  CHECK_FALSE(warm.active);
  CHECK(warm.high_confidence.empty());
  CHECK(warm.retained.size() == 4);
  const auto off = plan_batch(DomMode::off, 9, 3, losses, ids, 0.2);
  CHECK(off.high_confidence.empty());
  const auto p = plan_batch(DomMode::da, 4, 3, losses, ids, 0.2);
  CHECK(p.high_confidence_ids == std::vector<std::uint64_t>{10, 13});
  CHECK(p.retained_ids == std::vector<std::uint64_t>{11, 12});
  CHECK(p.threshold == 0.2);
}

TEST_CASE("RE gradient equals the sub-batch gradient and baseline when nothing is removed") {
  Rng rng(2);
  const Model m = Model::mlp({5}, {6}, 3, 1);
  const Batch b = test::make_batch(test::random_batch(8, {5}, rng), test::random_labels(8, 3, rng));
  const StepContext ctx;
  const auto nt = evaluate_loss(m, b.x, b.y).values;
  const double thr = percentile(nt, 40);
  const auto plan = plan_batch(DomMode::re, 2, 1, nt, b.ids, thr);
  REQUIRE_FALSE(plan.high_confidence.empty());
  const auto re = dom_re_grad(m, b, plan, ctx);
  const Batch kept = subset(b, plan.retained);
  const auto ref = backward(m, kept.x, kept.y).param_grad;
  CHECK(re.count == plan.retained.size());
  CHECK(re.grads == ref);

  const auto none = plan_batch(DomMode::re, 2, 1, nt, b.ids, 0.0);
  CHECK(dom_re_grad(m, b, none, ctx).grads == baseline_grad(m, b, ctx).grads);

  const auto all = plan_batch(DomMode::re, 2, 1, nt, b.ids, 1e9);
  const auto empty = dom_re_grad(m, b, all, ctx);
  CHECK(empty.count == 0);
}

TEST_CASE("adversarial RE attacks only retained samples yet matches generate-then-mask") {
  Rng rng(3);
  const Model m = Model::mlp({5}, {6}, 3, 1);
  const Batch b = test::make_batch(test::random_batch(8, {5}, rng), test::random_labels(8, 3, rng), 100);
  const AttackSpec spec{0.05, 0.02, 3, true, true, false};
  const StepContext ctx{Paradigm::at_multi, &spec, 17, nullptr};
  const auto nt = evaluate_loss(m, b.x, b.y).values;
  const auto plan = plan_batch(DomMode::re, 2, 1, nt, b.ids, percentile(nt, 50));
  const auto fast = dom_re_grad(m, b, plan, ctx, false);
  const auto strict = dom_re_grad(m, b, plan, ctx, true);
  CHECK(fast.grads == strict.grads);
  const StepContext missing{Paradigm::at_multi, nullptr, 0, nullptr};
  CHECK_THROWS_AS(dom_re_grad(m, b, plan, missing), ConfigError);
}

TEST_CASE("DA transform follows the accept-or-blend trace") {
  // Loss of a draw is its first entry; threshold 0.5.
  const BatchLossFn loss = [](const Tensor& x, std::span<const int>) {
    std::vector<double> out;
    for (std::size_t i = 0; i < x.batch(); ++i) out.push_back(x.sample(i)[0]);
    return out;
  };
  const Batch hc = test::make_batch(Tensor({3, 2}, std::vector<double>{0.2, 0.4, 0.1, 0.1, 0.3, 0.3}), {0, 1, 2});
  ScriptedSource src;
  // id 0: fails, fails, accepts on draw 3. id 1: accepts at once. id 2: never accepts.
  src.script[{0, 1}] = {0.1, 0.9};
  src.script[{0, 2}] = {0.2, 0.8};
  src.script[{0, 3}] = {0.7, 0.6};
  src.script[{1, 1}] = {0.9, 0.0};
  src.script[{2, 1}] = {0.0, 1.0};
  src.script[{2, 2}] = {0.4, 0.2};
  src.script[{2, 3}] = {0.5, 0.1};
  const auto r = dom_da_transform(loss, hc, 0.5, 0.25, 3, src);
  CHECK(r.accepted_at == std::vector<int>{3, 1, 0});
  CHECK(r.evaluations == 3 + 1 + 3);
  CHECK(src.calls == 7);
  CHECK(r.x.sample(0)[0] == 0.7);
  CHECK(r.x.sample(0)[1] == 0.6);
  CHECK(r.x.sample(1)[0] == 0.9);
  // exactly at threshold is not accepted; blend of original with draw 3
  CHECK(r.x.sample(2)[0] == 0.3 * 0.75 + 0.5 * 0.25);
  CHECK(r.x.sample(2)[1] == 0.3 * 0.75 + 0.1 * 0.25);
  CHECK(r.accepted() == 2);
}

TEST_CASE("DA with zero strength and no accepted draw returns the input") {
  const BatchLossFn low = [](const Tensor& x, std::span<const int>) { return std::vector<double>(x.batch(), 0.0); };
  Rng rng(1);
  const Batch hc = test::make_batch(test::random_batch(4, {3}, rng), {0, 1, 0, 1});
  FamilyAugmentSource src(all_augment_kinds(), {3}, 0.8, 5);
  const auto r = dom_da_transform(low, hc, 0.2, 0.0, 3, src);
  CHECK(r.x == hc.x);
  CHECK(r.evaluations == 12);
  CHECK_THROWS_AS(dom_da_transform(low, hc, 0.2, 0.5, 0, src), ConfigError);
}

TEST_CASE("DA gradient equals backward on the assembled batch") {
  Rng rng(4);
  const Model m = Model::mlp({4}, {5}, 2, 3);
  const Batch b = test::make_batch(test::random_batch(6, {4}, rng), test::random_labels(6, 2, rng));
  const auto nt = evaluate_loss(m, b.x, b.y).values;
  const auto plan = plan_batch(DomMode::da, 2, 1, nt, b.ids, percentile(nt, 50));
  const Tensor repl = test::random_batch(plan.high_confidence.size(), {4}, rng);
  const auto g = dom_da_grad(m, b, plan, repl, StepContext{});
  Batch manual = b;
  for (std::size_t k = 0; k < plan.high_confidence.size(); ++k) {
    std::copy(repl.sample(k).begin(), repl.sample(k).end(), manual.x.sample(plan.high_confidence[k]).begin());
  }
  CHECK(g.grads == backward(m, manual.x, manual.y).param_grad);
  const auto none = plan_batch(DomMode::da, 2, 1, nt, b.ids, 0.0);
  CHECK(dom_da_grad(m, b, none, Tensor(), StepContext{}).grads == baseline_grad(m, b, StepContext{}).grads);
}

TEST_CASE("family source draws are keyed by id and iteration") {
  FamilyAugmentSource a(all_augment_kinds(), {1, 4, 4}, 0.5, 9);
  FamilyAugmentSource b(all_augment_kinds(), {1, 4, 4}, 0.5, 9);
  std::vector<double> x(16, 0.5);
  CHECK(a.draw(x, 3, 1) == b.draw(x, 3, 1));
  (void)a.draw(x, 4, 1);
  CHECK(a.draw(x, 3, 2) == b.draw(x, 3, 2));
}

TEST_CASE("mode and paradigm names parse") {
  CHECK(parse_dom_mode("RE") == DomMode::re);
  CHECK(parse_dom_mode("DA") == DomMode::da);
  CHECK_FALSE(parse_dom_mode("xx").has_value());
  CHECK(parse_paradigm("at_single") == Paradigm::at_single);
  CHECK(to_string(DomMode::off) == "off");
}
