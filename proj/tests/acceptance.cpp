// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dom/attack.hpp"
#include "dom/config.hpp"
#include "dom/loss.hpp"
#include "dom/optim.hpp"
#include "dom/report.hpp"
#include "dom/runner.hpp"
#include "dom/scheduler.hpp"
#include "dom/telemetry.hpp"
#include "support.hpp"

using namespace dom;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------- 1

Model gradient_arch(int kind, std::uint64_t seed) {
  using K = LayerKind;
  switch (kind) {
    case 0: return Model({5}, {{K::affine, 3}}, seed);
    case 1: return Model({5}, {{K::affine, 6}, {K::relu}, {K::affine, 3}}, seed);
    case 2: return Model({2, 5, 5}, {{K::conv3x3, 3}, {K::flatten}, {K::affine, 3}}, seed);
    case 3: return Model({2, 6, 6}, {{K::maxpool2x2}, {K::flatten}, {K::affine, 3}}, seed);
    case 4: return Model({2, 3, 3}, {{K::flatten}, {K::affine, 3}}, seed);
    case 5: return Model::mlp({2, 3, 3}, {8, 6}, 4, seed);
    default: return Model::convnet({2, 8, 8}, {3, 4}, 3, seed);
  }
}

Outcome gradient_oracle() {
  constexpr int kArchs = 7, kPerArch = 16;
  Rng rng(101);
  double worst = 0.0;
  std::size_t checks = 0;
  int instances = 0, rejected = 0;
  std::set<LayerKind> kinds;
  for (int a = 0; a < kArchs; ++a) {
    for (int k = 0; k < kPerArch; ++k) {
      Model m = gradient_arch(a, 1000 + static_cast<std::uint64_t>(a * kPerArch + k));
      for (const auto& l : m.layers()) kinds.insert(l.spec.kind);
      Tensor x;
      bool ok = false;
      for (int attempt = 0; attempt < 50 && !ok; ++attempt) {
        x = test::random_batch(2, m.input_shape(), rng, -1.0, 1.0);
        ok = test::smooth_at(m, x);
        if (!ok) ++rejected;
      }
      if (!ok) return {false, "no smooth point found for architecture " + std::to_string(a)};
      const auto y = test::random_labels(2, static_cast<int>(m.num_classes()), rng);
      const LossGradients g = backward(m, x, y);
      for (std::size_t i = 0; i < m.param_count(); ++i) {
        worst = std::max(worst, test::rel_error(g.param_grad[i], test::fd_param(m, x, y, i)));
        ++checks;
      }
      for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t j = 0; j < x.sample_size(); ++j) {
          worst = std::max(worst, test::rel_error(g.input_grad.sample(b)[j], test::fd_input(m, x, y, b, j)));
          ++checks;
        }
      }
      ++instances;
    }
  }
  const bool all_kinds = kinds.size() == 5;
  return {worst < 1e-4 && instances >= 100 && all_kinds,
          std::to_string(instances) + " instances, " + std::to_string(checks) + " gradient entries, " +
              std::to_string(kinds.size()) + " layer types, max rel error " + fmt(worst, 3) + ", " +
              std::to_string(rejected) + " non-smooth draws redrawn"};
}

// ---------------------------------------------------------------- 2

Outcome attack_invariants() {
  Rng rng(202);
  const std::vector<Model> models{Model::mlp({6}, {8}, 3, 1), Model::mlp({10}, {12, 6}, 4, 2),
                                  Model::convnet({1, 6, 6}, {2}, 3, 3)};
  double worst_ball = 0.0;
  std::size_t box_violations = 0, ball_violations = 0, equal_pairs = 0, unequal_pairs = 0;
  constexpr int kInvocations = 10000;
  for (int it = 0; it < kInvocations; ++it) {
    const Model& m = models[static_cast<std::size_t>(it) % models.size()];
    Tensor x = test::random_batch(4, m.input_shape(), rng);
    for (auto& v : x.values()) {
      const double u = rng.uniform();
      if (u < 0.1) v = 0.0;
      else if (u < 0.2) v = 1.0;
    }
    Batch b = test::make_batch(std::move(x), test::random_labels(4, static_cast<int>(m.num_classes()), rng),
                               rng.below(1u << 20));
    AttackSpec spec;
    spec.epsilon = rng.uniform(0.005, 0.3);
    spec.alpha = spec.epsilon * rng.uniform(0.25, 1.5);
    spec.steps = 1 + static_cast<int>(rng.below(5));
    spec.random_init = rng.bernoulli(0.8);
    spec.clip_pixels = rng.bernoulli(0.5);
    spec.resample_eta = rng.bernoulli(0.2);
    const std::uint64_t seed = rng.next();

    Perturbation p;
    if (spec.steps == 1 && spec.random_init) {
      spec.resample_eta = false;
      p = rs_fgsm(m, b, spec, seed);
      const Perturbation q = pgd(m, b, spec, seed);
      if (std::equal(p.delta.values().begin(), p.delta.values().end(), q.delta.values().begin(),
                     q.delta.values().end())) {
        ++equal_pairs;
      } else {
        ++unequal_pairs;
      }
    } else {
      p = pgd(m, b, spec, seed);
    }
    for (std::size_t i = 0; i < p.delta.size(); ++i) {
      const double d = std::abs(p.delta[i]);
      worst_ball = std::max(worst_ball, d - spec.epsilon);
      if (d > spec.epsilon + 1e-12) ++ball_violations;
      if (spec.clip_pixels) {
        const double z = b.x[i] + p.delta[i];
        if (z < 0.0 || z > 1.0) ++box_violations;
      }
    }
  }
  return {ball_violations == 0 && box_violations == 0 && unequal_pairs == 0 && equal_pairs > 0,
          std::to_string(kInvocations) + " attacks, ball violations " + std::to_string(ball_violations) +
              " (max excess " + fmt(worst_ball, 3) + "), box violations " + std::to_string(box_violations) +
              ", single-step pgd == rs_fgsm in " + std::to_string(equal_pairs) + "/" +
              std::to_string(equal_pairs + unequal_pairs)};
}

// ---------------------------------------------------------------- 3

Outcome re_equivalence() {
  Rng rng(303);
  const AttackSpec spec{0.05, 0.02, 3, true, true, false};
  double worst_mask = 0.0, worst_sub = 0.0, worst_strict = 0.0;
  std::size_t step_mismatches = 0;
  for (int it = 0; it < 100; ++it) {
    const Model m = it % 2 == 0 ? Model::mlp({6}, {8}, 3, 10 + it) : Model::convnet({1, 6, 6}, {2}, 3, 10 + it);
    const std::size_t n = 4 + rng.below(13);
    const Batch b = test::make_batch(test::random_batch(n, m.input_shape(), rng),
                                     test::random_labels(n, 3, rng), 1000 * static_cast<std::uint64_t>(it));
    const auto nt = evaluate_loss(m, b.x, b.y).values;
    const auto plan = plan_batch(DomMode::re, 2, 1, nt, b.ids, percentile(nt, rng.uniform(10.0, 90.0)));
    const auto re = dom_re_grad(m, b, plan, StepContext{});

    // Full-batch loss with high-confidence rows masked out, mean over retained.
    const ForwardTrace tr = m.forward_trace(b.x);
    Tensor gl = softmax_xent_grad(tr.logits(), b.y);
    std::vector<bool> hc(n, false);
    for (auto i : plan.high_confidence) hc[i] = true;
    const double scale = 1.0 / static_cast<double>(plan.retained.size());
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : gl.sample(i)) v = hc[i] ? 0.0 : v * scale;
    }
    const auto masked = m.backward(tr, gl).param_grad;
    const Batch kept = subset(b, plan.retained);
    const auto sub = backward(m, kept.x, kept.y).param_grad;
    for (std::size_t i = 0; i < masked.size(); ++i) {
      worst_mask = std::max(worst_mask, std::abs(masked[i] - re.grads[i]));
      worst_sub = std::max(worst_sub, std::abs(sub[i] - re.grads[i]));
    }

    const StepContext adv{Paradigm::at_multi, &spec, 77 + static_cast<std::uint64_t>(it), nullptr};
    const auto fast = dom_re_grad(m, b, plan, adv, false);
    const auto strict = dom_re_grad(m, b, plan, adv, true);
    for (std::size_t i = 0; i < fast.grads.size(); ++i) {
      worst_strict = std::max(worst_strict, std::abs(fast.grads[i] - strict.grads[i]));
    }

    // Every loss at or above the threshold: nothing is high confidence.
    const double floor = *std::min_element(nt.begin(), nt.end());
    const auto none = plan_batch(DomMode::re, 2, 1, nt, b.ids, floor);
    for (const StepContext& ctx : {StepContext{}, adv}) {
      Model a = m, c = m;
      Sgd sa, sc;
      sa.step(a, dom_re_grad(m, b, none, ctx).grads, 0.1);
      sc.step(c, baseline_grad(m, b, ctx).grads, 0.1);
      if (!std::equal(a.params().begin(), a.params().end(), c.params().begin(), c.params().end())) ++step_mismatches;
    }
  }
  return {worst_mask <= 1e-12 && worst_sub <= 1e-12 && worst_strict <= 1e-12 && step_mismatches == 0,
          "100 batches, max |masked - RE| " + fmt(worst_mask, 3) + ", max |sub-batch - RE| " + fmt(worst_sub, 3) +
              ", adversarial generate-then-mask " + fmt(worst_strict, 3) + ", baseline step mismatches " +
              std::to_string(step_mismatches) + "/200"};
}

// ---------------------------------------------------------------- 4

class ScriptedSource : public AugmentSource {
 public:
  std::map<std::pair<std::uint64_t, int>, std::vector<double>> script;
  std::size_t calls = 0;
  std::vector<double> draw(std::span<const double>, std::uint64_t id, int iteration) override {
    ++calls;
    return script.at({id, iteration});
  }
};

Outcome da_trace() {
  Rng rng(404);
  std::size_t trials = 0, mismatches = 0, budget_violations = 0, accepted = 0, exhausted = 0;
  for (int gamma : {1, 2, 3, 5}) {
    for (double beta : {0.0, 0.5, 1.0}) {
      for (int t = 0; t < 50; ++t) {
        ++trials;
        const std::size_t n = 1 + rng.below(8), dim = 4;
        const Batch hc = test::make_batch(test::random_batch(n, {dim}, rng), test::random_labels(n, 3, rng),
                                          rng.below(1u << 30));
        ScriptedSource src;
        for (std::size_t i = 0; i < n; ++i) {
          for (int k = 1; k <= gamma; ++k) {
            std::vector<double> d(dim);
            for (auto& v : d) v = rng.uniform();
            src.script[{hc.ids[i], k}] = d;
          }
        }
        // Loss of a draw is twice its first entry; threshold 1 accepts about half.
        std::size_t rows = 0;
        const BatchLossFn loss = [&rows](const Tensor& x, std::span<const int>) {
          std::vector<double> out;
          for (std::size_t i = 0; i < x.batch(); ++i) out.push_back(2.0 * x.sample(i)[0]);
          rows += x.batch();
          return out;
        };
        const double thr = 1.0;
        const DaResult r = dom_da_transform(loss, hc, thr, beta, gamma, src);

        // Hand trace: draw k is kept if its loss exceeds the threshold, else the
        // candidate is the original blended with draw k.
        std::vector<double> want_x;
        std::vector<int> want_at(n, 0);
        std::size_t want_evals = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const auto x0 = hc.x.sample(i);
          std::vector<double> cur(x0.begin(), x0.end());
          for (int k = 1; k <= gamma; ++k) {
            const auto& d = src.script.at({hc.ids[i], k});
            ++want_evals;
            if (2.0 * d[0] > thr) {
              cur = d;
              want_at[i] = k;
              break;
            }
            for (std::size_t j = 0; j < dim; ++j) cur[j] = std::clamp(x0[j] * (1.0 - beta) + d[j] * beta, 0.0, 1.0);
          }
          want_x.insert(want_x.end(), cur.begin(), cur.end());
          if (want_at[i] > 0) ++accepted;
          else ++exhausted;
        }
        const bool same = r.accepted_at == want_at && r.evaluations == want_evals && src.calls == want_evals &&
                          rows == want_evals && r.x.values() == want_x;
        if (!same) ++mismatches;
        if (rows > static_cast<std::size_t>(gamma) * n) ++budget_violations;
      }
    }
  }
  return {mismatches == 0 && budget_violations == 0 && accepted > 0 && exhausted > 0,
          std::to_string(trials) + " scripted traces over gamma {1,2,3,5} x beta {0,0.5,1}, mismatches " +
              std::to_string(mismatches) + ", budget violations " + std::to_string(budget_violations) + ", " +
              std::to_string(accepted) + " accepted / " + std::to_string(exhausted) + " exhausted samples"};
}

// ---------------------------------------------------------------- 5

Outcome threshold_rules() {
  Rng rng(505);
  double worst = 0.0;
  std::size_t misclassified = 0, at_threshold = 0;
  for (int it = 0; it < 1000; ++it) {
    const std::size_t n = 1 + rng.below(256);
    std::vector<double> losses(n);
    for (auto& l : losses) l = rng.bernoulli(0.2) ? std::round(rng.uniform(0.0, 3.0) * 4.0) / 4.0 : -std::log(rng.uniform(1e-6, 1.0));
    std::vector<double> s = losses;
    std::sort(s.begin(), s.end());
    const double pos = 0.4 * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double oracle = s[lo] + (s[hi] - s[lo]) * (pos - static_cast<double>(lo));
    worst = std::max(worst, std::abs(resolve_threshold(ThresholdRule::adaptive(40), losses) - oracle));

    const double t = losses[rng.below(n)];
    std::vector<std::uint64_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    const auto plan = plan_batch(DomMode::re, 2, 1, losses, ids, resolve_threshold(ThresholdRule::fixed(t), losses));
    std::set<std::size_t> retained(plan.retained.begin(), plan.retained.end());
    for (std::size_t i = 0; i < n; ++i) {
      if (losses[i] == t) ++at_threshold;
      if ((losses[i] < t) == (retained.count(i) > 0)) ++misclassified;
    }
  }
  return {worst <= 1e-12 && misclassified == 0,
          "1000 batches, max |adaptive(40) - oracle| " + fmt(worst, 3) + ", " + std::to_string(at_threshold) +
              " losses equal to the fixed threshold, misclassified " + std::to_string(misclassified)};
}

// ---------------------------------------------------------------- 6

std::array<double, 10> brute_force_deciles(const LossById& nat, const LossById& adv) {
  const std::size_t n = nat.size();
  auto groups = [n](const LossById& l) {
    std::map<std::uint64_t, std::size_t> g;
    std::vector<std::size_t> bounds;
    std::size_t acc = 0;
    for (std::size_t k = 0; k < 10; ++k) {
      acc += n / 10 + (k < n % 10 ? 1 : 0);
      bounds.push_back(acc);
    }
    for (const auto& [id, v] : l) {
      std::size_t rank = 0;
      for (const auto& [id2, v2] : l) {
        if (v2 < v || (v2 == v && id2 < id)) ++rank;
      }
      std::size_t k = 0;
      while (rank >= bounds[k]) ++k;
      g[id] = k;
    }
    return g;
  };
  const auto gn = groups(nat), ga = groups(adv);
  std::array<double, 10> out{};
  std::array<double, 10> size{};
  for (const auto& [id, k] : gn) {
    size[k] += 1.0;
    if (ga.at(id) == k) out[k] += 1.0;
  }
  for (std::size_t k = 0; k < 10; ++k) out[k] /= size[k];
  return out;
}

Outcome telemetry_oracles() {
  Rng rng(606);
  std::size_t prop_mismatch = 0, decile_mismatch = 0;
  for (int it = 0; it < 300; ++it) {
    std::vector<double> edges = default_bin_edges();
    if (it % 2 == 1) {
      edges = {0.0};
      for (int k = 0, nb = 1 + static_cast<int>(rng.below(6)); k < nb; ++k) edges.push_back(edges.back() + rng.uniform(0.05, 1.0));
      edges.push_back(std::numeric_limits<double>::infinity());
    }
    const std::size_t n = 1 + rng.below(500);
    std::vector<double> losses(n);
    for (auto& l : losses) {
      l = rng.bernoulli(0.2) ? edges[rng.below(edges.size() - 1)] : rng.uniform(0.0, 3.0);
    }
    std::vector<double> s = losses;
    std::sort(s.begin(), s.end());
    const auto got = loss_range_proportions(losses, edges);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
      const auto count = std::lower_bound(s.begin(), s.end(), edges[k + 1]) - std::lower_bound(s.begin(), s.end(), edges[k]);
      if (got[k] != static_cast<double>(count) / static_cast<double>(n)) ++prop_mismatch;
    }

    const std::size_t m = 10 + rng.below(300);
    LossById nat, adv;
    for (std::size_t i = 0; i < m; ++i) {
      const std::uint64_t id = 7 * i + rng.below(7);
      nat[id] = std::round(rng.uniform(0.0, 2.0) * 20.0) / 20.0;
      adv[id] = rng.bernoulli(0.5) ? nat[id] + rng.uniform(0.0, 0.3) : std::round(rng.uniform(0.0, 4.0) * 10.0) / 10.0;
    }
    if (overlap_rate_deciles(nat, adv) != brute_force_deciles(nat, adv)) ++decile_mismatch;
  }

  LossById same, rev;
  for (std::uint64_t id = 0; id < 100; ++id) {
    same[id] = static_cast<double>(id) * 0.01;
    rev[id] = 10.0 - static_cast<double>(id) * 0.01;
  }
  const auto ones = overlap_rate_deciles(same, same);
  const auto zeros = overlap_rate_deciles(same, rev);
  const bool ends = std::all_of(ones.begin(), ones.end(), [](double v) { return v == 1.0; }) &&
                    std::all_of(zeros.begin(), zeros.end(), [](double v) { return v == 0.0; });
  return {prop_mismatch == 0 && decile_mismatch == 0 && ends,
          "300 proportion and decile trials, proportion mismatches " + std::to_string(prop_mismatch) +
              ", decile mismatches " + std::to_string(decile_mismatch) + ", identical -> 1 and reversed -> 0 " +
              (ends ? "hold" : "fail")};
}

// ---------------------------------------------------------------- 7

RunConfig memorization_config(std::uint64_t seed, KeyValues extra = {}) {
  KeyValues kv{{"paradigm", "natural"},
               {"data.n_train", "2000"},
               {"data.label_noise", "0.2"},
               {"data.cluster_std", "0.3"},
               {"lr.base", "0.2"},
               {"train.epochs", "60"},
               {"lr.decay_epochs", "30,45"},
               {"telemetry.checkpoints", "false"},
               {"seed", std::to_string(seed)},
               {"data.seed", std::to_string(seed)}};
  kv.insert(kv.end(), extra.begin(), extra.end());
  return parse_config("", kv);
}

RunOptions in_memory() {
  RunOptions o;
  o.write_outputs = false;
  return o;
}

Outcome memorization_reproduction() {
  const std::vector<std::uint64_t> seeds{11, 12, 13, 14, 15};
  std::string jumps, gaps, rises;
  double min_jump = 1.0, base_gap = 0.0, re_gap = 0.0;
  int first_decay = 0;
  for (auto s : seeds) {
    const RunConfig cfg = memorization_config(s);
    first_decay = cfg.lr.decay_epochs.front();
    const auto base = run(cfg, in_memory());
    const auto& e = base.report.epochs;
    const double before = *e[static_cast<std::size_t>(first_decay) - 1].train_hc_fraction;
    double after = before;
    for (int k = first_decay + 1; k <= first_decay + 5; ++k) {
      after = std::max(after, *e[static_cast<std::size_t>(k) - 1].train_hc_fraction);
    }
    min_jump = std::min(min_jump, after - before);
    jumps += " " + fmt(100.0 * (after - before), 3);

    const auto re = run(memorization_config(s, {{"dom.mode", "RE"}}), in_memory());
    base_gap += std::abs(base.report.diff) / static_cast<double>(seeds.size());
    re_gap += std::abs(re.report.diff) / static_cast<double>(seeds.size());
    gaps += " " + fmt(std::abs(base.report.diff), 3) + "/" + fmt(std::abs(re.report.diff), 3);
  }
  const bool a = min_jump >= 0.10;

  bool b = true;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto r = run(memorization_config(seeds[k], {{"telemetry.probe_epoch", std::to_string(first_decay + 5)}}),
                       in_memory());
    if (!r.persistence) {
      b = false;
      rises += " empty-group";
      continue;
    }
    const auto& p = *r.persistence;
    const double orig = p.original.back() - p.original.front();
    const double trans = p.transformed.back() - p.transformed.front();
    b = b && trans < orig;
    rises += " " + fmt(orig, 3) + "/" + fmt(trans, 3);
  }
  const bool c = re_gap < base_gap;

  return {a && b && c, std::string("(a) ") + (a ? "pass" : "FAIL") + ": high-confidence jump pp per seed" + jumps +
                           "; (b) " + (b ? "pass" : "FAIL") + ": loss rise original/transformed" + rises + "; (c) " +
                           (c ? "pass" : "FAIL") + ": |diff| baseline/RE per seed" + gaps + ", mean " +
                           fmt(base_gap, 4) + " vs " + fmt(re_gap, 4)};
}

// ---------------------------------------------------------------- 8

Outcome adversarial_overlap() {
  std::string detail;
  bool pass = true;
  for (std::uint64_t s : {21u, 22u, 23u}) {
    const KeyValues kv{{"paradigm", "at_multi"},
                       {"model.arch", "convnet"},
                       {"model.channels", "8,16"},
                       {"data.shape", "1,8,8"},
                       {"data.classes", "2"},
                       {"data.n_train", "1000"},
                       {"data.n_test", "500"},
                       {"data.label_noise", "0"},
                       {"data.standard_augment", "false"},
                       {"attack.epsilon", "0.05"},
                       {"attack.alpha", "0.02"},
                       {"attack.steps", "3"},
                       {"eval.epsilon", "0.05"},
                       {"eval.alpha", "0.02"},
                       {"eval.steps", "3"},
                       {"train.epochs", "20"},
                       {"lr.decay_epochs", "10,15"},
                       {"train.batch_size", "64"},
                       {"telemetry.checkpoints", "false"},
                       {"seed", std::to_string(s)},
                       {"data.seed", std::to_string(s)}};
    const auto r = run(parse_config("", kv), in_memory());
    const double top = (*r.deciles)[0];
    const double acc = r.report.epochs.back().test_acc;
    pass = pass && top >= 0.6 && acc > 90.0;
    detail += (detail.empty() ? "" : ", ") + std::string("seed ") + std::to_string(s) + ": top-decile overlap " +
              fmt(top, 3) + " (test acc " + fmt(acc, 3) + "%, robust " + fmt(*r.report.epochs.back().robust_acc, 3) +
              "%)";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- 9

Outcome report_protocol() {
  std::vector<EpochRecord> h(3);
  const double errs[] = {5.0, 4.7, 4.84};
  for (int i = 0; i < 3; ++i) {
    h[static_cast<std::size_t>(i)].epoch = i + 1;
    h[static_cast<std::size_t>(i)].test_error = errs[i];
  }
  const auto r = finalize_report(h, SelectionMetric::min_test_error);
  const bool ok = r.best.epoch == 2 && r.best.error == 4.7 && r.last.error == 4.84 && r.diff == 4.7 - 4.84 &&
                  std::abs(r.diff + 0.14) < 1e-12;
  return {ok, "best " + fmt(r.best.error, 17) + " (epoch " + std::to_string(r.best.epoch) + "), last " +
                  fmt(r.last.error, 17) + ", diff " + fmt(r.diff, 17)};
}

// ---------------------------------------------------------------- 10

std::string numeric_fields(const std::filesystem::path& report) {
  std::ifstream in(report);
  auto j = nlohmann::json::parse(in);
  j.erase("timing");
  return j.dump();
}

Outcome reproducibility() {
  std::string detail;
  bool pass = true;
  const std::vector<KeyValues> cases{
      {{"paradigm", "natural"}, {"dom.mode", "DA"}, {"data.shape", "1,8,8"}, {"data.n_train", "300"},
       {"model.arch", "convnet"}, {"model.channels", "4"}, {"train.epochs", "4"}, {"lr.decay_epochs", "2"},
       {"dom.threshold", "0.8"}, {"seed", "31"}},
      {{"paradigm", "at_multi"}, {"dom.mode", "RE"}, {"dom.threshold_rule", "adaptive"}, {"data.n_train", "300"},
       {"attack.steps", "3"}, {"eval.steps", "3"}, {"train.epochs", "4"}, {"lr.decay_epochs", "2"}, {"seed", "32"}},
      {{"paradigm", "at_single"}, {"dom.mode", "DA"}, {"data.n_train", "300"}, {"eval.steps", "3"},
       {"train.epochs", "4"}, {"dom.warmup", "2"}, {"seed", "33"}}};
  for (std::size_t k = 0; k < cases.size(); ++k) {
    std::string doc[2];
    for (int rep = 0; rep < 2; ++rep) {
      RunConfig cfg = parse_config("", cases[k]);
      cfg.output_dir = test::scratch("repro_" + std::to_string(k) + "_" + std::to_string(rep)).string();
      run(cfg);
      doc[rep] = numeric_fields(std::filesystem::path(cfg.output_dir) / "report.json");
    }
    const bool same = doc[0] == doc[1];
    pass = pass && same;
    detail += (k ? ", " : "") + get_config_value(parse_config("", cases[k]), "paradigm") + "/" +
              get_config_value(parse_config("", cases[k]), "dom.mode") + (same ? " identical" : " DIFFERENT");
  }
  return {pass, detail};
}

}  // namespace

int main() {
  struct Criterion {
    std::string name;
    std::function<Outcome()> check;
    // Wall-clock budget in seconds; zero means unbounded.
    double budget;
  };
  const std::vector<Criterion> criteria{{"gradient oracle", gradient_oracle, 60.0},
                                        {"attack invariants", attack_invariants, 60.0},
                                        {"RE equivalence", re_equivalence, 0.0},
                                        {"DA trace conformance", da_trace, 0.0},
                                        {"threshold rules", threshold_rules, 0.0},
                                        {"telemetry oracles", telemetry_oracles, 0.0},
                                        {"desk-scale over-memorization", memorization_reproduction, 600.0},
                                        {"desk-scale adversarial overlap", adversarial_overlap, 600.0},
                                        {"report protocol", report_protocol, 0.0},
                                        {"reproducibility", reproducibility, 0.0}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criteria[i].budget > 0.0 && secs >= criteria[i].budget) {
      o.pass = false;
      o.detail += "; over the " + fmt(criteria[i].budget, 3) + " s budget";
    }
    if (!o.pass) ++failed;
    std::printf("%s %zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
