#include <atomic>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "evasion/scenario.hpp"
#include "test_util.hpp"

using namespace evasion;

namespace {

/// Forwards to a model and counts how it is used.
class RecordingTarget : public Classifier {
 public:
  explicit RecordingTarget(const Classifier& inner) : inner_(inner) {}
  std::size_t dim() const override { return inner_.dim(); }
  double discriminant(VectorView x) const override {
    ++discriminant_calls;
    return inner_.discriminant(x);
  }
  Vector discriminant_grad(VectorView x) const override {
    ++grad_calls;
    return inner_.discriminant_grad(x);
  }
  double decision_offset() const override { return inner_.decision_offset(); }

  mutable std::atomic<long> discriminant_calls{0};
  mutable std::atomic<long> grad_calls{0};

 private:
  const Classifier& inner_;
};

struct Fixture {
  Dataset train, test;
  TrainedModel target;
};

Fixture linear_fixture(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Dataset train = testutil::blobs(gen, 60, 3, 3.0);
  Dataset test = testutil::blobs(gen, 60, 3, 3.0);
  TrainedModel target(train_linear_svm(train, 1.0));
  return {std::move(train), std::move(test), std::move(target)};
}

AttackSpec l2_attack(std::size_t dim, double d_max) {
  AttackSpec a;
  a.distance = DistanceKind::L2;
  a.d_max = d_max;
  a.step_size = 0.1;
  a.bounds = FeatureBounds::unbounded(dim);
  return a;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("surrogate sampling") {
  const Fixture f = linear_fixture(1);
  ScenarioSpec s;
  s.kind = Knowledge::Limited;
  s.n_surrogate = 100;
  const Dataset a = build_surrogate(f.target, f.test, s, 7);
  CHECK(a.size() == 100);
  std::set<std::vector<double>> distinct;
  for (const auto& x : a.samples()) distinct.insert(x.x);
  CHECK(distinct.size() == 100);
  const Dataset b = build_surrogate(f.target, f.test, s, 7);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].x == b[i].x);
  // relabeling: every label equals the target's prediction
  for (const auto& x : a.samples()) CHECK(x.y == f.target.predict(x.x));
  s.n_surrogate = 1000;
  CHECK_THROWS(build_surrogate(f.target, f.test, s, 7));
}

TEST_CASE("relabeling by a perfectly accurate target keeps the labels") {
  std::mt19937_64 gen(2);
  const Dataset d = testutil::blobs(gen, 40, 2, 12.0);
  const TrainedModel target(train_linear_svm(d, 1.0));
  REQUIRE(accuracy(target, d) == 1.0);
  ScenarioSpec s;
  s.kind = Knowledge::Limited;
  s.n_surrogate = 30;
  const Dataset sur = build_surrogate(target, d, s, 3);
  for (const auto& x : sur.samples()) {
    bool found = false;
    for (const auto& y : d.samples())
      if (y.x == x.x) {
        CHECK(y.y == x.y);
        found = true;
      }
    CHECK(found);
  }
  s.relabel_with_target = false;
  CHECK(build_surrogate(target, d, s, 3).size() == 30);
}

TEST_CASE("single-class surrogate pools are rejected after retries") {
  std::vector<Sample> s;
  for (int i = 0; i < 10; ++i) s.push_back({{double(i)}, Label::Malicious});
  const Dataset pool(1, s);
  const TrainedModel always_mal(LinearModel{{0.0}, 1.0});
  ScenarioSpec spec;
  spec.kind = Knowledge::Limited;
  spec.n_surrogate = 5;
  CHECK_THROWS_WITH(build_surrogate(always_mal, pool, spec, 1), doctest::Contains("class"));
}

TEST_CASE("scenario validation and defaults") {
  ScenarioSpec s;
  s.kind = Knowledge::Limited;
  s.n_surrogate = 1;
  CHECK_THROWS(s.validate());
  s.n_surrogate = 2;
  s.repeats = 0;
  CHECK_THROWS(s.validate());
  s.kind = Knowledge::Perfect;
  CHECK(s.effective_repeats() == 1);

  ModelParams rbf;
  rbf.kind = ModelKind::KernelSvm;
  rbf.kernel = KernelSpec::rbf(0.001);
  const ModelParams sr = default_surrogate_params(rbf);
  CHECK(sr.C == 100.0);
  CHECK(sr.kernel.gamma == 0.1);
  ModelParams mlp;
  mlp.kind = ModelKind::Mlp;
  mlp.mlp.hidden = 9;
  CHECK(default_surrogate_params(mlp).mlp.hidden == 9);
  CHECK(knowledge_from_string("LK") == Knowledge::Limited);
}

TEST_CASE("PK passes straight through to the attack") {
  const Fixture f = linear_fixture(3);
  const AttackSpec a = l2_attack(3, 2.0);
  ScenarioSpec s;
  const ScenarioResult r = run_scenario({f.target, f.train, f.test, f.test}, a, s, {});
  CHECK(r.repeats == 1);
  std::size_t mal = 0;
  for (const auto& x : f.test.samples()) mal += x.y == Label::Malicious;
  CHECK(r.n_malicious == mal);
  CHECK(r.records.size() + r.misclassified.size() == mal);
  for (const auto& rec : r.records) {
    AttackTrace direct = evade_continuous(f.target, a, f.test[rec.sample_index].x);
    judge_trace(direct, f.target);
    CHECK(rec.trace.points == direct.points);
    CHECK(rec.trace.evaded == direct.evaded);
  }
  for (auto i : r.misclassified) CHECK(f.target.predict(f.test[i].x) == Label::Legitimate);
}

TEST_CASE("PK ignores the surrogate fields") {
  const Fixture f = linear_fixture(4);
  const AttackSpec a = l2_attack(3, 1.0);
  ScenarioSpec s1, s2;
  s2.n_surrogate = 3;
  s2.repeats = 9;
  s2.seed = 99;
  s2.surrogate_params.C = 1e-3;
  const auto r1 = run_scenario({f.target, f.train, f.test, f.test}, a, s1, {});
  const auto r2 = run_scenario({f.target, f.train, f.test, f.test}, a, s2, {});
  REQUIRE(r1.records.size() == r2.records.size());
  for (std::size_t i = 0; i < r1.records.size(); ++i) CHECK(r1.records[i].trace.points == r2.records[i].trace.points);
}

TEST_CASE("LK with a surrogate identical to the target reproduces PK") {
  const Fixture f = linear_fixture(5);
  const AttackSpec a = l2_attack(3, 1.5);
  ScenarioSpec pk;
  ScenarioSpec lk;
  lk.kind = Knowledge::Limited;
  lk.n_surrogate = f.train.size();
  lk.relabel_with_target = false;
  lk.repeats = 2;
  lk.surrogate_params.kind = ModelKind::LinearSvm;
  lk.surrogate_params.C = 1.0;
  const auto rp = run_scenario({f.target, f.train, f.train, f.test}, a, pk, {});
  const auto rl = run_scenario({f.target, f.train, f.train, f.test}, a, lk, {});
  REQUIRE(rl.records.size() == 2 * rp.records.size());
  for (std::size_t i = 0; i < rl.records.size(); ++i) {
    const auto& p = rp.records[i % rp.records.size()];
    CHECK(rl.records[i].sample_index == p.sample_index);
    CHECK(rl.records[i].trace.evaded == p.trace.evaded);
  }
}

TEST_CASE("LK runs one trace per sample per repeat and never reads target gradients") {
  const Fixture f = linear_fixture(6);
  RecordingTarget target(f.target);
  AttackSpec a = l2_attack(3, 2.0);
  a.lambda = 5.0;
  ScenarioSpec lk;
  lk.kind = Knowledge::Limited;
  lk.n_surrogate = 40;
  lk.repeats = 5;
  lk.surrogate_params.C = 100.0;
  ScenarioOptions opts;
  opts.jobs = 4;
  const auto r = run_scenario({target, f.train, f.test, f.test}, a, lk, opts);
  CHECK(target.grad_calls == 0);
  CHECK(target.discriminant_calls > 0);  // relabeling and judging only
  std::map<std::size_t, int> per_sample;
  for (const auto& rec : r.records) ++per_sample[rec.sample_index];
  for (const auto& [idx, n] : per_sample) CHECK(n == 5);

  RecordingTarget pk_target(f.target);
  run_scenario({pk_target, f.train, f.test, f.test}, a, ScenarioSpec{}, opts);
  CHECK(pk_target.grad_calls > 0);
}

TEST_CASE("results do not depend on the worker count") {
  const Fixture f = linear_fixture(7);
  const AttackSpec a = l2_attack(3, 2.0);
  ScenarioSpec lk;
  lk.kind = Knowledge::Limited;
  lk.n_surrogate = 40;
  lk.repeats = 2;
  ScenarioOptions one, many;
  many.jobs = 8;
  const auto r1 = run_scenario({f.target, f.train, f.test, f.test}, a, lk, one);
  const auto r8 = run_scenario({f.target, f.train, f.test, f.test}, a, lk, many);
  REQUIRE(r1.records.size() == r8.records.size());
  for (std::size_t i = 0; i < r1.records.size(); ++i) CHECK(r1.records[i].trace.points == r8.records[i].trace.points);
}

}  // TEST_SUITE
