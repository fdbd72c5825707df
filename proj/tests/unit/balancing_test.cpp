#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "modsel/balancing.hpp"

using namespace modsel;

namespace {

LearnerLedger ledger_with(double bound_value, PlayCount plays = 1) {
  LearnerLedger l;
  l.bound = CandidateBound::data_dependent(100.0);
  for (PlayCount k = 0; k < plays; ++k) l.bound.record(k == 0 ? bound_value : 0.0);
  l.plays = plays;
  return l;
}

MasterState state_of(std::vector<LearnerLedger> ls) {
  MasterState s;
  s.ledgers = std::move(ls);
  for (std::size_t i = 0; i < s.ledgers.size(); ++i) s.ledgers[i].learner_id = i;
  return s;
}

std::vector<LearnerPtr> scripted(const std::vector<double>& means, double constant = 1.0) {
  std::vector<LearnerPtr> out;
  for (std::size_t i = 0; i < means.size(); ++i)
    out.push_back(scripted_learner(means[i], CandidateBound::poly_capped(1, constant, 0.5), i));
  return out;
}

}  // namespace

TEST(SelectLearner, FreshLedgersPickFirst) {
  MasterState s;
  s.ledgers.resize(3);
  EXPECT_EQ(select_learner(s), 0u);
}

TEST(SelectLearner, SmallestBound) {
  EXPECT_EQ(select_learner(state_of({ledger_with(5), ledger_with(3), ledger_with(7)})), 1u);
}

TEST(SelectLearner, SkipsEliminated) {
  auto s = state_of({ledger_with(5), ledger_with(3), ledger_with(7)});
  s.ledgers[1].deactivate();
  EXPECT_EQ(select_learner(s), 0u);
  for (auto& l : s.ledgers) l.deactivate();
  EXPECT_THROW(select_learner(s), StateError);
}

TEST(SelectLearner, TieGoesToFewerPlays) {
  auto s = state_of({ledger_with(2, 4), ledger_with(2, 2)});
  EXPECT_EQ(select_learner(s), 1u);
}

TEST(EliminationTest, SingleLearnerSurvives) {
  auto s = state_of({ledger_with(0, 1000)});
  s.ledgers[0].reward_sum = 0.0;
  EXPECT_TRUE(elimination_test(s).empty());
}

TEST(EliminationTest, IdenticalLedgersSurvive) {
  auto a = ledger_with(10, 500);
  a.reward_sum = 250;
  EXPECT_TRUE(elimination_test(state_of({a, a})).empty());
}

TEST(EliminationTest, WorkedExample) {
  auto mk = [](double u) {
    LearnerLedger l;
    l.bound = CandidateBound::poly_capped(2, 1, 0.5);
    l.plays = 1000;
    l.reward_sum = u;
    return l;
  };
  auto s = state_of({mk(200), mk(900)});
  s.delta = 0.05;
  // oracle: direct numeric evaluation of both sides
  const double n = 1000.0;
  const double inner = std::log(std::max(std::log(std::max(n / 2, std::exp(1.0))), std::exp(1.0))) +
                       0.72 * std::log(10.4 * 2 / 0.05);
  const double r = 2.0 * std::max(3.0, 0.85 * std::sqrt(n * inner)) / n;
  const double lhs = 0.2 + 2.0 * std::sqrt(n) / n + r;
  const double rhs = 0.9 - r;
  ASSERT_LT(lhs, rhs);
  EXPECT_EQ(elimination_test(s), std::vector<std::size_t>{0});
  EXPECT_NEAR(elimination_radius(1000, 2, 0.05, s.elimination), r, 1e-15);
}

TEST(EliminationTest, IgnoresUnplayedAndInactive) {
  auto good = ledger_with(0, 100);
  good.reward_sum = 100;
  auto bad = ledger_with(0, 100);
  auto fresh = LearnerLedger{};
  auto s = state_of({good, bad, fresh});
  s.ledgers[1].deactivate();
  EXPECT_TRUE(elimination_test(s).empty());
}

TEST(BalancingMaster, PlayCountsSumToRound) {
  auto env = arms_environment({0.9, 0.5, 0.1}, {NoiseKind::Bernoulli, 0});
  BalancingMaster m(scripted({0.9, 0.5, 0.1}), {});
  RunStreams s = RunStreams::derive(1, 0);
  std::vector<bool> was_active(3, true);
  for (int t = 1; t <= 5000; ++t) {
    const auto& tr = m.run_round(env, s);
    PlayCount total = 0;
    for (const auto& l : tr.learners) total += l.plays;
    ASSERT_EQ(total, t);
    ASSERT_TRUE(was_active[tr.learner]);
    for (std::size_t i = 0; i < 3; ++i) {
      ASSERT_FALSE(tr.learners[i].active && !was_active[i]);
      was_active[i] = tr.learners[i].active;
    }
  }
  // both misspecified learners get eliminated well before T
  EXPECT_GT(m.elimination_rounds()[1], 0);
  EXPECT_GT(m.elimination_rounds()[2], 0);
  EXPECT_EQ(m.elimination_rounds()[0], 0);
}

TEST(BalancingMaster, DeterministicTrace) {
  auto run = [] {
    auto env = arms_environment({0.6, 0.55}, {NoiseKind::Bernoulli, 0});
    BalancingMaster m(scripted({0.6, 0.55}), {});
    RunStreams s = RunStreams::derive(77, 3);
    std::ostringstream os;
    for (int t = 1; t <= 2000; ++t) {
      const auto& tr = m.run_round(env, s);
      os << tr.learner << ',' << tr.reward << ',' << tr.cumulative_regret << '\n';
    }
    return os.str();
  };
  EXPECT_EQ(run(), run());
}

TEST(BalancingMaster, RoundRobinNeverEliminates) {
  auto env = arms_environment({0.9, 0.1}, {NoiseKind::Bernoulli, 0});
  BalancingConfig cfg;
  cfg.rule = SelectionRule::RoundRobin;
  BalancingMaster m(scripted({0.9, 0.1}), cfg);
  RunStreams s = RunStreams::derive(1, 0);
  for (int t = 1; t <= 1000; ++t) {
    const auto& tr = m.run_round(env, s);
    EXPECT_EQ(tr.learner, static_cast<std::size_t>((t - 1) % 2));
  }
  EXPECT_NEAR(m.regret().total(), 400.0, 1e-9);
}

TEST(EliminationTest, ZeroRadiusComparesMeans) {
  // fabricated ledger state where both learners fail the test
  MasterState s;
  auto a = ledger_with(0, 1000);
  auto b = ledger_with(0, 1000);
  a.reward_sum = 0;
  b.reward_sum = 1000;
  s = state_of({a, b});
  s.elimination.c_scale = 0.0;
  EXPECT_EQ(elimination_test(s), std::vector<std::size_t>{0});
}

TEST(BalancingMaster, RejectsBadConfig) {
  BalancingConfig cfg;
  cfg.delta = 1.0;
  EXPECT_THROW(BalancingMaster(scripted({0.5}), cfg), ParameterError);
  EXPECT_THROW(BalancingMaster({}, BalancingConfig{}), ParameterError);
}
