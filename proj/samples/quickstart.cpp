// Two players, three actions, two contexts: c.GP-MW against GP-MW on a
// synthetic game, then the regret and equilibrium-gap report.

#include <iostream>

#include "cgame/analysis.hpp"
#include "cgame/baselines.hpp"
#include "cgame/cgpmw.hpp"
#include "cgame/game.hpp"

int main() {
  using namespace cgame;
  SyntheticGameOptions go;
  go.noise = 0.01;
  go.seed = 3;
  SyntheticRkhsGame game(go);

  ContextDistribution zeta;
  zeta.support = {{0.2}, {0.8}};

  CgpmwOptions o;
  o.kernel = game.kernel();
  o.horizon = 300;
  o.known_contexts = zeta.support;
  CgpmwLearner p0(game.action_features(0), o);
  auto p1 = make_gpmw(game.action_features(1), game.kernel(), 300);

  std::vector<Learner*> learners{&p0, p1.get()};
  FiniteIid source(zeta);
  GameTrace trace = run_game(game, learners, source, 300, 42);

  ReportOptions ro;
  ro.zeta = zeta;
  std::cout << analysis_report(game, trace, ro).dump(2) << '\n';
}
