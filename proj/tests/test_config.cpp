#include <doctest.h>

#include <cmath>

#include "fedman/config.hpp"
#include "fedman/errors.hpp"

using namespace fedman;

TEST_CASE("defaults per problem") {
  const ExperimentConfig synth = resolve({});
  CHECK(*synth.n == 30);
  CHECK(*synth.d == 20);
  CHECK(*synth.k == 5);
  CHECK(*synth.p == 15);
  CHECK(*synth.eta == 4e-3);
  CHECK(*synth.tau == 5);
  CHECK(*synth.rounds == 100);

  ExperimentConfig l;
  l.problem = "lrmc";
  l = resolve(l);
  CHECK(*l.T == 1000);
  CHECK(*l.d == 100);
  CHECK(*l.k == 2);
  CHECK(*l.n == 10);

  ExperimentConfig m;
  m.problem = "kpca-mnist";
  m = resolve(m);
  CHECK(m.eta_auto);
  CHECK(*m.tau == 10);
}

TEST_CASE("settings parse and validate") {
  ExperimentConfig c;
  apply_setting(c, "eta", "auto");
  CHECK(c.eta_auto);
  apply_setting(c, "eta", "0.5");
  CHECK_FALSE(c.eta_auto);
  CHECK(*c.eta == 0.5);
  apply_setting(c, "algos", "fedman, cprgd");
  CHECK(c.algos == std::vector<std::string>{"fedman", "cprgd"});
  CHECK_THROWS_AS(apply_setting(c, "bogus", "1"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "n", "-3"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "n", "3x"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "eta", "nan"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c, "theory-steps", "maybe"), ConfigError);

  ExperimentConfig bad;
  bad.algo = "sgd";
  CHECK_THROWS_AS(validate(resolve(bad)), ConfigError);
  bad = {};
  bad.k = 30;
  CHECK_THROWS_AS(validate(resolve(bad)), ConfigError);
  bad = {};
  bad.tau = 0;
  CHECK_THROWS_AS(validate(resolve(bad)), ConfigError);
  bad = {};
  bad.eta_g = 0.0;
  CHECK_THROWS_AS(validate(resolve(bad)), ConfigError);
  bad = {};
  bad.mode = "udp";
  CHECK_THROWS_AS(validate(resolve(bad)), ConfigError);
}

TEST_CASE("config text: comments, blank lines and line numbers in errors") {
  ExperimentConfig c;
  apply_config_text(c, "# header\n\nn = 4  # trailing\nd=9\n");
  CHECK(*c.n == 4);
  CHECK(*c.d == 9);
  try {
    apply_config_text(c, "n = 4\nnonsense\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("dumped config reproduces the same config") {
  ExperimentConfig c;
  c.problem = "lrmc";
  c.eta = 1.0 / 3.0;
  c.batch = 7;
  c.seed = 42;
  c.mu = 0.125;
  c.no_timing = true;
  c.svg = "x.svg";
  c.algos = {"fedman", "rfedsvrg"};
  const ExperimentConfig resolved = resolve(c);
  ExperimentConfig back;
  apply_config_text(back, dump_config(resolved));
  CHECK(dump_config(resolve(back)) == dump_config(resolved));
  CHECK(*back.eta == *resolved.eta);
  CHECK(back.seed == 42);
  CHECK(back.no_timing);
}

TEST_CASE("building a run from a config") {
  ExperimentConfig c;
  c.n = 3;
  c.d = 6;
  c.k = 2;
  c.p = 4;
  const auto problem = build_problem(c);
  CHECK(problem->num_clients() == 3);
  CHECK(problem->f_star().has_value());
  const HyperParams hp = build_hyperparams(c, *problem);
  CHECK(hp.eta == 4e-3);

  c.eta_auto = true;
  c.eta.reset();
  CHECK(build_hyperparams(c, *problem).eta == doctest::Approx(1.0 / kpca_beta(*problem)));

  c.theory_steps = true;
  const HyperParams th = build_hyperparams(c, *problem);
  CHECK(th.eta_g == doctest::Approx(std::sqrt(3.0)));

  c.theory_steps = false;
  c.batch = 5;
  CHECK_THROWS_AS(build_hyperparams(c, *problem), ConfigError);
}
