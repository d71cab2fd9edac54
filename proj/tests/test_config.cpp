#include <doctest.h>

#include "stlod/config.hpp"

using namespace stlod;

TEST_SUITE("config") {

TEST_CASE("parse, serialize, parse is idempotent") {
  const std::string text = R"(# desk experiment
n_coarse = 2
n_fine = 4
t_final = 0.75
coarse_steps = 3
fine_per_coarse = 4
seed = 42
eps_x = 0.25
eps_t = 0.125
coeff_low = 0.01
coeff_high = 0.1
periodic = 1
k = auto
ell = 3
h_exponents = 2,3
)";
  const ExperimentConfig a = parse_config(text);
  CHECK(a.resolved_k() == 2);
  CHECK(a.periodic);
  const std::string round = serialize_config(a);
  const ExperimentConfig b = parse_config(round);
  CHECK(serialize_config(b) == round);
}

TEST_CASE("bad input is rejected with config errors") {
  CHECK_THROWS_AS(parse_config("nonsense line\n"), invalid_argument);
  CHECK_THROWS_AS(parse_config("unknown_key = 3\n"), invalid_argument);
  CHECK_THROWS_AS(parse_config("n_coarse = 3\nn_fine = 3\n"), invalid_argument);
  CHECK_THROWS_AS(parse_config("eps_x = 0.3\n"), invalid_argument);
  CHECK_THROWS_AS(parse_config("coeff_low = 0.5\ncoeff_high = 0.1\n"), invalid_argument);
  CHECK_THROWS_AS(parse_config("k = fast\n"), invalid_argument);
  CHECK_THROWS_AS(load_config("no_such_config.cfg"), io_error);
}

TEST_CASE("explicit k wins over auto") {
  ExperimentConfig c = parse_config("k = 4\n");
  CHECK(c.resolved_k() == 4);
  c = parse_config("");
  CHECK(c.resolved_k() == c.n_coarse);
}

}  // TEST_SUITE
