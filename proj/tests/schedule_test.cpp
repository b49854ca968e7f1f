#include <doctest.h>

#include "dom/error.hpp"
#include "dom/schedule.hpp"

using namespace dom;

TEST_CASE("step schedule decays at each listed epoch") {
  const auto s = LrSchedule::step(0.1, {150, 225}, 0.1, 300);
  CHECK(s.lr_at(0) == 0.1);
  CHECK(s.lr_at(149.99) == 0.1);
  CHECK(s.lr_at(150) == doctest::Approx(0.01));
  CHECK(s.lr_at(224.5) == doctest::Approx(0.01));
  CHECK(s.lr_at(225) == doctest::Approx(0.001));
  CHECK(s.first_decay() == 150);
  CHECK_THROWS_AS(s.lr_at(300), Error);
  CHECK_THROWS_AS(s.lr_at(-0.5), Error);
}

TEST_CASE("cyclical schedule ramps up to the peak and back to zero") {
  const auto s = LrSchedule::cyclical(0.2, 50, 100);
  CHECK(s.lr_at(0) == 0.0);
  CHECK(s.lr_at(25) == doctest::Approx(0.1));
  CHECK(s.lr_at(50) == doctest::Approx(0.2));
  CHECK(s.lr_at(75) == doctest::Approx(0.1));
  CHECK(s.lr_at(99.5) == doctest::Approx(0.002));
  CHECK_FALSE(s.first_decay().has_value());
}
