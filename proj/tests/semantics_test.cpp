#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "polite/io.hpp"
#include "polite/rng.hpp"
#include "polite/semantics.hpp"

using namespace polite;
using namespace polite::semantics;

namespace {

EndorsementCounts two_by_two() {
  EndorsementCounts c;
  c.utterances = {"good", "not_good"};
  c.num_states = 2;
  c.yes.assign(4, 0);
  c.total.assign(4, 0);
  c.set(0, 0, 52, 52);
  c.set(0, 1, 0, 52);
  c.set(1, 0, 26, 52);
  c.set(1, 1, 13, 52);
  return c;
}

std::filesystem::path temp_dir() {
  auto p = std::filesystem::temp_directory_path() / "polite-semantics-test";
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("beta-binomial estimates hit the exact anchors") {
  const auto theta = estimate_theta(two_by_two());
  CHECK(std::abs(theta.at(0, 0) - 53.0 / 54.0) < 1e-12);
  CHECK(std::abs(theta.at(0, 1) - 1.0 / 54.0) < 1e-12);
  CHECK(std::abs(theta.at(1, 0) - 0.5) < 1e-12);
  CHECK(theta.utterances == std::vector<std::string>{"good", "not_good"});
  CHECK(theta.num_states == 2);
  CHECK_NOTHROW(theta.validate());
}

TEST_CASE("estimates stay inside (0,1), increase with yes, and mirror") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::int64_t total = 1 + static_cast<std::int64_t>(rng.below(200));
    const std::int64_t yes = static_cast<std::int64_t>(rng.below(total + 1));
    EndorsementCounts c;
    c.utterances = {"u"};
    c.num_states = 3;
    c.yes = {yes, std::min(yes + 1, total), total - yes};
    c.total = {total, total, total};
    const auto theta = estimate_theta(c);
    for (std::size_t s = 0; s < 3; ++s) {
      CHECK(theta.at(0, s) > 0.0);
      CHECK(theta.at(0, s) < 1.0);
    }
    if (yes + 1 <= total) CHECK(theta.at(0, 1) > theta.at(0, 0));
    // estimate(k, n) + estimate(n - k, n) == 1
    CHECK(std::abs(theta.at(0, 0) + theta.at(0, 2) - 1.0) < 1e-12);
  }
}

TEST_CASE("endorsement validation rejects impossible tallies") {
  EndorsementCounts c = two_by_two();
  CHECK_NOTHROW(c.validate());
  c.set(1, 1, 60, 52);
  CHECK_THROWS(c.validate());
  c.set(1, 1, -1, 52);
  CHECK_THROWS(c.validate());
  c.set(1, 1, 0, 0);
  CHECK_THROWS(c.validate());
}

TEST_CASE("semantics csv round-trips bit-exactly") {
  const auto dir = temp_dir();
  const auto path = dir / "theta.csv";
  const auto theta = estimate_theta(two_by_two());
  write_semantics_csv(path, theta);

  const std::string text = io::read_file(path);
  CHECK(text.rfind("utterance,state,theta\n", 0) == 0);
  CHECK(text.find("good,1,") != std::string::npos);

  const auto back = read_semantics_csv(path);
  CHECK(back.utterances == theta.utterances);
  CHECK(back.num_states == theta.num_states);
  for (std::size_t u = 0; u < 2; ++u)
    for (std::size_t s = 0; s < 2; ++s) CHECK(back.at(u, s) == theta.at(u, s));

  // An irrational-ish value survives the trip untouched.
  rsa::SemanticsTable odd = theta;
  odd.theta.at(0, 0) = 1.0 / 3.0;
  odd.theta.at(1, 1) = 0.1 + 0.2;
  write_semantics_csv(path, odd);
  const auto odd_back = read_semantics_csv(path);
  CHECK(odd_back.at(0, 0) == odd.theta.at(0, 0));
  CHECK(odd_back.at(1, 1) == odd.theta.at(1, 1));
  std::filesystem::remove_all(dir);
}

TEST_CASE("endorsement csv round-trips") {
  const auto dir = temp_dir();
  const auto path = dir / "counts.csv";
  const auto counts = two_by_two();
  write_endorsements_csv(path, counts);
  CHECK(io::read_file(path).rfind("utterance,state,yes,total\n", 0) == 0);
  const auto back = read_endorsements_csv(path);
  CHECK(back.utterances == counts.utterances);
  CHECK(back.num_states == counts.num_states);
  for (std::size_t u = 0; u < 2; ++u)
    for (std::size_t s = 0; s < 2; ++s) {
      CHECK(back.yes_at(u, s) == counts.yes_at(u, s));
      CHECK(back.total_at(u, s) == counts.total_at(u, s));
    }
  std::filesystem::remove_all(dir);
}
