#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "polite/inference.hpp"
#include "polite/rng.hpp"
#include "polite/rsa.hpp"

using namespace polite;
using namespace polite::infer;

namespace {

template <class F>
std::string thrown_message(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

rsa::ParamVector make_params(double phi, double alpha, std::array<double, 3> omega) {
  rsa::ParamVector p;
  p.phi = phi;
  p.alpha = alpha;
  p.omega = omega;
  return p;
}

PosteriorModel make_model(const rsa::ParamVector& truth, std::int64_t per_state = 104) {
  auto ctx = ModelContext::defaults(fixtures::synthetic_theta());
  PosteriorModel probe(ctx, CountMatrix{5, 8, std::vector<std::int64_t>(40, 0)});
  const CountMatrix data = transform_to_counts(probe.predictive(truth), per_state);
  return PosteriorModel(std::move(ctx), data);
}

}  // namespace

TEST_CASE("param components map names to values") {
  const auto p = make_params(0.3, 2.5, {0.2, 0.3, 0.5});
  CHECK(param_component(p, 0) == 0.3);
  CHECK(param_component(p, 1) == 2.5);
  CHECK(param_component(p, 2) == 0.2);
  CHECK(param_component(p, 3) == 0.3);
  CHECK(param_component(p, 4) == 0.5);
  CHECK_THROWS(param_component(p, 5));
  CHECK(std::string(kParamNames[4]) == "omega_pre");
}

TEST_CASE("count transform hits the frozen anchors") {
  Mat two(1, 2);
  two.at(0, 0) = 0.323;
  two.at(0, 1) = 0.677;
  const auto counts = transform_to_counts(two, 104);
  CHECK(counts.at(0, 0) == 34);
  CHECK(counts.at(0, 1) == 70);
  CHECK(counts.row_total(0) == 104);

  Mat half(1, 8, 0.0);
  half.at(0, 0) = 0.5;
  half.at(0, 1) = 0.5;
  const auto odd = transform_to_counts(half, 103);
  CHECK(odd.at(0, 0) == 52);
  CHECK(odd.at(0, 1) == 51);
  for (std::size_t u = 2; u < 8; ++u) CHECK(odd.at(0, u) == 0);
  CHECK(odd.row_total(0) == 103);

  Mat uniform(1, 8, 0.125);
  const auto flat = transform_to_counts(uniform, 104);
  for (std::size_t u = 0; u < 8; ++u) CHECK(flat.at(0, u) == 13);
}

TEST_CASE("count transform preserves row totals on random distributions") {
  Rng rng(4711);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t cols = 2 + rng.below(10);
    Mat probs(1, cols);
    double z = 0.0;
    for (std::size_t u = 0; u < cols; ++u) {
      probs.at(0, u) = rng.uniform() < 0.15 ? 0.0 : rng.uniform_pos();
      z += probs.at(0, u);
    }
    if (z == 0.0) {
      probs.at(0, 0) = 1.0;
      z = 1.0;
    }
    for (std::size_t u = 0; u < cols; ++u) probs.at(0, u) /= z;
    const std::int64_t total = 1 + static_cast<std::int64_t>(rng.below(500));
    const auto counts = transform_to_counts(probs, total);
    CHECK(counts.row_total(0) == total);
    for (std::size_t u = 0; u < cols; ++u) {
      CHECK(counts.at(0, u) >= 0);
      CHECK(std::abs(static_cast<double>(counts.at(0, u)) -
                     probs.at(0, u) * static_cast<double>(total)) <= 1.5 + 1e-9);
    }
  }
}

TEST_CASE("count matrix validation") {
  CountMatrix m{2, 2, {1, 2, 3, 4}};
  CHECK_NOTHROW(m.validate());
  CHECK(m.row_total(1) == 7);
  m.counts[2] = -1;
  CHECK_THROWS(m.validate());
  CountMatrix empty;
  CHECK_THROWS(empty.validate());
}

TEST_CASE("model context defaults") {
  const auto ctx = ModelContext::defaults(fixtures::synthetic_theta());
  CHECK(ctx.grid.values.size() == 10);
  CHECK(ctx.state_prior == rsa::uniform_state_prior(5));
  CHECK(ctx.values == rsa::default_state_values(5));
  CHECK(ctx.alpha_max == 20.0);
}

TEST_CASE("support boundaries") {
  const auto model = make_model(make_params(0.5, 2.0, {1.0 / 3, 1.0 / 3, 1.0 / 3}));
  CHECK(model.in_support(make_params(0.0, 20.0, {1.0, 0.0, 0.0})));
  CHECK(model.in_support(make_params(1.0, 1e-6, {0.0, 0.0, 1.0})));
  CHECK_FALSE(model.in_support(make_params(-0.01, 2.0, {1.0 / 3, 1.0 / 3, 1.0 / 3})));
  CHECK_FALSE(model.in_support(make_params(0.5, 0.0, {1.0 / 3, 1.0 / 3, 1.0 / 3})));
  CHECK_FALSE(model.in_support(make_params(0.5, 20.01, {1.0 / 3, 1.0 / 3, 1.0 / 3})));
  CHECK_FALSE(model.in_support(make_params(0.5, 2.0, {0.7, 0.4, -0.1})));
  CHECK(std::isinf(model.log_posterior(make_params(0.5, 0.0, {1.0 / 3, 1.0 / 3, 1.0 / 3}))));
}

TEST_CASE("log likelihood is the direct product over observed cells") {
  const auto theta = fixtures::synthetic_theta();
  auto ctx = ModelContext::defaults(theta);
  CountMatrix data{5, 8, std::vector<std::int64_t>(40, 0)};
  data.at(0, 2) = 3;
  data.at(1, 1) = 2;
  data.at(4, 3) = 5;
  data.at(2, 7) = 1;
  const PosteriorModel model(ctx, data);

  const auto p = make_params(0.4, 1.7, {0.5, 0.2, 0.3});
  const auto s2 = rsa::speaker2(theta, p, ctx.grid, ctx.state_prior, ctx.values);
  double expected = 0.0;
  for (std::size_t st = 0; st < 5; ++st)
    for (std::size_t u = 0; u < 8; ++u)
      if (data.at(st, u) > 0)
        expected += static_cast<double>(data.at(st, u)) * std::log(s2.row(st)[u]);

  PosteriorModel::Scratch scratch;
  CHECK(model.log_likelihood(p, scratch) == doctest::Approx(expected).epsilon(1e-10));

  // Doubling every count exactly doubles the log likelihood.
  CountMatrix twice = data;
  for (auto& c : twice.counts) c *= 2;
  const PosteriorModel doubled(ctx, twice);
  PosteriorModel::Scratch scratch2;
  CHECK(doubled.log_likelihood(p, scratch2) == 2.0 * model.log_likelihood(p, scratch));
}

TEST_CASE("all-zero counts leave the posterior flat over the support") {
  auto ctx = ModelContext::defaults(fixtures::synthetic_theta());
  const PosteriorModel model(ctx, CountMatrix{5, 8, std::vector<std::int64_t>(40, 0)});
  const double a = model.log_posterior(make_params(0.2, 1.0, {0.6, 0.3, 0.1}));
  const double b = model.log_posterior(make_params(0.9, 15.0, {0.1, 0.1, 0.8}));
  CHECK(a == b);
  CHECK(std::isfinite(a));
}

TEST_CASE("free log_posterior agrees with the model method") {
  const auto theta = fixtures::synthetic_theta();
  const auto truth = make_params(0.6, 3.0, {0.4, 0.3, 0.3});
  const auto model = make_model(truth);
  const auto p = make_params(0.5, 2.0, {0.3, 0.3, 0.4});
  CHECK(log_posterior(p, model.data(), theta) == doctest::Approx(model.log_posterior(p)));
}

TEST_CASE("sampler output is deterministic, in-support, and well shaped") {
  const auto truth = make_params(0.55, 2.5, {0.4, 0.35, 0.25});
  const auto model = make_model(truth);
  ChainConfig cc;
  cc.n_chains = 3;
  cc.n_warmup = 250;
  cc.n_samples = 200;
  cc.seed = 17;

  const Chains a = sample_posterior(model, cc);
  REQUIRE(a.chains.size() == 3);
  for (const auto& chain : a.chains) {
    REQUIRE(chain.size() == 200);
    for (const auto& d : chain) {
      CHECK(model.in_support(d.params));
      CHECK(std::abs(d.params.omega[0] + d.params.omega[1] + d.params.omega[2] - 1.0) < 1e-9);
      CHECK(std::isfinite(d.log_post));
    }
  }
  CHECK(a.pooled(0).size() == 600);
  CHECK(a.per_chain(1).size() == 3);

  const Chains b = sample_posterior(model, cc);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 200; ++i) {
      CHECK(a.chains[c][i].params.phi == b.chains[c][i].params.phi);
      CHECK(a.chains[c][i].params.alpha == b.chains[c][i].params.alpha);
      CHECK(a.chains[c][i].log_post == b.chains[c][i].log_post);
    }

  ChainConfig other = cc;
  other.seed = 18;
  const Chains c = sample_posterior(model, other);
  CHECK(c.chains[0][0].params.phi != a.chains[0][0].params.phi);
}

TEST_CASE("split diagnostics behave on known sequences") {
  Rng rng(2);
  std::vector<std::vector<double>> same(4), apart(4), corr(2);
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 500; ++i) same[c].push_back(rng.normal());
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 500; ++i) apart[c].push_back(rng.normal() + (c < 2 ? 0.0 : 5.0));
  for (int c = 0; c < 2; ++c) {
    double x = 0.0;
    for (int i = 0; i < 2000; ++i) {
      x = 0.9 * x + rng.normal();
      corr[c].push_back(x);
    }
  }

  CHECK(split_rhat(same) < 1.02);
  CHECK(split_rhat(apart) > 1.5);
  CHECK(split_ess(same) > 1000.0);
  CHECK(split_ess(corr) < 4000.0 / 5.0);

  std::vector<std::vector<double>> constant(4, std::vector<double>(200, 1.25));
  CHECK(split_rhat(constant) == 1.0);
}

TEST_CASE("hdi finds the shortest covering window") {
  std::vector<double> ladder;
  for (int i = 1; i <= 100; ++i) ladder.push_back(i / 100.0);
  const auto [lo, hi] = hdi(ladder, 0.95);
  CHECK(hi - lo == doctest::Approx(0.94).epsilon(1e-12));
  CHECK(lo >= 0.01);
  CHECK(hi <= 1.0);

  Rng rng(77);
  std::vector<double> heavy;
  for (int i = 0; i < 30000; ++i) heavy.push_back(rng.exponential());
  const auto [elo, ehi] = hdi(heavy, 0.95);
  // Shortest interval for an exponential starts at the bottom.
  CHECK(elo < 0.01);
  CHECK(ehi == doctest::Approx(3.0).epsilon(0.15));

  std::vector<double> gauss;
  for (int i = 0; i < 30000; ++i) gauss.push_back(rng.normal());
  const auto [glo, ghi] = hdi(gauss, 0.95);
  CHECK(glo == doctest::Approx(-1.96).epsilon(0.08));
  CHECK(ghi == doctest::Approx(1.96).epsilon(0.08));

  CHECK_THROWS(hdi({}, 0.95));
}

TEST_CASE("summary flags degenerate draws and reports stable values") {
  Chains flat;
  flat.config.n_chains = 2;
  flat.chains.assign(2, std::vector<Draw>(150, Draw{make_params(0.5, 2.0, {0.4, 0.3, 0.3}), -10.0}));
  const auto summary = summarize(flat);
  bool degenerate_warning = false;
  for (const auto& w : summary.warnings)
    degenerate_warning = degenerate_warning || w.find("degenerate") != std::string::npos;
  CHECK(degenerate_warning);
  CHECK(summary.params[0].mean == 0.5);
  CHECK(summary.params[1].mean == 2.0);
  CHECK(summary.map_params.phi == 0.5);

  Chains tiny;
  tiny.chains.assign(1, std::vector<Draw>(50, Draw{}));
  CHECK(thrown_message([&] { summarize(tiny); }).find("100 draws") != std::string::npos);
}

TEST_CASE("summary means track the sampled posterior and MAP climbs") {
  const auto truth = make_params(0.5, 2.0, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto model = make_model(truth);
  ChainConfig cc;
  cc.n_chains = 4;
  cc.n_warmup = 1200;
  cc.n_samples = 1200;
  cc.seed = 5;
  const Chains chains = sample_posterior(model, cc);
  const auto summary = summarize(chains, &model);

  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(summary.params[i].hdi_low <= summary.params[i].mean);
    CHECK(summary.params[i].mean <= summary.params[i].hdi_high);
    CHECK(summary.params[i].ess > 10.0);
  }
  CHECK(std::abs(summary.params[0].mean - truth.phi) < 0.15);
  CHECK(std::abs(summary.params[2].mean - truth.omega[0]) < 0.15);

  // The hill-climbed MAP cannot score below the best pooled draw.
  double best = -1e300;
  for (const auto& chain : chains.chains)
    for (const auto& d : chain) best = std::max(best, d.log_post);
  CHECK(summary.map_log_posterior >= best - 1e-12);
  CHECK(model.in_support(summary.map_params));
}

TEST_CASE("grid posterior concentrates near the generating parameters") {
  const auto truth = make_params(0.5, 2.0, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto model = make_model(truth);
  GridResolution res;
  res.coarse_phi = 9;
  res.coarse_alpha = 24;
  res.coarse_omega_side = 10;
  res.fine_phi = 10;
  res.fine_alpha = 12;
  res.fine_omega_side = 12;
  const auto grid = grid_posterior(model, res);

  CHECK(grid.num_cells > 0);
  CHECK(grid.log_density.size() == grid.cell_params.size());
  CHECK(std::abs(grid.mean[0] - truth.phi) < 0.1);
  CHECK(std::abs(grid.mean[2] + grid.mean[3] + grid.mean[4] - 1.0) < 0.02);
  for (std::size_t i = 0; i < 5; ++i) CHECK(grid.sd[i] > 0.0);
  CHECK(std::isfinite(grid.log_normalizer));

  GridResolution huge;
  huge.fine_omega_side = 4000;
  CHECK_THROWS(grid_posterior(model, huge));
}

TEST_CASE("held-out mse anchors") {
  const auto truth = make_params(0.45, 2.2, {0.35, 0.4, 0.25});
  const auto model = make_model(truth);

  const CountMatrix dense = transform_to_counts(model.predictive(truth), 1000000);
  CHECK(posterior_predictive_mse(model, truth, dense) < 1e-10);

  CountMatrix uniform{5, 8, std::vector<std::int64_t>(40, 13)};
  const auto lazy = make_params(0.5, 0.0, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  CHECK(posterior_predictive_mse(model, lazy, uniform) == 0.0);

  CountMatrix hole{5, 8, std::vector<std::int64_t>(40, 1)};
  for (std::size_t u = 0; u < 8; ++u) hole.at(2, u) = 0;
  CHECK(thrown_message([&] { posterior_predictive_mse(model, truth, hole); })
            .find("state 3") != std::string::npos);
}

TEST_CASE("hand-computed mse on a one-state model") {
  rsa::SemanticsTable flat;
  flat.utterances = {"a", "b"};
  flat.num_states = 1;
  flat.theta = Mat(2, 1, 1.0);
  auto ctx = ModelContext::defaults(flat);
  CountMatrix held{1, 2, {3, 1}};
  const PosteriorModel model(ctx, held);
  // Both utterances are equally good, so the prediction is (1/2, 1/2) and the
  // held-out proportions are (3/4, 1/4).
  CHECK(posterior_predictive_mse(model, make_params(0.5, 2.0, {1.0 / 3, 1.0 / 3, 1.0 / 3}),
                                 held) == doctest::Approx(0.0625).epsilon(1e-12));
}

TEST_CASE("random baseline is seeded and summarized") {
  const auto truth = make_params(0.5, 2.0, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto model = make_model(truth);
  const CountMatrix held = transform_to_counts(model.predictive(truth), 104);

  const auto a = random_baseline(model, held, 50, 99);
  const auto b = random_baseline(model, held, 50, 99);
  REQUIRE(a.mses.size() == 50);
  CHECK(a.mses == b.mses);
  const auto c = random_baseline(model, held, 50, 100);
  CHECK(a.mses != c.mses);

  double mean = 0.0;
  for (double m : a.mses) {
    CHECK(m >= 0.0);
    CHECK(std::isfinite(m));
    mean += m;
  }
  mean /= 50.0;
  CHECK(a.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(a.sd > 0.0);
  CHECK_THROWS(random_baseline(model, held, 0, 1));
}

TEST_CASE("welch z statistic") {
  CHECK(two_sample_z({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  CHECK(two_sample_z({1.0, 2.0, 3.0}, {2.0, 3.0, 4.0}) ==
        doctest::Approx(-1.2247448713915889).epsilon(1e-12));
  CHECK_THROWS(two_sample_z({}, {1.0}));
}

TEST_CASE("chains csv round-trips draws bit-exactly") {
  const auto truth = make_params(0.5, 2.0, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto model = make_model(truth);
  ChainConfig cc;
  cc.n_chains = 2;
  cc.n_warmup = 150;
  cc.n_samples = 150;
  cc.seed = 3;
  const Chains chains = sample_posterior(model, cc);

  const auto dir = std::filesystem::temp_directory_path() / "polite-inference-test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "chains.csv";
  write_chains_csv(path, chains);
  const Chains back = read_chains_csv(path);

  REQUIRE(back.chains.size() == chains.chains.size());
  for (std::size_t c = 0; c < chains.chains.size(); ++c) {
    REQUIRE(back.chains[c].size() == chains.chains[c].size());
    for (std::size_t i = 0; i < chains.chains[c].size(); ++i) {
      CHECK(back.chains[c][i].params.phi == chains.chains[c][i].params.phi);
      CHECK(back.chains[c][i].params.alpha == chains.chains[c][i].params.alpha);
      CHECK(back.chains[c][i].params.omega == chains.chains[c][i].params.omega);
      CHECK(back.chains[c][i].log_post == chains.chains[c][i].log_post);
    }
  }
  for (std::size_t i = 0; i < 5; ++i) CHECK(back.rhat[i] == chains.rhat[i]);
  std::filesystem::remove_all(dir);
}
