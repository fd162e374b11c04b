#include "support.hpp"

#include "folharm/errors.hpp"
#include "folharm/verification.hpp"

#include <doctest.h>

using namespace testing;

namespace {

std::shared_ptr<const AnalyticMap> torus_to_sphere(GeomPtr t2, GeomPtr s2) {
  Point offset(2);
  offset << kPi / 2, 0.0;
  Eigen::MatrixXd linear = Eigen::MatrixXd::Zero(2, 2);
  linear(1, 0) = 1.0;
  return std::make_shared<const AnalyticMap>(
      "torus_to_sphere", t2, s2, offset, linear,
      std::vector<SineMode>{{0, 0.3, {0.0, 1.0}, {0.0}, false}, {1, 0.2, {1.0, 1.0}, {0.3}, false}});
}

std::shared_ptr<const AnalyticMap> sphere_bend(GeomPtr s2) {
  return std::make_shared<const AnalyticMap>(
      "bend", s2, s2, Point::Zero(2), Eigen::MatrixXd::Identity(2, 2),
      std::vector<SineMode>{{0, 0.1, {0.0, 1.0}, {0.0}, false}, {1, 0.1, {1.0, 0.0}, {0.0}, false}});
}

TargetVectorField sine_variation(std::shared_ptr<const GridChart> grid) {
  TargetVectorField v(grid, 1);
  for (std::size_t i = 0; i < grid->size(); ++i) v(i, 0) = std::sin(grid->coords(i)[0]);
  return v;
}

// Frame oracle: g-orthonormal frame by Gram-Schmidt, then
//   sum_a g'(d(Ric E_a), d E_a)  and  sum_{a,b} R'(d E_b, d E_a, d E_a, d E_b).
std::pair<double, double> frame_bochner(const FoliatedMapField& map, const JacobianField& d, std::size_t node) {
  const GridChart& grid = map.source();
  const int q = grid.dim();
  const LocalGeometry src = grid.geometry().at(grid.coords(node));
  const LocalGeometry tgt = map.target().at(map.value(node));
  std::vector<Eigen::VectorXd> frame;
  for (int a = 0; a < q; ++a) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(q, a);
    for (const auto& f : frame) e -= (f.dot(Eigen::MatrixXd(src.g) * e)) * f;
    e /= std::sqrt(e.dot(Eigen::MatrixXd(src.g) * e));
    frame.push_back(e);
  }
  const Eigen::MatrixXd dm = d.matrix(node);
  const Eigen::MatrixXd gt = tgt.g;
  double ricci = 0.0, curvature = 0.0;
  for (int a = 0; a < q; ++a) {
    const Eigen::VectorXd ric_e = Eigen::MatrixXd(src.g_inv) * Eigen::MatrixXd(src.ricci) * frame[a];
    ricci += (dm * ric_e).dot(gt * (dm * frame[a]));
    for (int b = 0; b < q; ++b) {
      const Eigen::VectorXd x = dm * frame[b], y = dm * frame[a];
      const int qt = map.target_dim();
      for (int al = 0; al < qt; ++al)
        for (int be = 0; be < qt; ++be)
          for (int ga = 0; ga < qt; ++ga)
            for (int de = 0; de < qt; ++de)
              curvature += tgt.riemann_at(al, be, ga, de) * x[al] * y[be] * y[ga] * x[de];
    }
  }
  return {ricci, curvature};
}

}  // namespace

TEST_CASE("richardson extrapolation is exact on even polynomials") {
  const std::vector<double> t{0.1, 0.05, 0.025};
  std::vector<double> v;
  for (double s : t) v.push_back(3.0 - 2.0 * s * s + 5.0 * s * s * s * s);
  CHECK(richardson_limit(t, v) == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(richardson_limit({0.1}, {7.0}) == 7.0);
}

TEST_CASE("first variation of x + 0.1 sin x along sin x") {
  const auto grid = GridChart::uniform(circle(), 128);
  const auto map = sample_map(grid, *circle_sine(0.1));
  const auto r = check_first_variation(map, point_foliation(grid), {sine_variation(grid), {1e-2, 5e-3, 2.5e-3}});
  CHECK(r.passed);
  CHECK(r.residuals.front() < 1e-3);
  CHECK(r.detail("rhs") == doctest::Approx(0.1 * kPi).epsilon(1e-3));
  CHECK(r.detail("fd_derivative") == doctest::Approx(0.1 * kPi).epsilon(1e-3));

  const auto lv = cosine_leaves(grid);
  CHECK(check_first_variation(map, lv, {sine_variation(grid), {1e-2, 5e-3, 2.5e-3}}).passed);
}

TEST_CASE("first variation degenerate cases") {
  const auto grid = GridChart::uniform(circle(), 64);
  const auto map = sample_map(grid, *circle_sine(0.1));
  const auto zero = check_first_variation(map, point_foliation(grid), {TargetVectorField(grid, 1), {1e-2, 5e-3}});
  CHECK(zero.passed);
  CHECK(zero.detail("rhs") == 0.0);
  CHECK(std::abs(zero.detail("fd_derivative")) < 1e-12);

  const auto id = sample_map(grid, *AnalyticMap::identity(circle()));
  const auto harmonic = check_first_variation(id, point_foliation(grid), {sine_variation(grid), {1e-2, 5e-3}});
  CHECK(harmonic.passed);
  CHECK(std::abs(harmonic.detail("rhs")) < 1e-8);
}

TEST_CASE("first variation refuses variations that move a fixed boundary") {
  const auto box = flat({kPi}, {BoundaryTag::Fixed});
  const auto grid = GridChart::uniform(box, 33);
  const auto map = sample_map(grid, *AnalyticMap::identity(box));
  TargetVectorField v(grid, 1);
  for (std::size_t i = 0; i < grid->size(); ++i) v(i, 0) = std::cos(grid->coords(i)[0]);
  CHECK_THROWS_AS(check_first_variation(map, point_foliation(grid), {v, {1e-2}}), PreconditionError);
  // sin vanishes at both ends, so it is admissible.
  CHECK_NOTHROW(check_first_variation(map, point_foliation(grid), {sine_variation(grid), {1e-2}}));
}

TEST_CASE("Bochner term examples") {
  SUBCASE("flat source and target") {
    const auto t = torus2();
    const auto grid = GridChart::uniform(t, 16);
    const BochnerTerms b = bochner_terms(sample_map(grid, *AnalyticMap::identity(t)));
    CHECK(max_abs(b.total) == 0.0);
  }
  SUBCASE("identity of the unit sphere") {
    const auto s2 = sphere();
    const auto grid = GridChart::uniform(s2, 24);
    const BochnerTerms b = bochner_terms(sample_map(grid, *AnalyticMap::identity(s2)));
    for (std::size_t i = 0; i < grid->size(); ++i) {
      CHECK(b.ricci[i] == doctest::Approx(2.0).epsilon(1e-12));
      CHECK(b.curvature[i] == doctest::Approx(2.0).epsilon(1e-12));
      CHECK(std::abs(b.total[i]) < 1e-12);
    }
  }
  SUBCASE("equator is a harmonic circle with zero Bochner term") {
    const auto c = circle();
    const auto grid = GridChart::uniform(c, 32);
    const BochnerTerms b = bochner_terms(sample_map(grid, *AnalyticMap::latitude_circle(c, sphere(), kPi / 2, 0.0, 1)));
    CHECK(max_abs(b.total) < 1e-14);
  }
}

TEST_CASE("Bochner term agrees with a frame computation") {
  const auto s2 = sphere();
  const auto t = torus2();
  std::vector<FoliatedMapField> maps;
  maps.push_back(sample_map(GridChart::uniform(t, 24), *torus_to_sphere(t, s2)));
  const auto narrow = sphere(1.0, 0.5);
  maps.push_back(sample_map(GridChart::uniform(narrow, 24),
                            AnalyticMap("bend", narrow, s2, Point::Zero(2), Eigen::MatrixXd::Identity(2, 2),
                                        {{0, 0.1, {0.0, 1.0}, {0.0}, false}, {1, 0.1, {1.0, 0.0}, {0.0}, false}})));
  const auto h2 = hyperbolic({-2.0, 2.0}, {0.5, 3.0});
  Point offset(2);
  offset << 0.0, 1.5;
  maps.push_back(sample_map(GridChart::uniform(s2, 24),
                            AnalyticMap("into_h2", s2, h2, offset, Eigen::MatrixXd::Zero(2, 2),
                                        {{0, 0.5, {1.0, 1.0}, {0.0, 0.2}, true}, {1, 0.4, {0.0, 1.0}, {0.0}, false}})));
  for (const auto& map : maps) {
    const BochnerTerms b = bochner_terms(map);
    const JacobianField d = d_T(map);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < map.size(); ++i) {
      const auto [ric, curv] = frame_bochner(map, d, i);
      worst = std::max({worst, std::abs(b.ricci[i] - ric), std::abs(b.curvature[i] - curv)});
      scale = std::max(scale, std::abs(curv));
    }
    CHECK(scale > 0.1);
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("Weitzenbock identity: linear maps between flat tori") {
  const auto t = torus2();
  const auto grid = GridChart::uniform(t, 32);
  WindingMatrix w(2, 2);
  w << 2, 1, -1, 1;
  const auto map = sample_map(grid, *AnalyticMap::linear_with_winding(t, t, w, Point::Zero(2)));
  for (auto mode : {WeitzenbockMode::Harmonic, WeitzenbockMode::General}) {
    const auto r = check_weitzenbock(map, point_foliation(grid), mode, 1e-10);
    CHECK(r.passed);
    CHECK(r.detail("max_bochner") == 0.0);
  }
}

TEST_CASE("Weitzenbock identity: unit sphere identity with leaf volume") {
  const auto s2 = sphere();
  const auto grid = GridChart::uniform(s2, 48);
  const auto lv = leaves(grid, 2, VolumeProfile::warped(2, 0.1, 0, 1.0, 2));
  const auto map = sample_map(grid, *AnalyticMap::identity(s2));
  CHECK(check_weitzenbock(map, lv, WeitzenbockMode::Harmonic, 1e-8).passed);
  CHECK(check_weitzenbock(map, lv, WeitzenbockMode::General, 1e-8).passed);
}

TEST_CASE("Weitzenbock identity in general mode converges and fixes the curvature sign") {
  const auto t = torus2();
  const auto s2 = sphere();
  const auto probe = torus_to_sphere(t, s2);
  const auto study = refinement_study("weitzenbock", {32, 64, 128}, [&](int n) {
    const auto grid = GridChart::uniform(t, n);
    return check_weitzenbock(sample_map(grid, *probe), cosine_leaves(grid), WeitzenbockMode::General, 1.0);
  });
  CHECK(study.passed);
  // The opposite sign on the target-curvature term would leave a residual of twice that term.
  const auto grid = GridChart::uniform(t, 128);
  const auto fine = check_weitzenbock(sample_map(grid, *probe), cosine_leaves(grid), WeitzenbockMode::General, 1.0);
  CHECK(fine.residuals.front() < 1e-2 * fine.detail("max_curvature_term"));
}

TEST_CASE("leaf volume lemma") {
  const auto grid = GridChart::uniform(torus2(), 32);
  CHECK(check_lemma_volume(point_foliation(grid)).residuals.front() == 0.0);
  const auto closed = check_lemma_volume(cosine_leaves(grid));
  CHECK(closed.passed);
  CHECK(closed.residuals.front() <= 1e-12);
  const auto warped = check_lemma_volume(leaves(grid, 3, VolumeProfile::warped(3, 0.2, 1, 2.0, 2)));
  CHECK(warped.residuals.front() <= 1e-12);

  const auto study = refinement_study("lemma-volume", {32, 64, 128}, [](int n) {
    const auto g = GridChart::uniform(circle(), n);
    return check_lemma_volume(leaves(g, 1, VolumeProfile::cosine(2.0, 1.0, 0, 1.0, 1), KappaSource::Discrete), 1.0);
  });
  CHECK(study.passed);
  for (double o : study.orders) CHECK(o >= 1.9);
}

TEST_CASE("kappa examples") {
  const auto grid = GridChart::uniform(circle(), 64);
  const auto lv = cosine_leaves(grid);
  const auto wp = leaves(grid, 2, VolumeProfile::warped(2, 0.1, 0, 1.0, 1));
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const double b = grid->coords(i)[0];
    CHECK(lv.kappa()(i, 0) == doctest::Approx(std::sin(b) / (2.0 + std::cos(b))).epsilon(1e-14));
    CHECK(wp.kappa()(i, 0) == doctest::Approx(-0.2 * std::cos(b)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(VolumeProfile::cosine(1.0, 1.0, 0, 1.0, 1), ConfigError);
}

TEST_CASE("divergence check") {
  const auto grid = GridChart::uniform(circle(), 128);
  const auto x = sample_components<VectorField>(grid, 1, [](const Point& p) { return Point::Constant(1, std::cos(p[0])); });
  const auto r = check_divergence(x, cosine_leaves(grid));
  CHECK(r.passed);
  CHECK(r.residuals.front() < 1e-8);
}

TEST_CASE("composition rule") {
  const auto c = circle();
  SUBCASE("affine psi on the circle") {
    const auto grid = GridChart::uniform(c, 64);
    WindingMatrix w(1, 1);
    w << 2;
    const auto r = check_composition_rule(sample_map(grid, *circle_sine(0.1)),
                                          *AnalyticMap::linear_with_winding(c, c, w, Point::Zero(1)),
                                          point_foliation(grid), 1e-10);
    CHECK(r.passed);
  }
  SUBCASE("torus into sphere then a bend converges at second order") {
    const auto t = torus2();
    const auto s2 = sphere();
    const auto study = refinement_study("composition", {32, 64, 128}, [&](int n) {
      const auto grid = GridChart::uniform(t, n);
      return check_composition_rule(sample_map(grid, *torus_to_sphere(t, s2)), *sphere_bend(s2), point_foliation(grid),
                                    1.0);
    });
    CHECK(study.passed);
    CHECK(study.orders.size() == 2);
  }
}

TEST_CASE("point foliation reproduces the classical quantities") {
  const auto t = torus2();
  const auto s2 = sphere();
  const auto grid = GridChart::uniform(t, 32);
  const auto map = sample_map(grid, *torus_to_sphere(t, s2));
  const auto point = point_foliation(grid);
  const auto unit = leaves(grid, 2, VolumeProfile::constant(1.0, 2));
  const auto a = check_weitzenbock(map, point, WeitzenbockMode::General, 1.0);
  const auto b = check_weitzenbock(map, unit, WeitzenbockMode::General, 1.0);
  CHECK(a.residuals == b.residuals);
  CHECK(a.details == b.details);
  for (double k : point.kappa().data()) CHECK(k == 0.0);
}

TEST_CASE("refinement study bookkeeping") {
  const auto r = refinement_study("toy", {16, 32, 64}, [](int n) {
    IdentityResidualReport rep;
    rep.identity = "toy";
    rep.grids = {n};
    rep.residuals = {1.0 / (double(n) * n)};
    rep.passed = true;
    return rep;
  });
  CHECK(r.grids == std::vector<int>{16, 32, 64});
  REQUIRE(r.orders.size() == 2);
  CHECK(r.orders[0] == doctest::Approx(2.0));
  CHECK(r.passed);
  const auto slow = refinement_study("toy", {16, 32}, [](int n) {
    IdentityResidualReport rep;
    rep.residuals = {1.0 / n};
    return rep;
  });
  CHECK_FALSE(slow.passed);
  CHECK(slow.grids == std::vector<int>{16, 32});
  CHECK_THROWS_AS(refinement_study("toy", {16, 32}, [](int) { return IdentityResidualReport{}; }), PreconditionError);
  CHECK_THROWS_AS(refinement_study("toy", {16}, [](int) { return IdentityResidualReport{}; }), ConfigError);
}
