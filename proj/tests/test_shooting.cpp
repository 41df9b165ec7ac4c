#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "isoperim/shooting.hpp"

using namespace isoperim;

namespace {
constexpr double kPi = std::numbers::pi;

double max_radial_deviation(const Candidate& c) {
  double dev = 0.0;
  for (const auto& st : c.half->steps()) {
    const double t1 = std::min(st.t1(), c.half->t_end());
    for (int j = 0; j <= 4; ++j) dev = std::max(dev, std::fabs(c.half->at(st.t0 + (t1 - st.t0) * j / 4).r - c.r_start));
  }
  return dev;
}

void expect_candidate_invariants(const Candidate& c) {
  EXPECT_GT(c.P, 0.0);
  EXPECT_GT(c.V, 0.0);
  if (c.is_circle) {
    EXPECT_LE(std::fabs(c.r_end - c.r_start), 1e-6);
    EXPECT_TRUE(c.encloses_origin);
  }
  if (c.encloses_origin && !c.is_circle) EXPECT_LT(c.r_end, c.r_start);
  // Circle iff the curve stays on r = r_start.
  EXPECT_EQ(c.is_circle, max_radial_deviation(c) <= 1e-6) << "kappa_f = " << c.kappa_f;
}
}  // namespace

TEST(Shoot, EuclideanUnitCircle) {
  const auto s = shoot(euclidean_plane(), 1.0, 1.0);
  ASSERT_TRUE(s.crossed());
  EXPECT_NEAR(*s.crossing_theta, kPi, 1e-10);
  EXPECT_LE(std::fabs(*s.closure_defect), 1e-10);
  EXPECT_TRUE(*s.encloses_origin);
  EXPECT_LE(std::fabs(std::sin(s.trajectory->back().theta)), 1e-12);
}

TEST(Shoot, BorellCircleHasZeroDefect) {
  const auto b = borell_hyperbolic();
  const auto s = shoot(b, 2.0, logderiv_fh(b, 2.0));
  ASSERT_TRUE(s.crossed());
  EXPECT_EQ(*s.closure_defect, 0.0);
  EXPECT_NEAR(*s.crossing_theta, kPi, 1e-12);
  EXPECT_EQ(s.trajectory->back().r, 2.0);
}

TEST(Shoot, BorellOffCircleDefectStableUnderTolerance) {
  const auto b = borell_hyperbolic();
  const double kappa = logderiv_fh(b, 3.0) + 1.0;
  ShootOptions a, h;
  a.integ.rtol = a.integ.atol = 1e-11;
  h.integ.rtol = h.integ.atol = 5e-12;
  const auto s1 = shoot(b, 3.0, kappa, a);
  const auto s2 = shoot(b, 3.0, kappa, h);
  ASSERT_TRUE(s1.crossed());
  ASSERT_TRUE(s2.crossed());
  EXPECT_GT(std::fabs(*s1.closure_defect), 1e-3);
  EXPECT_NEAR(*s1.closure_defect, *s2.closure_defect, 1e-8);
  EXPECT_GT(*s1.closure_defect, 0.0);  // recorded sign
}

TEST(Shoot, WindowStopsInadmissibleShots) {
  const auto b = borell_hyperbolic();
  ShootOptions o;
  o.admissible_window = true;
  const auto lo = shoot(b, 3.0, logderiv_fh(b, 3.0) - 0.5, o);
  EXPECT_EQ(lo.termination, Termination::alpha_level);
  EXPECT_LT(lo.trajectory->back().alpha, kPi / 2);
  const auto hi = shoot(b, 3.0, logderiv_fh(b, 3.0) + 1.0, o);
  EXPECT_EQ(hi.termination, Termination::alpha_level);
  EXPECT_GT(hi.trajectory->back().alpha, 1.5 * kPi);
}

TEST(Shoot, RejectsStartInsideGuard) { EXPECT_THROW(shoot(euclidean_plane(), 1e-9, 1.0), std::domain_error); }

TEST(FindClosed, EuclideanCircle) {
  for (double R : {0.5, 1.0, 2.0}) {
    auto c = find_closed(euclidean_plane(), R, true);
    ASSERT_TRUE(c.has_value());
    EXPECT_TRUE(c->is_circle);
    EXPECT_NEAR(c->kappa_f, 1.0 / R, 1e-12);
    EXPECT_NEAR(c->P, 2 * kPi * R, 1e-8 * c->P);
    EXPECT_NEAR(c->V, kPi * R * R, 1e-8 * c->V);
    expect_candidate_invariants(*c);
  }
}

TEST(FindClosed, HyperbolicCircle) {
  for (double R : {0.4, 1.0, 2.2}) {
    auto c = find_closed(hyperbolic_plane(), R, true);
    ASSERT_TRUE(c.has_value());
    EXPECT_TRUE(c->is_circle);
    EXPECT_NEAR(c->kappa_f, 1.0 / std::tanh(R), 1e-12);
    EXPECT_NEAR(c->P, 2 * kPi * std::sinh(R), 1e-8 * c->P);
    EXPECT_NEAR(c->V, 2 * kPi * (std::cosh(R) - 1.0), 1e-8 * c->V);
  }
}

TEST(FindClosed, CircleClosedFormAcrossSurfaces) {
  const std::vector<Surface> ss{borell_hyperbolic(), gaussian_euclidean(),
                                Surface(RadialFunction::sinh(), RadialFunction::power(1.0, 2.0))};
  for (const auto& s : ss) {
    for (double R : {0.8, 1.7, 2.6}) {
      auto c = find_closed(s, R, true);
      ASSERT_TRUE(c.has_value());
      EXPECT_TRUE(c->is_circle);
      EXPECT_NEAR(c->P, 2 * kPi * s.fh(R), 1e-8 * c->P);
      EXPECT_NEAR(c->V, 2 * kPi * s.area_primitive(R), 1e-8 * c->V);
      expect_candidate_invariants(*c);
    }
  }
}

TEST(FindClosed, GaussianNonEnclosingAbsentWithBracket) {
  const auto g = gaussian_euclidean();
  const auto res = search_closed(g, 2.0, false);
  EXPECT_TRUE(res.roots.empty());
  EXPECT_NEAR(res.kappa_lo, logderiv_fh(g, 2.0) - 5.0, 1e-12);
  EXPECT_NEAR(res.kappa_hi, logderiv_fh(g, 2.0) + 5.0, 1e-12);
  EXPECT_EQ(res.panels, 64);
  EXPECT_FALSE(find_closed(g, 2.0, false).has_value());
}

TEST(FindClosed, FlatPlaneLoopsAreOffCenterCircles) {
  // With f = 1 the non-enclosing closed shots from r_start are circles of
  // radius rho = 1/kappa through (r_start, 0) centered at r_start - rho.
  const auto res = search_closed(euclidean_plane(), 1.0, false);
  ASSERT_FALSE(res.roots.empty());
  for (const auto& c : res.roots) {
    const double rho = 1.0 / c.kappa_f;
    EXPECT_FALSE(c.encloses_origin);
    EXPECT_FALSE(c.is_circle);
    EXPECT_NEAR(c.r_end, 1.0 - 2.0 * rho, 1e-9);
    EXPECT_NEAR(c.P, 2 * kPi * rho, 1e-9);
    EXPECT_NEAR(c.V, kPi * rho * rho, 1e-9);
    expect_candidate_invariants(c);
  }
}

TEST(FindClosed, NonEnclosingLoopSelfConsistent) {
  const auto e = euclidean_plane();
  auto c = find_closed(e, 2.0, false);
  ASSERT_TRUE(c.has_value());
  ShootOptions tight;
  tight.integ.rtol = tight.integ.atol = 1e-13;
  const auto s = shoot(e, 2.0, c->kappa_f, tight);
  ASSERT_TRUE(s.crossed());
  const auto d = candidate_from_shot(e, 2.0, c->kappa_f, s);
  EXPECT_NEAR(d.P, c->P, 1e-8 * c->P);
  EXPECT_NEAR(d.V, c->V, 1e-8 * c->V);
}

TEST(FindClosed, HyperbolicEnclosingNonCircles) {
  const auto res = search_closed(hyperbolic_plane(), 1.0, true);
  ASSERT_GE(res.roots.size(), 2u);
  EXPECT_TRUE(res.roots.front().is_circle);
  for (const auto& c : res.roots) expect_candidate_invariants(c);
}

TEST(CandidatesAtVolume, EuclideanPi) {
  VolumeScan scan;
  scan.r_starts = default_scan_grid(1.0, 4);
  const auto cs = candidates_at_volume(euclidean_plane(), kPi, scan);
  ASSERT_FALSE(cs.empty());
  const Candidate* w = min_perimeter(cs);
  ASSERT_NE(w, nullptr);
  EXPECT_TRUE(w->is_circle);
  EXPECT_NEAR(w->r_start, 1.0, 1e-10);
  EXPECT_NEAR(w->P, 2 * kPi, 1e-8);
  for (const auto& c : cs) EXPECT_LE(std::fabs(c.V - kPi) / kPi, 1e-6);
}

TEST(CandidatesAtVolume, HyperbolicUnitBall) {
  VolumeScan scan;
  scan.r_starts = default_scan_grid(1.0, 4);
  const double V = 2 * kPi * (std::cosh(1.0) - 1.0);
  const auto cs = candidates_at_volume(hyperbolic_plane(), V, scan);
  const Candidate* w = min_perimeter(cs);
  ASSERT_NE(w, nullptr);
  EXPECT_TRUE(w->is_circle);
  EXPECT_NEAR(w->P, 2 * kPi * std::sinh(1.0), 1e-8);
}

TEST(CandidatesAtVolume, BorellForty) {
  const auto b = borell_hyperbolic();
  const double r0 = *logconvexity_onset(b);
  VolumeScan scan;
  scan.r_starts = default_scan_grid(centered_circle_radius(b, 40.0));
  const auto cs = candidates_at_volume(b, 40.0, scan);
  ASSERT_FALSE(cs.empty());
  bool has_circle = false;
  for (const auto& c : cs) {
    if (c.is_circle) {
      has_circle = true;
      EXPECT_NEAR(c.V, 40.0, 1e-8 * 40.0);
    } else if (c.encloses_origin) {
      EXPECT_LT(c.r_end, r0);
    }
  }
  EXPECT_TRUE(has_circle);
}

TEST(CandidatesAtVolume, OrderedAndDeduplicated) {
  VolumeScan scan;
  scan.r_starts = {1.5, 1.5, 2.0};
  const auto cs = candidates_at_volume(euclidean_plane(), kPi, scan);
  for (std::size_t i = 1; i < cs.size(); ++i) {
    const auto &a = cs[i - 1], &c = cs[i];
    EXPECT_TRUE(a.encloses_origin > c.encloses_origin ||
                (a.encloses_origin == c.encloses_origin && a.r_start <= c.r_start));
    EXPECT_FALSE(std::fabs(a.kappa_f - c.kappa_f) < 1e-8 && std::fabs(a.r_start - c.r_start) < 1e-8);
  }
}

TEST(CandidatesAtVolume, VolumeBeyondCapRejected) {
  EXPECT_THROW(centered_circle_radius(euclidean_plane(), 1e6), std::domain_error);
  EXPECT_THROW(centered_circle_radius(euclidean_plane(), -1.0), std::invalid_argument);
  EXPECT_NEAR(centered_circle_radius(euclidean_plane(), kPi), 1.0, 1e-12);
}

TEST(CandidateJson, Format) {
  auto c = circle_candidate(euclidean_plane(), 1.0);
  std::ostringstream os;
  write_candidates_json(os, {c});
  const auto j = json::parse(os.str());
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j.size(), 1u);
  for (const char* k : {"kappa_f", "r_start", "r_end", "encloses_origin", "P", "V", "is_circle"})
    EXPECT_TRUE(j[0].contains(k)) << k;
  EXPECT_EQ(j[0]["P"].get<double>(), c.P);
  EXPECT_EQ(j[0]["V"].get<double>(), c.V);
  EXPECT_TRUE(j[0]["is_circle"].get<bool>());
}
