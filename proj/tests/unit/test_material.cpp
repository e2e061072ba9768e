#include <random>

#include "doctest.h"
#include "nnrk/material.hpp"

using namespace nnrk;

namespace {

Lame steel() {
  MaterialParams m;
  m.E = 210;
  m.nu = 0.3;
  return lame(m);
}

Mat2 random_strain(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  Mat2 e;
  e(0, 0) = u(rng);
  e(1, 1) = u(rng);
  e(0, 1) = e(1, 0) = u(rng);
  return e;
}

Mat2 rotation(double t) {
  Mat2 R;
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return R;
}

/// sigma_ij = d psi / d eps_ij by central differences on symmetric perturbations.
Mat2 fd_stress(const Mat2& e, double eta, double p, const Lame& L) {
  Mat2 s;
  const double h = 1e-9;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Mat2 d = Mat2::Zero();
      d(i, j) += 0.5 * h;
      d(j, i) += 0.5 * h;
      s(i, j) = (energy_density(e + d, eta, p, L) - energy_density(e - d, eta, p, L)) / (2 * h);
    }
  return s;
}

}  // namespace

TEST_CASE("plane-strain Lame constants") {
  MaterialParams m;
  m.E = 210;
  m.nu = 0.3;
  const Lame L = lame(m);
  CHECK(L.lambda == doctest::Approx(210 * 0.3 / (1.3 * 0.4)));
  CHECK(L.mu == doctest::Approx(210 / 2.6));
  CHECK(lame(m, 0.5).mu == doctest::Approx(0.5 * L.mu));
}

TEST_CASE("spectral split special states") {
  const Lame L = steel();
  const double e = 1e-3, g = 2e-3;

  const SplitEnergy c = spectral_split(-e * Mat2::Identity(), L);
  const double psi0 = L.mu * 2 * e * e + 0.5 * L.lambda * 4 * e * e;
  CHECK(c.psi_pos == 0.0);
  CHECK(c.psi_neg == doctest::Approx(psi0));

  const SplitEnergy t = spectral_split(e * Mat2::Identity(), L);
  CHECK(t.psi_pos == doctest::Approx(2 * L.mu * e * e + 2 * L.lambda * e * e));
  CHECK(t.psi_I == doctest::Approx(2 * L.lambda * e * e));
  CHECK(t.psi_II == doctest::Approx(2 * L.mu * e * e));
  CHECK(std::abs(t.psi_neg) < 1e-20);

  Mat2 shear;
  shear << 0, g / 2, g / 2, 0;
  const SplitEnergy s = spectral_split(shear, L);
  CHECK(principal_strains(shear)(0) == doctest::Approx(g / 2));
  CHECK(principal_strains(shear)(1) == doctest::Approx(-g / 2));
  CHECK(s.psi_pos == doctest::Approx(L.mu * g * g / 4));
  CHECK(s.psi_I == 0.0);
  CHECK(s.psi_II == doctest::Approx(L.mu * g * g / 4));
}

TEST_CASE("split sums to the full energy and is frame invariant") {
  const Lame L = steel();
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> angle(0, 6.283185307179586);
  for (int k = 0; k < 200; ++k) {
    const Mat2 e = random_strain(rng);
    const SplitEnergy s = spectral_split(e, L);
    const double psi0 = L.mu * (e.array() * e.array()).sum() + 0.5 * L.lambda * e.trace() * e.trace();
    CHECK(std::abs(s.psi_pos + s.psi_neg - psi0) <= 1e-12 * psi0);
    CHECK(s.psi_pos == doctest::Approx(s.psi_I + s.psi_II).epsilon(1e-12));
    const Mat2 R = rotation(angle(rng));
    const SplitEnergy r = spectral_split(R * e * R.transpose(), L);
    CHECK(std::abs(r.psi_pos - s.psi_pos) <= 1e-10 * std::max(psi0, 1e-30));
    CHECK(std::abs(r.psi_neg - s.psi_neg) <= 1e-10 * std::max(psi0, 1e-30));
  }
}

TEST_CASE("history update") {
  CHECK(update_history(0.0, 0.1, 0.2) == 0.0);
  CHECK(update_history(0.7, 0.3, 0.0) == 0.7);
  CHECK(update_history(0.1, 0.5, 0.2) == doctest::Approx(0.3));
}

TEST_CASE("damage and degradation") {
  const double p = 0.25;
  CHECK(damage_and_degradation(0.0, p).eta == 0.0);
  CHECK(damage_and_degradation(0.0, p).g == 1.0);
  CHECK(damage_and_degradation(p, p).eta == doctest::Approx(0.5));
  CHECK(damage_and_degradation(p, p).g == doctest::Approx(0.25));
  CHECK(damage_and_degradation(1e4 * p, p).eta > 0.999);
}

TEST_CASE("stress limits") {
  const Lame L = steel();
  std::mt19937 rng(5);
  const Mat2 e = random_strain(rng);
  const Mat2 lin = L.lambda * e.trace() * Mat2::Identity() + 2 * L.mu * e;
  CHECK((stress(e, 0.0, L) - lin).norm() < 1e-12 * lin.norm());
  Mat2 tens;
  tens << 2e-3, 3e-4, 3e-4, 1e-3;
  CHECK(stress(tens, 1.0, L).norm() < 1e-15);
}

TEST_CASE("stress is the strain derivative of the energy at fixed damage") {
  const Lame L = steel();
  std::mt19937 rng(7);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Mat2 e = random_strain(rng);
    const Mat2 s = stress(e, 0.3, L), f = fd_stress(e, 0.3, 0.01, L);
    worst = std::max(worst, (s - f).norm() / s.norm());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("tangent is the derivative of the stress") {
  const Lame L = steel();
  std::mt19937 rng(9);
  for (int k = 0; k < 50; ++k) {
    const Mat2 e = random_strain(rng);
    const Eigen::Matrix4d C = tangent(e, 0.4, L);
    Eigen::Matrix4d F;
    const double h = 1e-10;
    for (int c = 0; c < 4; ++c) {
      Mat2 d = Mat2::Zero();
      d(c / 2, c % 2) = h;
      const Mat2 sp = stress(e + 0.5 * (d + d.transpose()), 0.4, L);
      const Mat2 sm = stress(e - 0.5 * (d + d.transpose()), 0.4, L);
      const Mat2 ds = (sp - sm) / (2 * h);
      F.col(c) << ds(0, 0), ds(0, 1), ds(1, 0), ds(1, 1);
    }
    CHECK((C - F).norm() < 1e-5 * C.norm());
  }
}

TEST_CASE("repeated principal strains give a finite isotropic stress") {
  const Lame L = steel();
  const Mat2 e = 1e-3 * Mat2::Identity();
  const Mat2 s = stress(e, 0.5, L);
  CHECK(s.allFinite());
  CHECK(std::abs(s(0, 1)) < 1e-15);
  CHECK(s(0, 0) == doctest::Approx(0.25 * (2 * L.lambda + 2 * L.mu) * 1e-3));
}

TEST_CASE("mixed-mode critical release rate") {
  const double GI = 2.7, GII = 20 * 2.7;
  CHECK(critical_release_rate(1.0, 0.0, GI, GII, -1) == GI);
  CHECK(critical_release_rate(0.0, 1.0, GI, GII, -1) == GII);
  CHECK(critical_release_rate(0.5, 0.5, GI, GII, -1) == doctest::Approx(2 * GI * 20.0 / 21.0));
  CHECK(critical_release_rate(0.0, 0.0, GI, GII, 1.234) == 1.234);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 100; ++k) {
    const double g = critical_release_rate(u(rng), u(rng), GI, GII, 0);
    CHECK(g >= GI);
    CHECK(g <= GII);
  }
}

TEST_CASE("live response follows the history branch") {
  const Lame L = steel();
  const double p = 1e-4;
  Mat2 e;
  e << 2e-3, 0, 0, 0;
  const LiveResponse below = live_response(e, 1.0, p, 0.0, L, true);
  CHECK_FALSE(below.live);
  CHECK(below.H == 1.0);
  const LiveResponse above = live_response(e, 0.0, p, 0.0, L, true);
  CHECK(above.live);
  CHECK(above.H == doctest::Approx(spectral_split(e, L).psi_pos));
  CHECK(above.eta == doctest::Approx(above.H / (above.H + p)));
  // With the damage following the strain, sigma is the total derivative.
  const double h = 1e-9;
  Mat2 d = Mat2::Zero();
  d(0, 0) = h;
  const double fd = (live_response(e + d, 0.0, p, 0.0, L, true).psi - live_response(e - d, 0.0, p, 0.0, L, true).psi) /
                    (2 * h);
  CHECK(above.sigma(0, 0) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("release-rate update never lowers the damage") {
  MaterialParams m;
  m.Gc_I = 1.0;
  m.length_scale = 0.1;
  MaterialState s = MaterialState::initial(1, m);
  s.H(0) = 0.5 * s.p(0);
  s.eta(0) = damage_and_degradation(s.H(0), s.p(0)).eta;
  const double before = s.eta(0);
  s.set_release_rate(0, 4.0, m.length_scale);
  CHECK(damage_and_degradation(s.H(0), s.p(0)).eta >= before - 1e-15);
}

TEST_CASE("material validation and psi_c") {
  MaterialParams m;
  m.E = 10;
  CHECK(m.psi_c() == 0.0);
  m.ft = 0.02;
  CHECK(m.psi_c() == doctest::Approx(0.02 * 0.02 / 20));
  m.psi_c_override = 1e-6;
  CHECK(m.psi_c() == 1e-6);
  m.nu = 0.5;
  CHECK_THROWS(m.validate());
}
