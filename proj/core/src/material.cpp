#include "nnrk/material.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "nnrk/errors.hpp"

namespace nnrk {

void MaterialParams::validate() const {
  if (!(E > 0.0)) throw Error("material: E must be positive");
  if (!(nu > -1.0 && nu < 0.5)) throw Error("material: nu must lie in (-1, 0.5)");
  if (!(Gc_I > 0.0) || !(Gc_II > 0.0)) throw Error("material: Gc_I and Gc_II must be positive");
  if (!(length_scale > 0.0)) throw Error("material: length_scale must be positive");
  if (ft && !(*ft > 0.0)) throw Error("material: ft must be positive");
  if (psi_c_override && !(*psi_c_override >= 0.0)) throw Error("material: psi_c must be >= 0");
}

double MaterialParams::psi_c() const {
  if (psi_c_override) return *psi_c_override;
  if (ft) return (*ft) * (*ft) / (2.0 * E);
  return 0.0;
}

Lame lame(const MaterialParams& m, double modulus_factor) {
  const double E = m.E * modulus_factor;
  Lame L;
  L.mu = E / (2.0 * (1.0 + m.nu));
  L.lambda = E * m.nu / ((1.0 + m.nu) * (1.0 - 2.0 * m.nu));
  if (m.plane_stress) L.lambda = 2.0 * L.lambda * L.mu / (L.lambda + 2.0 * L.mu);
  return L;
}

Eigen::Vector2d principal_strains(const Mat2& eps) {
  const double m = 0.5 * (eps(0, 0) + eps(1, 1));
  const double d = 0.5 * (eps(0, 0) - eps(1, 1));
  const double o = 0.5 * (eps(0, 1) + eps(1, 0));
  const double r = std::hypot(d, o);
  return {m + r, m - r};
}

namespace {

inline double pos(double v) { return v > 0.0 ? v : 0.0; }
inline double heaviside(double v) { return v > 0.0 ? 1.0 : 0.0; }

Mat2 sym(const Mat2& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

Mat2 positive_part(const Mat2& eps_in) {
  const Mat2 eps = sym(eps_in);
  const Eigen::Vector2d e = principal_strains(eps);
  if (e(1) > 0.0) return eps;
  if (e(0) <= 0.0) return Mat2::Zero();
  // e1 > 0 >= e2: the eigenvalues are distinct, so the spectral projector is well defined.
  const Mat2 P1 = (eps - e(1) * Mat2::Identity()) / (e(0) - e(1));
  return e(0) * P1;
}

SplitEnergy spectral_split(const Mat2& eps, const Lame& L) {
  const Eigen::Vector2d e = principal_strains(eps);
  const double tr = e(0) + e(1);
  SplitEnergy s;
  s.psi_I = 0.5 * L.lambda * pos(tr) * pos(tr);
  s.psi_II = L.mu * (pos(e(0)) * pos(e(0)) + pos(e(1)) * pos(e(1)));
  s.psi_pos = s.psi_I + s.psi_II;
  const double psi0 = L.mu * (e(0) * e(0) + e(1) * e(1)) + 0.5 * L.lambda * tr * tr;
  s.psi_neg = psi0 - s.psi_pos;
  return s;
}

double update_history(double H_old, double psi_pos, double psi_c) {
  return std::max({H_old, psi_pos - psi_c, 0.0});
}

Damage damage_and_degradation(double H, double p) {
  Damage d;
  d.eta = H / (H + p);
  d.g = (1.0 - d.eta) * (1.0 - d.eta);
  return d;
}

double energy_density(const Mat2& eps, double eta, double p, const Lame& L) {
  const SplitEnergy s = spectral_split(eps, L);
  return (1.0 - eta) * (1.0 - eta) * s.psi_pos + s.psi_neg + p * eta * eta;
}

namespace {

struct SplitStress {
  Mat2 pos;
  Mat2 full;
};

SplitStress split_stress(const Mat2& eps_in, const Lame& L) {
  const Mat2 eps = sym(eps_in);
  const double tr = eps.trace();
  SplitStress s;
  s.pos = L.lambda * pos(tr) * Mat2::Identity() + 2.0 * L.mu * positive_part(eps);
  s.full = L.lambda * tr * Mat2::Identity() + 2.0 * L.mu * eps;
  return s;
}

}  // namespace

Mat2 stress(const Mat2& eps, double eta, const Lame& L) {
  const SplitStress s = split_stress(eps, L);
  const double g = (1.0 - eta) * (1.0 - eta);
  return g * s.pos + (s.full - s.pos);
}

Eigen::Matrix4d tangent(const Mat2& eps_in, double eta, const Lame& L) {
  const Mat2 eps = sym(eps_in);
  const Eigen::Vector2d e = principal_strains(eps);
  const double tr = e(0) + e(1);
  const double g = (1.0 - eta) * (1.0 - eta);

  Mat2 R = Mat2::Identity();
  double h1 = heaviside(e(0)), h2 = heaviside(e(1)), theta = 0.0;
  if (e(1) > 0.0) {
    theta = 1.0;
  } else if (e(0) > 0.0) {
    Eigen::SelfAdjointEigenSolver<Mat2> eig;
    eig.computeDirect(eps);
    R.col(0) = eig.eigenvectors().col(1);  // largest eigenvalue
    R.col(1) = eig.eigenvectors().col(0);
    theta = e(0) / (e(0) - e(1));
  }

  Eigen::Matrix4d C;
  for (int k = 0; k < 4; ++k) {
    Mat2 dG = Mat2::Zero();
    dG(k / 2, k % 2) = 1.0;
    const Mat2 de = sym(dG);
    Mat2 dp = Mat2::Zero();
    if (theta == 1.0 && h1 == 1.0 && h2 == 1.0) {
      dp = de;
    } else if (h1 > 0.0) {
      const Mat2 dh = R.transpose() * de * R;
      Mat2 dq;
      dq << h1 * dh(0, 0), theta * dh(0, 1), theta * dh(1, 0), h2 * dh(1, 1);
      dp = R * dq * R.transpose();
    }
    const Mat2 dpos = L.lambda * heaviside(tr) * de.trace() * Mat2::Identity() + 2.0 * L.mu * dp;
    const Mat2 dfull = L.lambda * de.trace() * Mat2::Identity() + 2.0 * L.mu * de;
    const Mat2 ds = g * dpos + (dfull - dpos);
    C.col(k) << ds(0, 0), ds(0, 1), ds(1, 0), ds(1, 1);
  }
  return C;
}

double critical_release_rate(double psi_I, double psi_II, double Gc_I, double Gc_II, double previous) {
  if (!(psi_I + psi_II > 0.0)) return previous;
  if (psi_II == 0.0) return Gc_I;
  if (psi_I == 0.0) return Gc_II;
  return (psi_I + psi_II) / (psi_I / Gc_I + psi_II / Gc_II);
}

LiveResponse live_response(const Mat2& eps, double H_floor, double p, double psi_c, const Lame& L,
                           bool damage) {
  LiveResponse r;
  r.split = spectral_split(eps, L);
  const SplitStress s = split_stress(eps, L);
  if (!damage) {
    r.psi = r.split.psi_pos + r.split.psi_neg;
    r.sigma = s.full;
    return r;
  }
  const double candidate = r.split.psi_pos - psi_c;
  r.live = candidate > H_floor && candidate > 0.0;
  r.H = r.live ? candidate : std::max(H_floor, 0.0);
  const Damage d = damage_and_degradation(r.H, p);
  r.eta = d.eta;
  r.psi = d.g * r.split.psi_pos + r.split.psi_neg + p * d.eta * d.eta;
  r.sigma = d.g * s.pos + (s.full - s.pos);
  if (r.live) {
    const double dpsi_deta = -2.0 * (1.0 - d.eta) * r.split.psi_pos + 2.0 * p * d.eta;
    const double deta_dH = p / ((r.H + p) * (r.H + p));
    r.sigma += dpsi_deta * deta_dH * s.pos;
  }
  return r;
}

MaterialState MaterialState::initial(Eigen::Index cells, const MaterialParams& m) {
  MaterialState s;
  s.H = Eigen::VectorXd::Zero(cells);
  s.eta = Eigen::VectorXd::Zero(cells);
  s.Gc = Eigen::VectorXd::Constant(cells, m.Gc_I);
  s.p = Eigen::VectorXd::Constant(cells, n_per_mm2 * m.Gc_I / m.length_scale);
  return s;
}

void MaterialState::set_release_rate(Eigen::Index cell, double Gc_new, double length_scale) {
  Gc(cell) = Gc_new;
  p(cell) = n_per_mm2 * Gc_new / length_scale;
  const double e = eta(cell);
  if (e > 0.0 && e < 1.0) H(cell) = std::max(H(cell), e * p(cell) / (1.0 - e));
}

}  // namespace nnrk
