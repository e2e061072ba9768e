#pragma once

#include <Eigen/Dense>
#include <optional>

#include "nnrk/geometry.hpp"

namespace nnrk {

/// 1 N/mm^2 expressed in GPa. Energy densities are carried in GPa, so
/// p = G_c / l with G_c in N/mm is scaled by this factor.
inline constexpr double n_per_mm2 = 1e-3;

/// Units: E in GPa, f_t in GPa, G_c in N/mm, lengths in mm.
struct MaterialParams {
  double E = 1.0;
  double nu = 0.0;
  double Gc_I = 1.0;
  double Gc_II = 1.0;
  double length_scale = 1.0;
  std::optional<double> ft;
  std::optional<double> psi_c_override;
  bool plane_stress = false;
  bool damage = true;

  /// Throws Error on out-of-range values.
  void validate() const;
  /// f_t^2 / (2E) unless overridden; 0 when neither f_t nor psi_c is given.
  double psi_c() const;
};

struct Lame {
  double lambda = 0.0;
  double mu = 0.0;
};

/// Lame constants of a material scaled by `modulus_factor` (degraded zones).
Lame lame(const MaterialParams& m, double modulus_factor = 1.0);

struct SplitEnergy {
  double psi_pos = 0.0;  // tensile part
  double psi_neg = 0.0;
  double psi_I = 0.0;    // volumetric tensile part
  double psi_II = 0.0;   // deviatoric tensile part
};

/// Principal strains, largest first.
Eigen::Vector2d principal_strains(const Mat2& eps);
SplitEnergy spectral_split(const Mat2& eps, const Lame& L);
/// Tensile projection sum_i <e_i>_+ n_i n_i^T.
Mat2 positive_part(const Mat2& eps);

double update_history(double H_old, double psi_pos, double psi_c);

struct Damage {
  double eta = 0.0;
  double g = 1.0;
};
Damage damage_and_degradation(double H, double p);

/// psi = g(eta) psi0+ + psi0- + p eta^2 at fixed eta.
double energy_density(const Mat2& eps, double eta, double p, const Lame& L);
/// d psi / d eps at fixed eta.
Mat2 stress(const Mat2& eps, double eta, const Lame& L);
/// d sigma / d G at fixed eta, G the displacement gradient flattened row-major
/// as (G11, G12, G21, G22).
Eigen::Matrix4d tangent(const Mat2& eps, double eta, const Lame& L);

/// Mixed-mode critical energy release rate; returns `previous` when both
/// tensile parts vanish.
double critical_release_rate(double psi_I, double psi_II, double Gc_I, double Gc_II, double previous);

/// Energy and stress with the damage evaluated from the current strain
/// through the history floor (used inside the optimisation stage).
struct LiveResponse {
  double psi = 0.0;
  Mat2 sigma = Mat2::Zero();
  double H = 0.0;
  double eta = 0.0;
  bool live = false;  // history branch follows psi0+
  SplitEnergy split;
};
LiveResponse live_response(const Mat2& eps, double H_floor, double p, double psi_c, const Lame& L,
                           bool damage);

/// Per-cell material history.
struct MaterialState {
  Eigen::VectorXd H;
  Eigen::VectorXd eta;
  Eigen::VectorXd Gc;
  Eigen::VectorXd p;

  static MaterialState initial(Eigen::Index cells, const MaterialParams& m);
  Eigen::Index size() const { return H.size(); }
  /// Sets G_c (N/mm) and p (GPa); lifts H so that eta never decreases.
  void set_release_rate(Eigen::Index cell, double Gc, double length_scale);
};

}  // namespace nnrk
