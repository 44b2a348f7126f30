#include "prmo/channel.hpp"

#include <cmath>

namespace prmo {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Raw-coordinate bound of the inverse box mapping; keeps logits finite for
// boundary inputs.
constexpr double kRawClamp = 30.0;

Eigen::Vector2d element_at(const Eigen::VectorXd& v, int n) {
  return {v[2 * n], v[2 * n + 1]};
}

}  // namespace

Eigen::VectorXd position_projection(const Eigen::VectorXd& u_raw, double A) {
  if (A <= 0.0) throw std::invalid_argument("position_projection: region edge must be positive");
  return u_raw.unaryExpr([A](double x) { return A * sigmoid(x); });
}

Eigen::VectorXd position_projection_derivative(const Eigen::VectorXd& u_raw, double A) {
  if (A <= 0.0) throw std::invalid_argument("position_projection: region edge must be positive");
  return u_raw.unaryExpr([A](double x) {
    const double s = sigmoid(x);
    return A * s * (1.0 - s);
  });
}

Eigen::VectorXd position_projection_inverse(const Eigen::VectorXd& u, double A) {
  if (A <= 0.0) throw std::invalid_argument("position_projection: region edge must be positive");
  return u.unaryExpr([A](double x) {
    if (x <= 0.0) return -kRawClamp;
    if (x >= A) return kRawClamp;
    const double raw = std::log(x / (A - x));
    return std::clamp(raw, -kRawClamp, kRawClamp);
  });
}

Eigen::VectorXd expand_array_positions(const Eigen::VectorXd& centers, int a, double lambda) {
  if (a < 1) throw std::invalid_argument("expand_array_positions: a must be >= 1");
  if (centers.size() % 2 != 0)
    throw std::invalid_argument("expand_array_positions: coordinate count must be even");
  if (a == 1) return centers;

  const int n_ctrl = static_cast<int>(centers.size()) / 2;
  Eigen::VectorXd elems(2 * n_ctrl * a * a);
  int e = 0;
  for (int n = 0; n < n_ctrl; ++n) {
    const double cx = centers[2 * n];
    const double cy = centers[2 * n + 1];
    for (int i = 1; i <= a; ++i) {
      for (int j = 1; j <= a; ++j) {
        elems[2 * e] = cx + lambda * (2.0 * j - a - 1.0) / 4.0;
        elems[2 * e + 1] = cy + lambda * (-2.0 * i + a + 1.0) / 4.0;
        ++e;
      }
    }
  }
  return elems;
}

Eigen::VectorXd reduce_element_gradient(const Eigen::VectorXd& g_elem, int a) {
  if (a < 1) throw std::invalid_argument("reduce_element_gradient: a must be >= 1");
  if (a == 1) return g_elem;
  const int per = a * a;
  if (g_elem.size() % (2 * per) != 0)
    throw std::invalid_argument("reduce_element_gradient: length not a multiple of 2*a^2");
  const int n_ctrl = static_cast<int>(g_elem.size()) / (2 * per);
  Eigen::VectorXd g_ctr = Eigen::VectorXd::Zero(2 * n_ctrl);
  for (int n = 0; n < n_ctrl; ++n) {
    for (int e = 0; e < per; ++e) {
      const int idx = n * per + e;
      g_ctr[2 * n] += g_elem[2 * idx];
      g_ctr[2 * n + 1] += g_elem[2 * idx + 1];
    }
  }
  return g_ctr;
}

double min_center_distance(int a, double lambda) {
  if (a < 1) throw std::invalid_argument("min_center_distance: a must be >= 1");
  return (std::sqrt(2.0) * (a - 1) + 2.0) * lambda / 4.0;
}

Eigen::MatrixXcd arrival_frm(const Scenario& sc, const Eigen::VectorXd& elems) {
  const int N = static_cast<int>(elems.size()) / 2;
  const double k = sc.wavenumber();
  Eigen::MatrixXcd F(sc.L, N);
  for (int l = 0; l < sc.L; ++l) {
    for (int n = 0; n < N; ++n) {
      F(l, n) = std::polar(1.0, k * sc.rho_r.col(l).dot(element_at(elems, n)));
    }
  }
  return F;
}

Eigen::MatrixXcd departure_frm(const Scenario& sc, const Eigen::VectorXd& elems) {
  return arrival_frm(sc, elems).conjugate();
}

Eigen::MatrixXcd build_bs_irs_channel(const Scenario& sc, const Eigen::VectorXd& elems) {
  const double k = sc.wavenumber();
  // D[l,m] carries the departure phase at the BS; rows of the arrival table
  // are conjugated by the adjoint so each entry sums
  // sigma_G[l] exp(j k (rho_t[l] b[m] - rho_r[:,l]^T t_n)).
  Eigen::MatrixXcd D(sc.L, sc.M);
  for (int l = 0; l < sc.L; ++l) {
    for (int m = 0; m < sc.M; ++m) {
      D(l, m) = std::polar(1.0, k * sc.rho_t[l] * sc.b[m]);
    }
  }
  return arrival_frm(sc, elems).adjoint() * sc.sigma_G.asDiagonal() * D;
}

std::vector<Eigen::VectorXcd> build_irs_cu_responses(const Scenario& sc,
                                                     const Eigen::VectorXd& elems) {
  const Eigen::MatrixXcd Fd = departure_frm(sc, elems);
  std::vector<Eigen::VectorXcd> f(sc.K_c);
  for (int kk = 0; kk < sc.K_c; ++kk) {
    f[kk] = Fd.adjoint() * sc.sigma_f[kk];
  }
  return f;
}

Eigen::VectorXd element_positions(const Scenario& sc, const Eigen::VectorXd& u_raw) {
  return expand_array_positions(position_projection(u_raw, sc.A), sc.a, sc.lambda);
}

ChannelSet build_channels_at(const Scenario& sc, const Eigen::VectorXcd& phi,
                             const Eigen::VectorXd& elems) {
  if (phi.size() != sc.N)
    throw std::invalid_argument("build_channels_at: phi must have N entries");
  if (elems.size() != 2 * sc.N)
    throw std::invalid_argument("build_channels_at: need 2N element coordinates");

  ChannelSet ch;
  ch.G = build_bs_irs_channel(sc, elems);
  ch.f = build_irs_cu_responses(sc, elems);

  ch.h_C.resize(sc.K_c);
  for (int k = 0; k < sc.K_c; ++k) {
    ch.h_C[k] = ch.G.adjoint() * ch.f[k].asDiagonal() * phi;
  }

  const double k_wave = sc.wavenumber();
  ch.h_d.resize(sc.K_t);
  ch.h_r.resize(sc.K_t);
  ch.h_S.resize(sc.K_t);
  ch.H_S.resize(sc.K_t);
  for (int t = 0; t < sc.K_t; ++t) {
    ch.h_d[t].resize(sc.M);
    const double amp_d = std::sqrt(sc.alpha_d[t]);
    for (int m = 0; m < sc.M; ++m) {
      ch.h_d[t][m] = amp_d * std::polar(1.0, k_wave * sc.rho_B[t] * sc.b[m]);
    }
    ch.h_r[t].resize(sc.N);
    const double amp_r = std::sqrt(sc.alpha_r[t]);
    for (int n = 0; n < sc.N; ++n) {
      ch.h_r[t][n] =
          amp_r * std::polar(1.0, k_wave * sc.rho_I.col(t).dot(element_at(elems, n)));
    }
    ch.h_S[t] = ch.h_d[t] + ch.G.adjoint() * ch.h_r[t].asDiagonal() * phi;
    ch.H_S[t] = ch.h_S[t].conjugate() * ch.h_S[t].adjoint();
  }
  return ch;
}

ChannelSet build_channels(const Scenario& sc, const ProductPoint& X) {
  return build_channels_at(sc, X.phi, element_positions(sc, X.u_raw));
}

ElementPositionDerivatives element_position_derivatives(const Scenario& sc,
                                                        const Eigen::VectorXd& elems,
                                                        int n) {
  const double k = sc.wavenumber();
  const Eigen::Vector2d t_n = element_at(elems, n);
  const cxd j(0.0, 1.0);

  ElementPositionDerivatives d;
  d.dG = Eigen::MatrixXcd::Zero(sc.M, 2);
  d.df.assign(sc.K_c, Eigen::RowVector2cd::Zero());
  d.dh_r.assign(sc.K_t, Eigen::RowVector2cd::Zero());

  for (int l = 0; l < sc.L; ++l) {
    const double arr_phase = k * sc.rho_r.col(l).dot(t_n);
    const cxd e_arr = std::polar(1.0, arr_phase);
    const Eigen::RowVector2d rho = sc.rho_r.col(l).transpose();
    // G[n,m] carries exp(-j k rho_r^T t_n): derivative factor -j k rho.
    for (int m = 0; m < sc.M; ++m) {
      const cxd term =
          sc.sigma_G[l] * std::polar(1.0, k * sc.rho_t[l] * sc.b[m] - arr_phase);
      d.dG.row(m) += (-j * k * term) * rho;
    }
    // f_k[n] carries exp(+j k rho_r^T t_n): derivative factor +j k rho.
    for (int kk = 0; kk < sc.K_c; ++kk) {
      d.df[kk] += (j * k * sc.sigma_f[kk][l] * e_arr) * rho;
    }
  }
  for (int t = 0; t < sc.K_t; ++t) {
    const cxd h_rn =
        std::sqrt(sc.alpha_r[t]) * std::polar(1.0, k * sc.rho_I.col(t).dot(t_n));
    d.dh_r[t] = (j * k * h_rn) * sc.rho_I.col(t).transpose();
  }
  return d;
}

}  // namespace prmo
