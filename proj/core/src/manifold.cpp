#include "prmo/manifold.hpp"

namespace prmo {

namespace {

void check_same_shape(const TangentVector& a, const TangentVector& b) {
  if (a.W.rows() != b.W.rows() || a.W.cols() != b.W.cols() ||
      a.V.rows() != b.V.rows() || a.V.cols() != b.V.cols() ||
      a.phi.size() != b.phi.size() || a.u_raw.size() != b.u_raw.size()) {
    throw std::invalid_argument("block shapes do not match");
  }
}

void check_same_shape(const ProductPoint& X, const TangentVector& z) {
  if (X.W.rows() != z.W.rows() || X.W.cols() != z.W.cols() ||
      X.V.rows() != z.V.rows() || X.V.cols() != z.V.cols() ||
      X.phi.size() != z.phi.size() || X.u_raw.size() != z.u_raw.size()) {
    throw std::invalid_argument("point/vector block shapes do not match");
  }
}

}  // namespace

TangentVector zero_like(const ProductPoint& X) {
  TangentVector z;
  z.W = Eigen::MatrixXcd::Zero(X.W.rows(), X.W.cols());
  z.V = Eigen::MatrixXcd::Zero(X.V.rows(), X.V.cols());
  z.phi = Eigen::VectorXcd::Zero(X.phi.size());
  z.u_raw = Eigen::VectorXd::Zero(X.u_raw.size());
  return z;
}

double inner(const TangentVector& a, const TangentVector& b) {
  check_same_shape(a, b);
  double s = 0.0;
  s += (a.W.conjugate().cwiseProduct(b.W)).sum().real();
  s += (a.V.conjugate().cwiseProduct(b.V)).sum().real();
  s += (a.phi.conjugate().cwiseProduct(b.phi)).sum().real();
  s += a.u_raw.dot(b.u_raw);
  return s;
}

double norm(const TangentVector& a) { return std::sqrt(inner(a, a)); }

TangentVector add_scaled(const TangentVector& a, double s, const TangentVector& b) {
  check_same_shape(a, b);
  TangentVector r;
  r.W = a.W + s * b.W;
  r.V = a.V + s * b.V;
  r.phi = a.phi + s * b.phi;
  r.u_raw = a.u_raw + s * b.u_raw;
  return r;
}

void scale_in_place(TangentVector& a, double s) {
  a.W *= s;
  a.V *= s;
  a.phi *= s;
  a.u_raw *= s;
}

TangentVector project_tangent(const ProductPoint& X, const TangentVector& E) {
  check_same_shape(X, E);
  TangentVector z = E;
  for (Eigen::Index j = 0; j < X.V.cols(); ++j) {
    const double radial = X.V.col(j).dot(E.V.col(j)).real();  // Re(V_j^H E_j)
    z.V.col(j) -= radial * X.V.col(j);
  }
  for (Eigen::Index n = 0; n < X.phi.size(); ++n) {
    const double radial = (std::conj(X.phi[n]) * E.phi[n]).real();
    z.phi[n] -= radial * X.phi[n];
  }
  return z;
}

ProductPoint retract(const ProductPoint& X, const TangentVector& d, double alpha) {
  check_same_shape(X, d);
  constexpr double kDegenerate = 1e-14;
  ProductPoint Y;
  Y.W = X.W + alpha * d.W;
  Y.u_raw = X.u_raw + alpha * d.u_raw;
  Y.V = X.V + alpha * d.V;
  for (Eigen::Index j = 0; j < Y.V.cols(); ++j) {
    const double nv = Y.V.col(j).norm();
    if (nv < kDegenerate) {
      throw DegenerateRetraction("retraction: filter column norm vanished");
    }
    Y.V.col(j) /= nv;
  }
  Y.phi = X.phi + alpha * d.phi;
  for (Eigen::Index n = 0; n < Y.phi.size(); ++n) {
    const double m = std::abs(Y.phi[n]);
    if (m < kDegenerate) {
      throw DegenerateRetraction("retraction: reflection coefficient modulus vanished");
    }
    Y.phi[n] /= m;
  }
  return Y;
}

TangentVector transport(const ProductPoint& target, const TangentVector& zeta) {
  return project_tangent(target, zeta);
}

double displacement(const ProductPoint& X, const ProductPoint& Y) {
  double s = 0.0;
  s += (X.W - Y.W).squaredNorm();
  s += (X.V - Y.V).squaredNorm();
  s += (X.phi - Y.phi).squaredNorm();
  s += (X.u_raw - Y.u_raw).squaredNorm();
  return std::sqrt(s);
}

bool on_manifold(const ProductPoint& X, double tol) {
  for (Eigen::Index j = 0; j < X.V.cols(); ++j) {
    if (std::abs(X.V.col(j).norm() - 1.0) > tol) return false;
  }
  for (Eigen::Index n = 0; n < X.phi.size(); ++n) {
    if (std::abs(std::abs(X.phi[n]) - 1.0) > tol) return false;
  }
  return X.W.allFinite() && X.u_raw.allFinite();
}

bool in_tangent_space(const ProductPoint& X, const TangentVector& z, double tol) {
  for (Eigen::Index j = 0; j < X.V.cols(); ++j) {
    if (std::abs(X.V.col(j).dot(z.V.col(j)).real()) > tol) return false;
  }
  for (Eigen::Index n = 0; n < X.phi.size(); ++n) {
    if (std::abs((std::conj(X.phi[n]) * z.phi[n]).real()) > tol) return false;
  }
  return true;
}

ProductPoint random_point(int M, int K_c, int K_t, int N, int n_ctrl,
                          std::mt19937_64& rng, double u_spread) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  ProductPoint X;
  X.W.resize(M, K_c + M);
  for (Eigen::Index i = 0; i < X.W.size(); ++i) {
    X.W.data()[i] = cxd(gauss(rng), gauss(rng)) * inv_sqrt2;
  }
  X.V.resize(static_cast<Eigen::Index>(M) * (M + K_c), K_t);
  for (Eigen::Index i = 0; i < X.V.size(); ++i) {
    X.V.data()[i] = cxd(gauss(rng), gauss(rng)) * inv_sqrt2;
  }
  for (Eigen::Index j = 0; j < X.V.cols(); ++j) X.V.col(j).normalize();
  X.phi.resize(N);
  for (Eigen::Index n = 0; n < N; ++n) {
    X.phi[n] = std::polar(1.0, angle(rng));
  }
  X.u_raw.resize(2 * n_ctrl);
  for (Eigen::Index i = 0; i < X.u_raw.size(); ++i) X.u_raw[i] = u_spread * gauss(rng);
  return X;
}

TangentVector random_ambient(const ProductPoint& X, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  TangentVector z = zero_like(X);
  for (Eigen::Index i = 0; i < z.W.size(); ++i) z.W.data()[i] = cxd(gauss(rng), gauss(rng));
  for (Eigen::Index i = 0; i < z.V.size(); ++i) z.V.data()[i] = cxd(gauss(rng), gauss(rng));
  for (Eigen::Index i = 0; i < z.phi.size(); ++i) z.phi[i] = cxd(gauss(rng), gauss(rng));
  for (Eigen::Index i = 0; i < z.u_raw.size(); ++i) z.u_raw[i] = gauss(rng);
  return z;
}

}  // namespace prmo
