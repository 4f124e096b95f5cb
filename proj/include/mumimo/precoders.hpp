#pragma once

// Linear zero-forcing, linear MMSE and zero-forcing Tomlinson-Harashima
// precoding, with the matching per-user receiver processing.
//
// Conventions: total transmit power P_T = 1 for the linear schemes, unit
// average symbol energy, receivers know their own scaling (sqrt(gamma) or
// g_k).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mumimo/error.hpp"
#include "mumimo/linalg.hpp"
#include "mumimo/qam.hpp"

namespace mumimo {

enum class Scheme { lzf, lmmse, zfthp };

struct PrecodedFrame {
  CVector x;                  // transmit vector, one entry per antenna
  std::vector<double> scale;  // per-user receiver gain
};

namespace detail {

inline void check_symbols(const ComplexMatrix& h, std::span<const cplx> s) {
  if (s.size() != h.rows()) throw DimensionMismatch("precoder: one symbol per user required");
}

// W = H^H (H H^H + alpha I)^-1 and its power Tr{W^H W}.
inline std::pair<ComplexMatrix, double> regularized_inverse(const ComplexMatrix& h, double alpha) {
  ComplexMatrix g = gram(h);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) += alpha;
  ComplexMatrix w = h.adjoint() * gauss_jordan_inverse(g);
  double power = 0.0;
  for (const auto& z : w.entries()) power += std::norm(z);
  return {std::move(w), power};
}

}  // namespace detail

/// x = H^+ s / sqrt(gamma). Throws Singular.
inline PrecodedFrame lzf_precode(const ComplexMatrix& h, std::span<const cplx> s) {
  detail::check_symbols(h, s);
  const ComplexMatrix g_inv = gauss_jordan_inverse(gram(h));
  double gam = 0.0;
  for (std::size_t i = 0; i < g_inv.rows(); ++i) gam += g_inv(i, i).real();
  const CVector u = g_inv * s;
  CVector x = h.adjoint() * std::span<const cplx>(u);
  const double inv_root = 1.0 / std::sqrt(gam);
  for (auto& v : x) v *= inv_root;
  return {std::move(x), std::vector<double>(h.rows(), std::sqrt(gam))};
}

/// Unnormalized LMMSE precoding matrix H^H (H H^H + alpha I)^-1.
inline ComplexMatrix lmmse_matrix(const ComplexMatrix& h, double alpha) {
  return detail::regularized_inverse(h, alpha).first;
}

/// LMMSE precoding with alpha = k * sigma2, renormalized to unit expected
/// transmit power like LZF.
inline PrecodedFrame lmmse_precode(const ComplexMatrix& h, std::span<const cplx> s,
                                   double sigma2, std::size_t k) {
  detail::check_symbols(h, s);
  if (!(sigma2 > 0.0)) throw std::invalid_argument("lmmse_precode: sigma2 must be positive");
  const double alpha = static_cast<double>(k) * sigma2;
  auto [w, power] = detail::regularized_inverse(h, alpha);
  CVector x = w * s;
  const double inv_root = 1.0 / std::sqrt(power);
  for (auto& v : x) v *= inv_root;
  return {std::move(x), std::vector<double>(h.rows(), std::sqrt(power))};
}

// ---------------------------------------------------------------------------
// Tomlinson-Harashima
// ---------------------------------------------------------------------------

/// Folds each component of a into [-tau/2, tau/2).
inline cplx mod_tau(cplx a, double tau) {
  const double re = a.real() - std::floor(a.real() / tau + 0.5) * tau;
  const double im = a.imag() - std::floor(a.imag() / tau + 0.5) * tau;
  return {re, im};
}

struct ThpFactors {
  ComplexMatrix f;        // feedforward Q^H
  ComplexMatrix b;        // unit lower-triangular feedback G R^H
  std::vector<double> g;  // receiver scalings 1/R_ii
  double tau = kQam16Tau;
};

namespace detail {

// QRD of the (tall) matrix a = H^H in natural user order.
inline ThpFactors thp_from_adjoint(const ComplexMatrix& a, double tau) {
  const std::size_t users = a.cols();
  QrFactors qr = qrd_mgs(a, users, PivotRule::natural());
  ComplexMatrix b(users, users);
  std::vector<double> g(users);
  for (std::size_t i = 0; i < users; ++i) {
    g[i] = 1.0 / qr.r(i, i).real();
    for (std::size_t j = 0; j < i; ++j) b(i, j) = g[i] * std::conj(qr.r(j, i));
    b(i, i) = 1.0;
  }
  return {qr.q.adjoint(), std::move(b), std::move(g), tau};
}

}  // namespace detail

/// F = Q^H, B = G R^H, G = diag(1/R_ii) from H^H = QR. Throws RankDeficient.
inline ThpFactors thp_factorize(const ComplexMatrix& h, double tau = kQam16Tau) {
  if (h.rows() > h.cols()) throw DimensionMismatch("thp_factorize: more users than antennas");
  return detail::thp_from_adjoint(h.adjoint(), tau);
}

/// Same construction applied to [H  sqrt(alpha) I], alpha = k * sigma2.
/// The feedforward matrix then has N + M columns.
inline ThpFactors thp_factorize_regularized(const ComplexMatrix& h, double sigma2, std::size_t k,
                                            double tau = kQam16Tau) {
  if (sigma2 < 0.0) throw std::invalid_argument("thp_factorize_regularized: sigma2 < 0");
  const std::size_t m = h.rows();
  const std::size_t n = h.cols();
  const double root_alpha = std::sqrt(static_cast<double>(k) * sigma2);
  ComplexMatrix augmented(m, n + m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) augmented(r, c) = h(r, c);
    augmented(r, n + r) = root_alpha;
  }
  return detail::thp_from_adjoint(augmented.adjoint(), tau);
}

/// Successive pre-subtraction v_k = MOD(s_k - sum_{j<k} B_kj v_j), then x = F^H v.
inline PrecodedFrame thp_transmit(const ThpFactors& factors, std::span<const cplx> s) {
  const std::size_t users = factors.b.rows();
  if (s.size() != users) throw DimensionMismatch("thp_transmit: one symbol per user required");
  CVector v(users);
  for (std::size_t k = 0; k < users; ++k) {
    cplx acc = s[k];
    for (std::size_t j = 0; j < k; ++j) acc -= factors.b(k, j) * v[j];
    v[k] = mod_tau(acc, factors.tau);
  }
  const std::size_t n = factors.f.cols();
  CVector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < users; ++k) acc += std::conj(factors.f(k, i)) * v[k];
    x[i] = acc;
  }
  return {std::move(x), factors.g};
}

/// Per-user receiver: sqrt(gamma)-style scaling for the linear schemes,
/// g_k scaling followed by MOD for THP. Output is ready for demapping.
inline CVector receive_detect(std::span<const cplx> y, Scheme scheme,
                              std::span<const double> scale, double tau = kQam16Tau) {
  if (y.size() != scale.size()) throw DimensionMismatch("receive_detect: length mismatch");
  CVector out(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    out[k] = y[k] * scale[k];
    if (scheme == Scheme::zfthp) out[k] = mod_tau(out[k], tau);
  }
  return out;
}

}  // namespace mumimo
