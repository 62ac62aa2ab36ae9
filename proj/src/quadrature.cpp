#include "fraclab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>
#include <utility>
#include <vector>
#include <sstream>

#include "fraclab/errors.hpp"

namespace fraclab {

namespace {

GaussRule build_gauss(int n) {
  GaussRule g;
  g.x.resize(n);
  g.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    g.x[n - 1 - i] = x;
    g.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return g;
}

// sum_k (-1)^k (p)_k / (zeta X)^k, stopped at the smallest term; returns the last term size too.
cplx ibp_series(double p, cplx zetaX, double* smallest = nullptr) {
  cplx term = 1.0, sum = 1.0;
  double prev = 1.0;
  for (int k = 0; k < 60; ++k) {
    const cplx next = -term * (p + k) / zetaX;
    const double mag = std::abs(next);
    if (mag >= prev) break;
    term = next;
    sum += term;
    prev = mag;
    if (mag < 1e-18) break;
  }
  if (smallest) *smallest = prev;
  return sum;
}

// int_X^inf x^{-p} e^{-zeta x} dx for |zeta| X large.
cplx tail_integral(double p, cplx zeta, double X, double* smallest = nullptr) {
  return std::exp(-zeta * X) * std::pow(X, -p) / zeta * ibp_series(p, zeta * X, smallest);
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  if (order < 1 || order > 200) throw InputError("Gauss-Legendre order must lie in [1, 200]");
  std::lock_guard lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_gauss(order)).first;
  return it->second;
}

cplx expm1(cplx z) {
  const double x = z.real(), y = z.imag();
  const double sh = std::sin(0.5 * y);
  return {std::expm1(x) * std::cos(y) - 2.0 * sh * sh, std::exp(x) * std::sin(y)};
}

void QuadratureScheme::validate() const {
  if (!(x0 > 0.0 && x0 <= 0.5)) throw InputError("quadrature: x0 must lie in (0, 0.5]");
  if (panels < 1 || panels > 60) throw InputError("quadrature: panel count must lie in [1, 60]");
  if (order < 2 || order > 200) throw InputError("quadrature: order must lie in [2, 200]");
  if (series_order < 1 || series_order > 20) throw InputError("quadrature: series order must lie in [1, 20]");
  if (!(max_width > 0.0)) throw InputError("quadrature: panel width must be positive");
}

double QuadratureScheme::x_max() const { return std::ldexp(x0, panels); }

QuadratureScheme QuadratureScheme::refined() const {
  QuadratureScheme q = *this;
  q.x0 *= 0.5;
  q.panels += 2;
  q.order += 4;
  q.max_width *= 0.5;
  return q;
}

double QuadratureScheme::declared_error_bound(double s) const {
  const int K = series_order + 1;
  const double series = std::pow(x0, K - s) / (std::tgamma(K + 1.0) * (K - s));
  double smallest = 0.0;
  const double X = x_max();
  // Worst unit direction for the tail is purely imaginary.
  ibp_series(s + 1.0, cplx(0.0, X), &smallest);
  const double tail = std::pow(X, -s - 1.0) * smallest;
  return (series + tail) * s / std::tgamma(1.0 - s);
}

std::string QuadratureScheme::digest() const {
  std::ostringstream os;
  os.precision(17);
  os << "balakrishnan:x0=" << x0 << ";panels=" << panels << ";order=" << order
     << ";series=" << series_order << ";width=" << max_width;
  return os.str();
}

cplx balakrishnan_integral(double s, cplx w, const QuadratureScheme& q) {
  if (!(s > 0.0 && s < 1.0)) throw InputError("s must lie in (0, 1)");
  if (w.real() < 0.0) throw InputError("balakrishnan: Re w must be nonnegative");
  const double r = std::abs(w);
  if (r == 0.0) return 0.0;
  const cplx om = w / r;

  cplx acc = 0.0;
  cplx pw = 1.0;
  double fact = 1.0;
  for (int n = 1; n <= q.series_order; ++n) {
    pw *= -om;
    fact *= n;
    acc += pw / fact * std::pow(q.x0, n - s) / (n - s);
  }

  const GaussRule& g = gauss_legendre(q.order);
  double lo = q.x0;
  for (int k = 0; k < q.panels; ++k) {
    const double hi = 2.0 * lo;
    const int pieces = std::max(1, static_cast<int>(std::ceil((hi - lo) / q.max_width - 1e-12)));
    const double step = (hi - lo) / pieces;
    for (int m = 0; m < pieces; ++m) {
      const double a = lo + m * step, b = (m + 1 == pieces) ? hi : a + step;
      acc += integrate(g, a, b, [&](double x) { return std::pow(x, -s - 1.0) * expm1(-om * x); });
    }
    lo = hi;
  }

  const double X = q.x_max();
  acc += -std::pow(X, -s) / s;
  acc += tail_integral(s + 1.0, om, X);
  return acc * std::pow(r, s);
}

cplx balakrishnan_symbol(double s, cplx w, const QuadratureScheme& q) {
  return -s / std::tgamma(1.0 - s) * balakrishnan_integral(s, w, q);
}

cplx kernel_integral(double p, cplx zeta) {
  constexpr double x_lo = 1.0 / 192;
  constexpr double span = 48.0;
  constexpr double max_phase = 2.0;
  constexpr double decay_cut = 60.0;
  if (zeta.real() < 0.0) throw InputError("kernel_integral: Re zeta must be nonnegative");
  const double mag = std::abs(zeta);
  if (mag == 0.0 && !(p > 1.0)) throw InputError("kernel_integral: divergent at zeta = 0");

  // Upper end: far enough for the expansion (|zeta| X >= span) or for full decay.
  double X;
  bool drop_tail = false;
  if (mag == 0.0) {
    X = 64.0;
  } else {
    X = std::max(2.0, span / mag);
    if (zeta.real() > 0.0 && zeta.real() * X > decay_cut) {
      X = decay_cut / zeta.real();
      drop_tail = true;
    }
  }
  // Everything left is below e^{-60} of the zeta = 0 scale.
  if (X <= x_lo) return 0.0;

  const GaussRule& g = gauss_legendre(16);
  // Nodes and weights times x^{-p} e^{-1/(4x)} depend only on (p, panel, pieces); they are cached
  // per thread so each call pays for the complex exponentials alone.
  using Key = std::tuple<double, int, int>;
  thread_local std::map<Key, std::vector<std::pair<double, double>>> cache;
  auto panel_rule = [&](double lo, double hi, int pieces) {
    std::vector<std::pair<double, double>> rule;
    const double step = (hi - lo) / pieces;
    for (int m = 0; m < pieces; ++m) {
      const double a = lo + m * step, b = (m + 1 == pieces) ? hi : a + step;
      const double c = 0.5 * (a + b), h = 0.5 * (b - a);
      for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double x = c + h * g.x[i];
        rule.emplace_back(x, h * g.w[i] * std::pow(x, -p) * std::exp(-0.25 / x));
      }
    }
    return rule;
  };
  cplx acc = 0.0;
  double lo = x_lo;
  for (int k = 0; lo < X; ++k) {
    const double hi = std::min(2.0 * lo, X);
    const int pieces = std::max(1, static_cast<int>(std::ceil(mag * (hi - lo) / max_phase - 1e-12)));
    const bool full = hi == 2.0 * lo;
    std::vector<std::pair<double, double>> local;
    const std::vector<std::pair<double, double>>* rule = &local;
    if (full) {
      auto it = cache.find({p, k, pieces});
      if (it == cache.end()) it = cache.emplace(Key{p, k, pieces}, panel_rule(lo, hi, pieces)).first;
      rule = &it->second;
    } else {
      local = panel_rule(lo, hi, pieces);
    }
    for (const auto& [x, c] : *rule) acc += c * std::exp(-zeta * x);
    lo = hi;
  }

  if (drop_tail) return acc;
  // Tail: e^{-1/(4x)} = sum_m (-1/4)^m x^{-m} / m!, each term integrated in closed form.
  cplx coef = 1.0;
  for (int m = 0; m < 30; ++m) {
    if (m > 0) coef *= -0.25 / m;
    const double pm = p + m;
    cplx term;
    if (mag == 0.0) term = std::pow(X, 1.0 - pm) / (pm - 1.0);
    else term = tail_integral(pm, zeta, X);
    term *= coef;
    acc += term;
    if (std::abs(term) < 1e-18 * std::abs(acc)) break;
  }
  return acc;
}

}  // namespace fraclab
