#include "fraclab/spacetime.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>

#include "fraclab/errors.hpp"

namespace fraclab {

namespace {
constexpr double kTwoPi = 2 * std::numbers::pi;
}

void TimeCircle::validate() const {
  if (!(period > 0.0) || !std::isfinite(period)) throw InputError("time circle: period must be positive");
  if (samples < 2 || (samples & (samples - 1)) != 0)
    throw InputError("time circle: sample count must be a power of two >= 2");
}

int TimeCircle::frequency(int j) const { return j <= samples / 2 ? j : j - samples; }

cplx TimeCircle::eta(int j, TimeSymbol symbol) const {
  if (symbol == TimeSymbol::Causal) {
    const double th = kTwoPi * j / samples;
    return cplx(1.0 - std::cos(th), std::sin(th)) / dt();
  }
  return cplx(0.0, kTwoPi * frequency(j) / period);
}

const Eigen::MatrixXcd& dft_matrix(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Eigen::MatrixXcd>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    slot = std::make_unique<Eigen::MatrixXcd>(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const long p = (static_cast<long>(i) * j) % n;
        const double th = -kTwoPi * static_cast<double>(p) / n;
        (*slot)(i, j) = cplx(std::cos(th), std::sin(th)) * scale;
      }
  }
  return *slot;
}

SpaceTimeField::SpaceTimeField(Eigen::MatrixXd values, TimeCircle circle)
    : values_(std::move(values)), circle_(circle) {
  circle_.validate();
  if (values_.cols() != circle_.samples) throw InputError("space-time field: column count must equal N_t");
  modes_ = values_.cast<cplx>() * dft_matrix(circle_.samples);
}

SpaceTimeField SpaceTimeField::broadcast(const Eigen::VectorXd& v, TimeCircle circle) {
  circle.validate();
  return SpaceTimeField(v.replicate(1, circle.samples), circle);
}

SpaceTimeField SpaceTimeField::from_modes(const Eigen::MatrixXcd& modes, TimeCircle circle) {
  circle.validate();
  if (modes.cols() != circle.samples) throw InputError("space-time field: column count must equal N_t");
  return SpaceTimeField((modes * dft_matrix(circle.samples).conjugate()).real(), circle);
}

SpaceTimeField SpaceTimeField::shifted(int k) const {
  const int n = samples();
  Eigen::MatrixXd out(values_.rows(), n);
  for (int i = 0; i < n; ++i) out.col(i) = values_.col(((i - k) % n + n) % n);
  return SpaceTimeField(std::move(out), circle_);
}

double SpaceTimeField::roundtrip_error() const {
  const Eigen::MatrixXcd back = modes_ * dft_matrix(samples()).conjugate();
  return (back.real() - values_).cwiseAbs().maxCoeff() + back.imag().cwiseAbs().maxCoeff();
}

double SpaceTimeField::conjugate_symmetry_defect() const {
  const int n = samples();
  double d = 0.0;
  for (int j = 0; j < n; ++j) d = std::max(d, (modes_.col(j) - modes_.col((n - j) % n).conjugate()).cwiseAbs().maxCoeff());
  return d;
}

ModalField ModalField::from_circle(const SpectralDecomposition& dec, const SpaceTimeField& u, TimeSymbol symbol) {
  if (u.nodes() != dec.size()) throw InputError("modal field: field does not match decomposition");
  ModalField f;
  f.kind_ = Kind::Circle;
  f.symbol_ = symbol;
  f.circle_ = u.circle();
  f.coef_ = dec.eigenvectors().transpose().cast<cplx>() * u.modes();
  f.eta_.resize(u.samples());
  for (int j = 0; j < u.samples(); ++j) f.eta_[j] = f.circle_.eta(j, symbol);
  return f;
}

ModalField ModalField::stationary(const SpectralDecomposition& dec, const Eigen::VectorXd& v) {
  ModalField f;
  f.kind_ = Kind::Exponential;
  f.coef_ = dec.coefficients(v).cast<cplx>();
  f.eta_ = Eigen::VectorXcd::Zero(1);
  return f;
}

ModalField ModalField::caloric(const SpectralDecomposition& dec, std::size_t y0, double t0) {
  if (y0 >= dec.size()) throw InputError("caloric translate: source outside grid");
  ModalField f;
  f.kind_ = Kind::Exponential;
  f.per_mode_ = true;
  f.t_ref_ = t0;
  f.coef_ = (dec.eigenvectors().row(static_cast<Eigen::Index>(y0)).transpose() / dec.cell_volume()).cast<cplx>();
  // Group values, so that w = lambda + eta vanishes exactly.
  f.eta_.resize(static_cast<Eigen::Index>(dec.size()));
  for (std::size_t k = 0; k < dec.size(); ++k)
    f.eta_[static_cast<Eigen::Index>(k)] = -dec.group_values()[static_cast<std::size_t>(dec.groups()[k])];
  return f;
}

cplx ModalField::w(const SpectralDecomposition& dec, std::size_t k, int j) const {
  const double lam = dec.group_values()[dec.groups()[k]];
  return lam + (per_mode_ ? eta_[static_cast<Eigen::Index>(k)] : eta_[j]);
}

ModalField ModalField::with_coefficients(Eigen::MatrixXcd coef) const {
  if (coef.rows() != coef_.rows() || coef.cols() != coef_.cols())
    throw InputError("modal field: coefficient shape changed");
  ModalField f = *this;
  f.coef_ = std::move(coef);
  return f;
}

ModalField ModalField::map(const SpectralDecomposition& dec, const std::function<cplx(cplx)>& m) const {
  if (modes() != dec.size()) throw InputError("modal field: decomposition mismatch");
  ModalField out = *this;
  const auto n = static_cast<Eigen::Index>(modes());
  const int J = columns();

  if (per_mode_) {
    for (Eigen::Index k = 0; k < n; ++k)
      if (coef_(k, 0) != 0.0) out.coef_(k, 0) = coef_(k, 0) * m(w(dec, static_cast<std::size_t>(k), 0));
    return out;
  }

  const std::size_t G = dec.group_values().size();
  std::vector<cplx> cache(G);
  std::vector<char> have(G);
  // Columns j and J - j carry conjugate rates on a circle; evaluate one, conjugate for the other.
  const bool paired = kind_ == Kind::Circle;
  const int last = paired ? J / 2 : J - 1;
  for (int j = 0; j <= last; ++j) {
    const int partner = paired ? (J - j) % J : j;
    std::fill(have.begin(), have.end(), 0);
    for (Eigen::Index k = 0; k < n; ++k) {
      const bool used = coef_(k, j) != 0.0 || coef_(k, partner) != 0.0;
      if (!used) continue;
      const int g = dec.groups()[static_cast<std::size_t>(k)];
      if (!have[g]) {
        cplx v = m(w(dec, static_cast<std::size_t>(k), j));
        if (paired && circle_.is_nyquist(j)) v = v.real();
        cache[g] = v;
        have[g] = 1;
      }
      out.coef_(k, j) = coef_(k, j) * cache[g];
      if (partner != j) out.coef_(k, partner) = coef_(k, partner) * std::conj(cache[g]);
    }
  }
  return out;
}

Eigen::MatrixXd ModalField::sample(const SpectralDecomposition& dec, std::span<const double> times) const {
  const auto T = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXcd tc(coef_.rows(), T);
  for (Eigen::Index i = 0; i < T; ++i) tc.col(i) = coefficients_at(times[static_cast<std::size_t>(i)]).cast<cplx>();
  return dec.eigenvectors() * tc.real();
}

Eigen::VectorXd ModalField::coefficients_at(double t) const {
  const int J = columns();
  if (kind_ == Kind::Circle) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(J));
    const double ph = (t - circle_.origin) / circle_.period;
    Eigen::VectorXcd b(J);
    for (int j = 0; j < J; ++j) {
      if (circle_.is_nyquist(j)) b[j] = std::cos(std::numbers::pi * J * ph) * scale;
      else b[j] = std::polar(scale, kTwoPi * circle_.frequency(j) * ph);
    }
    return (coef_ * b).real();
  }
  if (per_mode_) {
    Eigen::VectorXd out(coef_.rows());
    for (Eigen::Index k = 0; k < coef_.rows(); ++k) out[k] = (coef_(k, 0) * std::exp(eta_[k] * (t - t_ref_))).real();
    return out;
  }
  Eigen::VectorXcd b(J);
  for (int j = 0; j < J; ++j) b[j] = std::exp(eta_[j] * (t - t_ref_));
  return (coef_ * b).real();
}

SpaceTimeField ModalField::to_circle(const SpectralDecomposition& dec) const {
  if (kind_ != Kind::Circle) throw InputError("to_circle: field is not a circle field");
  const Eigen::MatrixXcd modes = dec.eigenvectors().cast<cplx>() * coef_;
  return SpaceTimeField::from_modes(modes, circle_);
}

SpaceTimeField evolutive_apply(const SpectralDecomposition& dec, double tau, const SpaceTimeField& u) {
  if (!(tau >= 0.0)) throw InputError("evolutive_apply: tau must be nonnegative");
  if (tau == 0.0) return u;
  auto f = ModalField::from_circle(dec, u, TimeSymbol::Spectral);
  return f.map(dec, [tau](cplx w) { return std::exp(-w * tau); }).to_circle(dec);
}

SpaceTimeField smooth_random_spacetime(const SpectralDecomposition& dec, TimeCircle circle, std::uint64_t seed,
                                       double tau) {
  circle.validate();
  if (!(tau >= 0.0)) throw InputError("random field: tau must be nonnegative");
  const int n = circle.samples;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dec.size()), n);
  for (Eigen::Index k = 0; k < c.rows(); ++k) {
    const double lk = dec.eigenvalues()[k];
    for (int j = 0; j < n / 2; ++j) {
      const double amp = std::exp(-tau * (lk + kTwoPi * j / circle.period));
      const double re = nd(rng), im = j == 0 ? 0.0 : nd(rng);
      c(k, j) = amp * cplx(re, im);
      if (j > 0) c(k, n - j) = std::conj(c(k, j));
    }
  }
  return SpaceTimeField::from_modes(dec.eigenvectors() * c, circle);
}

SpaceTimeField resample(const SpaceTimeField& u, int samples) {
  TimeCircle c = u.circle();
  c.samples = samples;
  c.validate();
  const int n = u.samples();
  const double scale = std::sqrt(static_cast<double>(samples) / n);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(u.modes().rows(), samples);
  auto slot = [samples](int f) { return f >= 0 ? f : f + samples; };
  for (int j = 0; j < n; ++j) {
    const int f = u.circle().frequency(j);
    if (std::abs(f) > samples / 2) continue;  // downsampling drops what the new circle cannot hold
    if (u.circle().is_nyquist(j) && samples > n) {
      m.col(slot(f)) += 0.5 * scale * u.modes().col(j);
      m.col(slot(-f)) += 0.5 * scale * u.modes().col(j);
    } else {
      m.col(slot(f)) += scale * u.modes().col(j);
    }
  }
  return SpaceTimeField::from_modes(m, c);
}

}  // namespace fraclab
