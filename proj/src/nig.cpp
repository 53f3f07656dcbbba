#include "tnig/nig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "tnig/rng.hpp"

namespace tnig {

namespace {

bool finite(double v) { return std::isfinite(v); }

struct SampleMoments {
  double mean;
  double var;  // unbiased
};

SampleMoments moments(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() - 1);
  // Constant samples can leave a rounding-noise variance; flush it to an
  // exact zero so degenerate data is detected reliably.
  if (var <= 1e-15 * (1.0 + mean * mean)) var = 0.0;
  return {mean, var};
}

}  // namespace

NigParams::NigParams(double delta, double gamma, double alpha, double beta)
    : delta_(delta), gamma_(gamma), alpha_(alpha), beta_(beta) {
  if (!finite(delta) || !finite(gamma) || !finite(alpha) || !finite(beta))
    throw DomainError("NigParams: non-finite field");
  if (gamma <= 0.0) throw DomainError("NigParams: gamma must be > 0");
  if (alpha <= 1.0) throw DomainError("NigParams: alpha must be > 1");
  if (beta <= 0.0) throw DomainError("NigParams: beta must be > 0");
}

NigParams nig_new(double delta, double gamma, double alpha, double beta) {
  return NigParams(delta, gamma, alpha, beta);
}

double nig_pdf_paper(const NigParams& p, double mu, double sigma2) {
  if (sigma2 <= 0.0) throw DomainError("nig_pdf_paper: sigma2 must be > 0");
  double log_norm = 0.5 * std::log(p.gamma() / (2.0 * M_PI * sigma2)) +
                    p.alpha() * std::log(p.beta()) - std::lgamma(p.alpha()) -
                    (p.alpha() + 1.0) * std::log(sigma2);
  double log_exp = -p.gamma() * (mu - p.delta()) * (mu - p.delta()) / (2.0 * sigma2) -
                   p.beta() / p.alpha();
  return std::exp(log_norm + log_exp);
}

double nig_pdf_standard(const NigParams& p, double mu, double sigma2) {
  if (sigma2 <= 0.0) throw DomainError("nig_pdf_standard: sigma2 must be > 0");
  double log_norm = 0.5 * std::log(p.gamma() / (2.0 * M_PI * sigma2)) +
                    p.alpha() * std::log(p.beta()) - std::lgamma(p.alpha()) -
                    (p.alpha() + 1.0) * std::log(sigma2);
  double log_exp =
      -(2.0 * p.beta() + p.gamma() * (mu - p.delta()) * (mu - p.delta())) / (2.0 * sigma2);
  return std::exp(log_norm + log_exp);
}

std::vector<HierSample> nig_sample(const NigParams& p, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<HierSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sigma2 = rng.inv_gamma(p.alpha(), p.beta());
    double mu = rng.normal(p.delta(), std::sqrt(sigma2 / p.gamma()));
    double d = rng.normal(mu, std::sqrt(sigma2));
    out.push_back({mu, sigma2, d});
  }
  return out;
}

NigParams nig_mix(const NigParams& p1, const NigParams& p2, MixtureMode mode) {
  double gamma = p1.gamma() + p2.gamma();
  double delta = (p1.gamma() * p1.delta() + p2.gamma() * p2.delta()) / gamma;
  double alpha = p1.alpha() + p2.alpha() + 0.5;
  double c2 = mode == MixtureMode::verbatim ? p1.gamma() : p2.gamma();
  double beta = p1.beta() + p2.beta() +
                0.5 * p1.gamma() * (p1.delta() - delta) * (p1.delta() - delta) +
                0.5 * c2 * (p2.delta() - delta) * (p2.delta() - delta);
  return NigParams(delta, gamma, alpha, beta);
}

NigParams nig_fuse_local(const NigParams& p1, const NigParams& p2, const NigParams& p3,
                         MixtureMode mode) {
  return nig_mix(nig_mix(p1, p2, mode), p3, mode);
}

NigParams nig_fuse_global(const NigParams& local, const NigParams& global, MixtureMode mode) {
  return nig_mix(local, global, mode);
}

UncertaintyTriple uncertainty(const NigParams& p) {
  double al = p.beta() / (p.alpha() - 1.0);
  return {p.delta(), al, al / p.gamma()};
}

NigParams nig_fit(const std::vector<double>& samples) {
  if (samples.size() < 8) throw DataError("nig_fit: needs at least 8 samples");
  SampleMoments m = moments(samples);
  if (m.var <= 0.0) throw DegenerateData("nig_fit: zero sample variance");

  // Shape from the inverse-gamma relation alpha = 2 + m^2/Var(sigma2),
  // with squared residuals standing in for sigma2 draws.
  double mean_r = 0.0, var_r = 0.0;
  for (double x : samples) {
    double r = (x - m.mean) * (x - m.mean);
    mean_r += r;
  }
  mean_r /= static_cast<double>(samples.size());
  for (double x : samples) {
    double r = (x - m.mean) * (x - m.mean);
    var_r += (r - mean_r) * (r - mean_r);
  }
  var_r /= static_cast<double>(samples.size() - 1);

  double alpha = var_r > 0.0 ? 2.0 + mean_r * mean_r / var_r : 100.0;
  alpha = std::clamp(alpha, 1.0 + 1e-6, 100.0);
  double beta = (alpha - 1.0) * m.var;
  return NigParams(m.mean, 1.0, alpha, beta);
}

std::string fit_family_name(FitFamily f) {
  switch (f) {
    case FitFamily::tnig: return "tnig";
    case FitFamily::student_t: return "student_t";
    case FitFamily::laplace: return "laplace";
    case FitFamily::exponential: return "exponential";
  }
  return "?";
}

namespace {

FitReport fit_tnig(const std::vector<double>& xs) {
  NigParams p = nig_fit(xs);
  UncertaintyTriple u = uncertainty(p);
  SampleMoments m = moments(xs);
  // Scored through the predictive mean/variance (d, al).
  double ll = 0.0;
  for (double x : xs) {
    double r = x - u.d;
    ll += -0.5 * std::log(2.0 * M_PI * u.al) - r * r / (2.0 * u.al);
  }
  return {FitFamily::tnig,
          {p.delta(), p.gamma(), p.alpha(), p.beta()},
          ll,
          std::fabs(u.d - m.mean),
          std::fabs(u.al - m.var)};
}

FitReport fit_student_t(const std::vector<double>& xs) {
  SampleMoments m = moments(xs);
  double best_ll = -std::numeric_limits<double>::infinity();
  double best_loc = m.mean, best_s2 = m.var, best_nu = 3.0;
  for (int nu_i = 1; nu_i <= 30; ++nu_i) {
    double nu = static_cast<double>(nu_i);
    double loc = m.mean;
    double s2 = std::max(m.var, 1e-12);
    // EM for location/scale at fixed degrees of freedom.
    for (int it = 0; it < 60; ++it) {
      double sw = 0.0, swx = 0.0;
      for (double x : xs) {
        double r = x - loc;
        double w = (nu + 1.0) / (nu + r * r / s2);
        sw += w;
        swx += w * x;
      }
      double new_loc = swx / sw;
      double acc = 0.0;
      for (double x : xs) {
        double r = x - loc;
        double w = (nu + 1.0) / (nu + r * r / s2);
        double rn = x - new_loc;
        acc += w * rn * rn;
      }
      loc = new_loc;
      s2 = std::max(acc / static_cast<double>(xs.size()), 1e-15);
    }
    double ll = 0.0;
    double c = std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) -
               0.5 * std::log(nu * M_PI * s2);
    for (double x : xs) {
      double r = x - loc;
      ll += c - (nu + 1.0) / 2.0 * std::log1p(r * r / (nu * s2));
    }
    if (ll > best_ll) {
      best_ll = ll;
      best_loc = loc;
      best_s2 = s2;
      best_nu = nu;
    }
  }
  double fam_mean = best_nu > 1.0 ? best_loc : best_loc;  // location as central value
  double fam_var = best_nu > 2.0 ? best_s2 * best_nu / (best_nu - 2.0) : 1e300;
  return {FitFamily::student_t,
          {best_loc, std::sqrt(best_s2), best_nu},
          best_ll,
          std::fabs(fam_mean - m.mean),
          std::min(std::fabs(fam_var - m.var), 1e300)};
}

FitReport fit_laplace(const std::vector<double>& xs) {
  SampleMoments m = moments(xs);
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  std::size_t n = sorted.size();
  double loc = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double b = 0.0;
  for (double x : xs) b += std::fabs(x - loc);
  b = std::max(b / static_cast<double>(n), 1e-15);
  double ll = 0.0;
  for (double x : xs) ll += -std::log(2.0 * b) - std::fabs(x - loc) / b;
  return {FitFamily::laplace,
          {loc, b},
          ll,
          std::fabs(loc - m.mean),
          std::fabs(2.0 * b * b - m.var)};
}

FitReport fit_exponential(const std::vector<double>& xs) {
  SampleMoments m = moments(xs);
  double mn = *std::min_element(xs.begin(), xs.end());
  double shift = -mn;  // shifted data = x + shift >= 0
  double smean = m.mean + shift;
  if (smean <= 0.0) throw DegenerateData("fit_exponential: degenerate shifted mean");
  double rate = 1.0 / smean;
  double ll = 0.0;
  for (double x : xs) ll += std::log(rate) - rate * (x + shift);
  double fam_mean = 1.0 / rate - shift;
  double fam_var = 1.0 / (rate * rate);
  return {FitFamily::exponential,
          {rate, shift},
          ll,
          std::fabs(fam_mean - m.mean),
          std::fabs(fam_var - m.var)};
}

}  // namespace

std::vector<FitReport> fit_compare(const std::vector<double>& samples,
                                   const std::vector<FitFamily>& families) {
  if (samples.size() < 32) throw DataError("fit_compare: needs at least 32 samples");
  SampleMoments m = moments(samples);
  if (m.var <= 0.0) throw DegenerateData("fit_compare: zero sample variance");
  std::vector<FitReport> out;
  for (FitFamily f : families) {
    switch (f) {
      case FitFamily::tnig: out.push_back(fit_tnig(samples)); break;
      case FitFamily::student_t: out.push_back(fit_student_t(samples)); break;
      case FitFamily::laplace: out.push_back(fit_laplace(samples)); break;
      case FitFamily::exponential: out.push_back(fit_exponential(samples)); break;
    }
  }
  return out;
}

std::string fit_reports_to_json(const std::vector<FitReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const FitReport& r : reports) {
    arr.push_back({{"family", fit_family_name(r.family)},
                   {"params", r.params},
                   {"log_likelihood", r.log_likelihood},
                   {"mean_err", r.mean_err},
                   {"var_err", r.var_err}});
  }
  return arr.dump(2);
}

}  // namespace tnig
