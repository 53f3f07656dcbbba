#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tnig/errors.hpp"

namespace tnig {

// Which beta update the mixture operator uses for its second quadratic
// term. `verbatim` keeps gamma_1 in both terms; `symmetric` (default)
// uses gamma_2 in the second term, which makes the operator commutative.
enum class MixtureMode { verbatim, symmetric };

// Normal-Inverse-Gamma parameter 4-tuple. Construction validates
// gamma > 0, alpha > 1, beta > 0 and finiteness of every field.
class NigParams {
 public:
  NigParams(double delta, double gamma, double alpha, double beta);

  double delta() const { return delta_; }
  double gamma() const { return gamma_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  bool operator==(const NigParams& other) const = default;

 private:
  double delta_;
  double gamma_;
  double alpha_;
  double beta_;
};

struct UncertaintyTriple {
  double d;   // expected feature change
  double al;  // aleatoric uncertainty, beta/(alpha-1)
  double ep;  // epistemic uncertainty, beta/(gamma*(alpha-1))
};

struct HierSample {
  double mu;
  double sigma2;
  double d;
};

enum class FitFamily { tnig, student_t, laplace, exponential };

std::string fit_family_name(FitFamily f);

struct FitReport {
  FitFamily family;
  std::vector<double> params;
  double log_likelihood;
  double mean_err;
  double var_err;
};

NigParams nig_new(double delta, double gamma, double alpha, double beta);

// Density exactly as the printed form, exponent term -beta/alpha included.
// Does not normalize; see nig_pdf_standard for the proper joint density.
double nig_pdf_paper(const NigParams& p, double mu, double sigma2);

// Textbook NIG joint density over (mu, sigma2); integrates to 1.
double nig_pdf_standard(const NigParams& p, double mu, double sigma2);

// Hierarchical draws: sigma2 ~ InvGamma(alpha, beta), mu ~ N(delta,
// sigma2/gamma), d ~ N(mu, sigma2). Deterministic for a fixed seed.
std::vector<HierSample> nig_sample(const NigParams& p, std::size_t n, std::uint64_t seed);

NigParams nig_mix(const NigParams& p1, const NigParams& p2,
                  MixtureMode mode = MixtureMode::symmetric);

// Left-associative fold of nig_mix over three distributions.
NigParams nig_fuse_local(const NigParams& p1, const NigParams& p2, const NigParams& p3,
                         MixtureMode mode = MixtureMode::symmetric);

NigParams nig_fuse_global(const NigParams& local, const NigParams& global,
                          MixtureMode mode = MixtureMode::symmetric);

UncertaintyTriple uncertainty(const NigParams& p);

// Moment-matched fit: delta = sample mean, gamma = 1, alpha from the
// inverse-gamma variance heuristic clipped to (1+eps, 100], beta chosen
// so that beta/(alpha-1) reproduces the sample variance exactly.
NigParams nig_fit(const std::vector<double>& samples);

std::vector<FitReport> fit_compare(const std::vector<double>& samples,
                                   const std::vector<FitFamily>& families);

std::string fit_reports_to_json(const std::vector<FitReport>& reports);

}  // namespace tnig
