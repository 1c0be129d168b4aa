#include "mrccc/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <utility>
#include <vector>

#include "mrccc/errors.hpp"
#include "mrccc/linalg.hpp"

namespace mrccc {
namespace {

MatrixXd with_intercept(std::initializer_list<const MatrixXd*> blocks,
                        Eigen::Index n) {
  Eigen::Index cols = 1;
  for (const MatrixXd* b : blocks) cols += b->cols();
  MatrixXd X(n, cols);
  X.col(0).setOnes();
  Eigen::Index at = 1;
  for (const MatrixXd* b : blocks) {
    X.middleCols(at, b->cols()) = *b;
    at += b->cols();
  }
  return X;
}

double log_g_prior_bf(double r2, double g, double n_obs, double k) {
  // No-intercept Zellner g-prior with residual variance integrated out.
  return 0.5 * (n_obs - k) * std::log1p(g) -
         0.5 * n_obs * std::log1p(g * (1.0 - r2));
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::OLS: return "OLS";
    case Method::MVMR: return "MVMR";
    case Method::MRBMA: return "MRBMA";
    case Method::MRCCC: return "MRCCC";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  std::string u;
  for (char c : s) {
    if (c != '-' && c != '_') u += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  if (u == "OLS") return Method::OLS;
  if (u == "MVMR") return Method::MVMR;
  if (u == "MRBMA") return Method::MRBMA;
  if (u == "MRCCC") return Method::MRCCC;
  throw ValidationError("unknown method '" + s + "'");
}

bool frequentist_decision(double p_value) { return p_value <= kFrequentistAlpha; }
bool bayesian_decision(double score) { return score > kBayesianThreshold; }

bool decision_consistent(const MethodResult& r) {
  if (!(r.score >= 0.0 && r.score <= 1.0)) return false;
  switch (r.method) {
    case Method::OLS:
      return r.decision == frequentist_decision(r.extras.at("p_F"));
    case Method::MVMR:
      return r.decision == frequentist_decision(r.extras.at("p_t"));
    case Method::MRBMA:
    case Method::MRCCC:
      return r.decision == bayesian_decision(r.score);
  }
  return false;
}

MethodResult fit_ols(const Dataset& d) {
  d.validate();
  const Eigen::Index n = d.n();
  const MatrixXd main = (MatrixXd(n, 3) << d.x, d.z, d.x.cwiseProduct(d.z)).finished();
  const MatrixXd X = with_intercept({&main, &d.V}, n);
  const OlsFit fit = ols(X, d.y);

  // Contrast selects (beta_X, beta_XZ) at columns 1 and 3.
  Eigen::Vector2d cb(fit.coef(1), fit.coef(3));
  Eigen::Matrix2d cvc;
  cvc << fit.cov(1, 1), fit.cov(1, 3), fit.cov(3, 1), fit.cov(3, 3);
  const double f = 0.5 * cb.dot(cvc.ldlt().solve(cb));
  const double p_f = f_test_pvalue(f, 2.0, static_cast<double>(fit.df));

  MethodResult r;
  r.method = Method::OLS;
  r.score = 1.0 - p_f;
  r.decision = frequentist_decision(p_f);
  r.beta_X_hat = fit.coef(1);
  r.beta_XZ_hat = fit.coef(3);
  r.extras = {{"F", f}, {"p_F", p_f}, {"beta_Z", fit.coef(2)}};
  return r;
}

MethodResult fit_mvmr(const Dataset& d) {
  d.validate();
  const Eigen::Index n = d.n();
  const MatrixXd first = with_intercept({&d.G, &d.H, &d.V}, n);
  const OlsFit fx = ols(first, d.x);
  const OlsFit fz = ols(first, d.z);
  const MatrixXd fitted =
      (MatrixXd(n, 2) << first * fx.coef, first * fz.coef).finished();
  const MatrixXd second = with_intercept({&fitted, &d.V}, n);
  const OlsFit fy = ols(second, d.y);

  const double se = std::sqrt(fy.cov(1, 1));
  const double t = fy.coef(1) / se;
  const double p_t = t_test_pvalue(t, static_cast<double>(fy.df));

  MethodResult r;
  r.method = Method::MVMR;
  r.score = 1.0 - p_t;
  r.decision = frequentist_decision(p_t);
  r.beta_X_hat = fy.coef(1);
  r.extras = {{"t", t}, {"p_t", p_t}, {"se_beta_X", se}, {"beta_Z", fy.coef(2)}};
  return r;
}

SummaryStatistics instrument_summaries(const Dataset& d,
                                       bool include_covariates) {
  d.validate();
  const Eigen::Index n = d.n();
  const Eigen::Index J = d.p_G() + d.p_H();
  SummaryStatistics s;
  s.beta_x.resize(J);
  s.beta_z.resize(J);
  s.beta_y.resize(J);
  s.se_y.resize(J);
  const MatrixXd empty(n, 0);
  for (Eigen::Index j = 0; j < J; ++j) {
    const MatrixXd gj = j < d.p_G() ? MatrixXd(d.G.col(j))
                                    : MatrixXd(d.H.col(j - d.p_G()));
    const MatrixXd X =
        with_intercept({&gj, include_covariates ? &d.V : &empty}, n);
    s.beta_x(j) = ols(X, d.x).coef(1);
    s.beta_z(j) = ols(X, d.z).coef(1);
    const OlsFit fy = ols(X, d.y);
    s.beta_y(j) = fy.coef(1);
    s.se_y(j) = std::sqrt(fy.cov(1, 1));
  }
  return s;
}

MrBmaFit mrbma_from_summaries(const SummaryStatistics& s, double g,
                              bool profile_variance) {
  const Eigen::Index J = s.beta_y.size();
  if (J < 2) throw ValidationError("MR-BMA needs at least 2 instruments");
  if (s.beta_x.size() != J || s.beta_z.size() != J || s.se_y.size() != J) {
    throw ValidationError("MR-BMA summary vectors differ in length");
  }
  if ((s.se_y.array() <= 0.0).any()) {
    throw ValidationError("MR-BMA needs positive outcome standard errors");
  }
  MrBmaFit out;
  out.g = g > 0.0 ? g : std::min(static_cast<double>(J * J), 100.0);

  // Inverse-variance weighting: divide every association by se(beta_Y).
  const VectorXd w = s.se_y.cwiseInverse();
  const VectorXd by = s.beta_y.cwiseProduct(w);
  MatrixXd B(J, 2);
  B.col(0) = s.beta_x.cwiseProduct(w);
  B.col(1) = s.beta_z.cwiseProduct(w);
  for (int c = 0; c < 2; ++c) {
    if (B.col(c).squaredNorm() == 0.0) {
      throw ValidationError(std::string("MR-BMA summary column for ") +
                            (c == 0 ? "X" : "Z") + " has zero variance");
    }
  }

  const double tss = by.squaredNorm();
  const double shrink = out.g / (1.0 + out.g);
  double log_bf[4] = {0.0, 0.0, 0.0, 0.0};
  Eigen::Vector2d coef[4] = {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(),
                             Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  for (int m = 1; m < 4; ++m) {
    std::vector<int> cols;
    if (m & 1) cols.push_back(0);
    if (m & 2) cols.push_back(1);
    MatrixXd Bm(J, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) Bm.col(static_cast<Eigen::Index>(k)) = B.col(cols[k]);
    const VectorXd b = Bm.colPivHouseholderQr().solve(by);
    for (std::size_t k = 0; k < cols.size(); ++k) coef[m](cols[k]) = shrink * b(static_cast<Eigen::Index>(k));
    if (tss > 0.0) {
      const double explained = (Bm * b).squaredNorm();
      const double k = static_cast<double>(cols.size());
      if (profile_variance) {
        const double r2 = std::clamp(explained / tss, 0.0, 1.0);
        log_bf[m] = log_g_prior_bf(r2, out.g, static_cast<double>(J), k);
      } else {
        log_bf[m] = -0.5 * k * std::log1p(out.g) + 0.5 * shrink * explained;
      }
    }
    // tss == 0: the outcome carries no information and every model ties.
  }
  const double mx = *std::max_element(log_bf, log_bf + 4);
  double total = 0.0;
  for (int m = 0; m < 4; ++m) total += std::exp(log_bf[m] - mx);
  for (int m = 0; m < 4; ++m) {
    out.model_prob[m] = std::exp(log_bf[m] - mx) / total;
  }
  out.mip_x = out.model_prob[1] + out.model_prob[3];
  out.mip_z = out.model_prob[2] + out.model_prob[3];
  for (int m = 0; m < 4; ++m) {
    out.mace_x += out.model_prob[m] * coef[m](0);
    out.mace_z += out.model_prob[m] * coef[m](1);
  }
  return out;
}

MethodResult fit_mrbma(const Dataset& d, const MrBmaOptions& opt) {
  const MrBmaFit fit =
      mrbma_from_summaries(instrument_summaries(d, opt.summary_covariates), opt.g,
                           opt.profile_variance);
  MethodResult r;
  r.method = Method::MRBMA;
  r.score = fit.mip_x;
  r.decision = bayesian_decision(fit.mip_x);
  r.beta_X_hat = fit.mace_x;
  r.extras = {{"MIP_X", fit.mip_x},      {"MIP_Z", fit.mip_z},
              {"MACE_X", fit.mace_x},    {"MACE_Z", fit.mace_z},
              {"prob_null", fit.model_prob[0]}, {"prob_X", fit.model_prob[1]},
              {"prob_Z", fit.model_prob[2]},    {"prob_XZ", fit.model_prob[3]},
              {"g", fit.g}};
  return r;
}

MethodResult fit_mrccc(const Dataset& d, const Hyperparams& h,
                       const McmcSettings& mcmc, PosteriorSummary* posterior) {
  const CenteredDataset c = center_dataset(d);
  PosteriorSummary post = run_chain(c.data, h, mcmc);
  MethodResult r;
  r.method = Method::MRCCC;
  r.score = post.pip;
  r.decision = bayesian_decision(post.pip);
  r.beta_X_hat = post.mean_beta_X;
  r.beta_XZ_hat = post.mean_beta_XZ;
  r.extras = {{"PIP", post.pip},
              {"beta_Z", post.mean_beta_Z},
              {"n_kept", static_cast<double>(post.n_kept)}};
  if (posterior) *posterior = std::move(post);
  return r;
}

}  // namespace mrccc
