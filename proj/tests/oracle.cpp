#include "oracle.hpp"

#include <cmath>
#include <cstddef>

namespace oracle {
namespace {

double safe_log(double p) { return p > 0.0 ? std::log(p) : -1e10; }

std::vector<double> normalized(std::vector<double> v) {
  double total = 0.0;
  for (double x : v) total += x;
  for (double& x : v) x /= total;
  return v;
}

}  // namespace

Table literal_listener(const Setup& s) {
  const std::size_t nu = s.theta.size();
  const std::size_t ns = s.state_prior.size();
  Table out(nu);
  for (std::size_t u = 0; u < nu; ++u) {
    std::vector<double> row(ns);
    for (std::size_t st = 0; st < ns; ++st) row[st] = s.theta[u][st] * s.state_prior[st];
    out[u] = normalized(std::move(row));
  }
  return out;
}

Table speaker1(const Setup& s, double phi, double alpha) {
  const Table l0 = literal_listener(s);
  const std::size_t nu = s.theta.size();
  const std::size_t ns = s.state_prior.size();
  Table out(ns);
  for (std::size_t st = 0; st < ns; ++st) {
    std::vector<double> row(nu);
    for (std::size_t u = 0; u < nu; ++u) {
      double soc = 0.0;
      for (std::size_t j = 0; j < ns; ++j) soc += l0[u][j] * s.values[j];
      const double util = phi * safe_log(l0[u][st]) + (1.0 - phi) * soc;
      row[u] = std::exp(alpha * util);
    }
    out[st] = normalized(std::move(row));
  }
  return out;
}

std::vector<Table> pragmatic_listener(const Setup& s, double alpha) {
  const std::size_t nu = s.theta.size();
  const std::size_t ns = s.state_prior.size();
  const std::size_t nk = s.phis.size();
  std::vector<Table> s1_by_phi(nk);
  for (std::size_t k = 0; k < nk; ++k) s1_by_phi[k] = speaker1(s, s.phis[k], alpha);
  std::vector<Table> joint(nu, Table(nk, std::vector<double>(ns, 0.0)));
  for (std::size_t u = 0; u < nu; ++u) {
    double total = 0.0;
    for (std::size_t k = 0; k < nk; ++k)
      for (std::size_t st = 0; st < ns; ++st) {
        const double w = s1_by_phi[k][st][u] * s.state_prior[st] * s.phi_prior[k];
        joint[u][k][st] = w;
        total += w;
      }
    for (std::size_t k = 0; k < nk; ++k)
      for (std::size_t st = 0; st < ns; ++st) joint[u][k][st] /= total;
  }
  return joint;
}

Utils utilities(const Setup& s, const std::vector<Table>& joint, std::size_t u, std::size_t st,
                double phi) {
  const std::size_t ns = s.state_prior.size();
  const std::size_t nk = s.phis.size();
  std::vector<double> marg_state(ns, 0.0);
  std::vector<double> marg_phi(nk, 0.0);
  for (std::size_t k = 0; k < nk; ++k)
    for (std::size_t j = 0; j < ns; ++j) {
      marg_state[j] += joint[u][k][j];
      marg_phi[k] += joint[u][k][j];
    }
  Utils out;
  out.inf = safe_log(marg_state[st]);
  for (std::size_t j = 0; j < ns; ++j) out.soc += marg_state[j] * s.values[j];
  if (nk == 1) {
    out.pre = safe_log(marg_phi[0]);
    return out;
  }
  std::vector<double> logm(nk);
  for (std::size_t k = 0; k < nk; ++k) logm[k] = safe_log(marg_phi[k]);
  if (phi <= s.phis.front()) {
    out.pre = logm.front();
  } else if (phi >= s.phis.back()) {
    out.pre = logm.back();
  } else {
    std::size_t i = 0;
    while (i + 2 < nk && s.phis[i + 1] < phi) ++i;
    const double t = (phi - s.phis[i]) / (s.phis[i + 1] - s.phis[i]);
    out.pre = logm[i] + t * (logm[i + 1] - logm[i]);
  }
  return out;
}

Table speaker2(const Setup& s, double phi, double alpha, const std::array<double, 3>& omega) {
  const std::vector<Table> joint = pragmatic_listener(s, alpha);
  const std::size_t nu = s.theta.size();
  const std::size_t ns = s.state_prior.size();
  Table out(ns);
  for (std::size_t st = 0; st < ns; ++st) {
    std::vector<double> row(nu);
    for (std::size_t u = 0; u < nu; ++u) {
      const Utils ut = utilities(s, joint, u, st, phi);
      double util = 0.0;
      if (omega[0] != 0.0) util += omega[0] * ut.inf;
      if (omega[1] != 0.0) util += omega[1] * ut.soc;
      if (omega[2] != 0.0) util += omega[2] * ut.pre;
      row[u] = std::exp(alpha * util);
    }
    out[st] = normalized(std::move(row));
  }
  return out;
}

}  // namespace oracle
