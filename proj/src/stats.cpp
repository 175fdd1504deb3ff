#include "qot/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace qot {

// Q(a, z) for a = dof/2, z = x/2, built from the half- or whole-integer base
// case with Q(a+1, z) = Q(a, z) + z^a e^-z / Gamma(a+1).
double chi2_sf(double x, unsigned dof) {
  if (dof == 0) throw std::invalid_argument("chi2_sf: dof must be positive");
  if (x <= 0.0) return 1.0;
  double z = x / 2.0;
  double a = (dof % 2 == 1) ? 0.5 : 1.0;
  double q = (dof % 2 == 1) ? std::erfc(std::sqrt(z)) : std::exp(-z);
  while (a + 0.5 < dof / 2.0 + 0.25) {
    q += std::exp(a * std::log(z) - z - std::lgamma(a + 1.0));
    a += 1.0;
  }
  if (q < 0.0) q = 0.0;
  if (q > 1.0) q = 1.0;
  return q;
}

double chi2_two_sample_p(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("chi2_two_sample_p: histograms must match");
  // Merge adjacent bins until each pooled expectation is at least 5.
  std::vector<double> ma, mb;
  double ca = 0.0, cb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ca += double(a[i]);
    cb += double(b[i]);
    if ((ca + cb) / 2.0 >= 5.0) {
      ma.push_back(ca);
      mb.push_back(cb);
      ca = cb = 0.0;
    }
  }
  if (ca + cb > 0.0) {
    if (ma.empty()) {
      ma.push_back(ca);
      mb.push_back(cb);
    } else {
      ma.back() += ca;
      mb.back() += cb;
    }
  }
  if (ma.size() < 2) return 1.0;
  double na = 0.0, nb = 0.0;
  for (size_t i = 0; i < ma.size(); ++i) {
    na += ma[i];
    nb += mb[i];
  }
  double stat = 0.0;
  for (size_t i = 0; i < ma.size(); ++i) {
    double pooled = (ma[i] + mb[i]) / (na + nb);
    double ea = na * pooled, eb = nb * pooled;
    stat += (ma[i] - ea) * (ma[i] - ea) / ea;
    stat += (mb[i] - eb) * (mb[i] - eb) / eb;
  }
  return chi2_sf(stat, unsigned(ma.size() - 1));
}

} // namespace qot
