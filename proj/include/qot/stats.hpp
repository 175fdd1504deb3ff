#pragma once

#include <cstdint>
#include <vector>

namespace qot {

/// Upper tail of the chi-square distribution with dof degrees of freedom.
double chi2_sf(double x, unsigned dof);

/// Two-sample homogeneity test over matching histograms.  Adjacent bins are
/// merged until every pooled expected count reaches 5, then the statistic is
/// referred to chi-square with (bins - 1) degrees of freedom.  Returns the
/// p-value; 1.0 when everything collapses into a single bin.
double chi2_two_sample_p(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b);

} // namespace qot
