#pragma once

// Thin wrappers over the special functions used across modules.

namespace microclust {

double normal_cdf(double x);
// 1 - Φ(x) without cancellation for large x.
double normal_sf(double x);
// P(χ²_dof < x).
double chisq_cdf(double x, double dof);
double trigamma(double x);
double log_factorial(double n);

}  // namespace microclust
