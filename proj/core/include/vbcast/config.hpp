#pragma once

namespace vbcast::config {

/// Tolerance below which an operator is accepted as Hermitian
/// (max absolute entry of X - X^dagger). Default 1e-10.
double hermitian_tol();
void set_hermitian_tol(double value);

/// Tolerance on the most negative eigenvalue when testing positive
/// semidefiniteness. Default 1e-9.
double psd_tol();
void set_psd_tol(double value);

/// Hard ceiling on the total Hilbert space dimension of any operator the
/// library will materialise. Default 4096. Raise at your own risk; memory
/// grows with the fourth power of the local dimension for tripartite data.
int max_dim();
void set_max_dim(int value);

}  // namespace vbcast::config
