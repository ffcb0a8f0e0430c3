#include "vbcast/config.hpp"

#include "vbcast/errors.hpp"

namespace vbcast::config {

namespace {
double g_hermitian_tol = 1e-10;
double g_psd_tol = 1e-9;
int g_max_dim = 4096;
}  // namespace

double hermitian_tol() { return g_hermitian_tol; }

void set_hermitian_tol(double value) {
  if (!(value > 0.0)) throw argument_error("hermitian_tol must be positive");
  g_hermitian_tol = value;
}

double psd_tol() { return g_psd_tol; }

void set_psd_tol(double value) {
  if (!(value > 0.0)) throw argument_error("psd_tol must be positive");
  g_psd_tol = value;
}

int max_dim() { return g_max_dim; }

void set_max_dim(int value) {
  if (value < 2) throw argument_error("max_dim must be at least 2");
  g_max_dim = value;
}

}  // namespace vbcast::config
