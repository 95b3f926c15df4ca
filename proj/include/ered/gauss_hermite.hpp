#pragma once

#include <utility>
#include <vector>

namespace ered {

// Nodes and weights for Gauss-Hermite quadrature with weight exp(-t^2):
//   integral exp(-t^2) f(t) dt  ~=  sum_i w_i f(t_i).
// For expectations under N(0,1) use E[f(z)] ~= pi^{-1/2} sum_i w_i f(sqrt(2) t_i).
std::pair<std::vector<double>, std::vector<double>> gauss_hermite_nodes(int n);

}  // namespace ered
