#include "ered/gauss_hermite.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ered {

// Newton iteration on the orthonormal Hermite recurrence; asymptotic
// initial guesses for the largest roots, then steps inward.
std::pair<std::vector<double>, std::vector<double>> gauss_hermite_nodes(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite_nodes: n must be >= 1");
    std::vector<double> x(n), w(n);
    const int m = (n + 1) / 2;
    const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);

    double z = 0.0, z_prev1 = 0.0, z_prev2 = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(n, 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * z_prev1;
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * z_prev1;
        } else {
            z = 2.0 * z - z_prev2;
        }

        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        z_prev2 = z_prev1;
        z_prev1 = z;

        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if (n % 2 == 1) x[n / 2] = 0.0;
    return {x, w};
}

}  // namespace ered
