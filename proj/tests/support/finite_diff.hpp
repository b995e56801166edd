#pragma once

#include <cmath>
#include <functional>
#include <vector>

// Central finite-difference oracle for gradient checks.
namespace testsupport {

struct FdReport {
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double fd_at_worst = 0.0;
};

// f evaluates the scalar objective on a perturbed copy of the flat vector.
inline FdReport check_gradient(const std::function<double(const std::vector<double>&)>& f,
                               std::vector<double> x, const std::vector<double>& analytic,
                               double h = 1e-5, double denom_floor = 1e-6) {
    FdReport report;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double fp = f(x);
        x[i] = keep - h;
        const double fm = f(x);
        x[i] = keep;
        const double fd = (fp - fm) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(analytic[i]), denom_floor});
        const double rel = std::abs(fd - analytic[i]) / denom;
        if (rel > report.max_rel_err) {
            report.max_rel_err = rel;
            report.worst_index = i;
            report.analytic_at_worst = analytic[i];
            report.fd_at_worst = fd;
        }
    }
    return report;
}

}  // namespace testsupport
