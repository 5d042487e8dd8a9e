#include "riskgauge/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace riskgauge {

MetricsTriple regression_metrics(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) throw std::invalid_argument("regression_metrics: length mismatch");
    if (y.size() < 2) throw std::invalid_argument("regression_metrics: need at least two points");
    const auto n = static_cast<double>(y.size());

    double mean_y = 0.0;
    for (double v : y) mean_y += v;
    mean_y /= n;

    double ss_res = 0.0, abs_sum = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - yhat[i];
        ss_res += r * r;
        abs_sum += std::abs(r);
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    MetricsTriple m;
    m.rmse = std::sqrt(ss_res / n);
    m.mae = abs_sum / n;
    if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;
    return m;
}

} // namespace riskgauge
