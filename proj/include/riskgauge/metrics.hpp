#pragma once

#include <optional>
#include <span>

namespace riskgauge {

struct MetricsTriple {
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> r2;  // empty when y is constant
};

MetricsTriple regression_metrics(std::span<const double> y, std::span<const double> yhat);

} // namespace riskgauge
