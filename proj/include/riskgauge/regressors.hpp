#pragma once

#include "riskgauge/dataset.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace riskgauge {

struct LinearSpec {};
struct PolynomialSpec {
    int degree = 3;
};
struct KnnSpec {
    std::size_t k = 5;
};
/// RBF kernel ridge on standardized features. gamma unset means 1/(d * mean feature variance).
struct KernelRidgeSpec {
    std::optional<double> gamma;
    double lambda = 1.0;
};

using TrainerSpec = std::variant<LinearSpec, PolynomialSpec, KnnSpec, KernelRidgeSpec>;

/// Short stable name: "linear", "polynomial", "knn", "kernel_ridge".
std::string model_name(const TrainerSpec& spec);
void validate(const TrainerSpec& spec);

namespace detail {
struct Model {
    virtual ~Model() = default;
    virtual double predict(std::span<const double> x) const = 0;
};
} // namespace detail

/// Immutable trained regressor; cheap to copy and safe to share across threads.
class FittedModel {
public:
    FittedModel(std::shared_ptr<const detail::Model> impl, std::size_t dim, bool rank_deficient,
                std::optional<Vector> linear_coefficients = std::nullopt);

    double predict(std::span<const double> x) const;
    std::vector<double> predict(const Dataset& ds) const;

    std::size_t dim() const noexcept { return dim_; }
    /// True when the least-squares system was singular and a minimum-norm solution was used.
    bool rank_deficient() const noexcept { return rank_deficient_; }
    /// For linear models only: slopes followed by the intercept.
    const std::optional<Vector>& linear_coefficients() const noexcept { return coefficients_; }

private:
    std::shared_ptr<const detail::Model> impl_;
    std::size_t dim_;
    bool rank_deficient_;
    std::optional<Vector> coefficients_;
};

FittedModel fit(const TrainerSpec& spec, const Dataset& ds);

/// models[i] is trained on every row except i.
struct LooEnsemble {
    std::vector<FittedModel> models;

    std::size_t size() const noexcept { return models.size(); }
};

/// models[k] is trained on every row outside fold k.
struct FoldEnsemble {
    std::vector<FittedModel> models;
    FoldAssignment folds;

    const FittedModel& model_for_row(std::size_t i) const { return models[folds.fold.at(i)]; }
};

LooEnsemble fit_loo(const TrainerSpec& spec, const Dataset& ds, std::size_t threads = 1);
FoldEnsemble fit_kfold(const TrainerSpec& spec, const Dataset& ds, std::size_t k, std::uint64_t seed,
                       std::size_t threads = 1);
FoldEnsemble fit_kfold(const TrainerSpec& spec, const Dataset& ds, FoldAssignment folds,
                       std::size_t threads = 1);

} // namespace riskgauge
