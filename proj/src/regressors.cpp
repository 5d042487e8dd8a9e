#include "riskgauge/regressors.hpp"

#include "riskgauge/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace riskgauge {

std::string model_name(const TrainerSpec& spec) {
    struct {
        std::string operator()(const LinearSpec&) const { return "linear"; }
        std::string operator()(const PolynomialSpec&) const { return "polynomial"; }
        std::string operator()(const KnnSpec&) const { return "knn"; }
        std::string operator()(const KernelRidgeSpec&) const { return "kernel_ridge"; }
    } visitor;
    return std::visit(visitor, spec);
}

void validate(const TrainerSpec& spec) {
    if (const auto* p = std::get_if<PolynomialSpec>(&spec); p && p->degree < 1)
        throw std::invalid_argument("polynomial degree must be >= 1");
    if (const auto* k = std::get_if<KnnSpec>(&spec); k && k->k < 1)
        throw std::invalid_argument("knn k must be >= 1");
    if (const auto* r = std::get_if<KernelRidgeSpec>(&spec)) {
        if (r->gamma && !(*r->gamma > 0.0 && std::isfinite(*r->gamma)))
            throw std::invalid_argument("kernel_ridge gamma must be > 0");
        if (!(r->lambda > 0.0 && std::isfinite(r->lambda)))
            throw std::invalid_argument("kernel_ridge lambda must be > 0");
    }
}

FittedModel::FittedModel(std::shared_ptr<const detail::Model> impl, std::size_t dim, bool rank_deficient,
                         std::optional<Vector> linear_coefficients)
    : impl_(std::move(impl)), dim_(dim), rank_deficient_(rank_deficient),
      coefficients_(std::move(linear_coefficients)) {}

double FittedModel::predict(std::span<const double> x) const {
    if (x.size() != dim_)
        throw std::invalid_argument("predict: expected " + std::to_string(dim_) + " features, got " +
                                    std::to_string(x.size()));
    return impl_->predict(x);
}

std::vector<double> FittedModel::predict(const Dataset& ds) const {
    std::vector<double> out(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) out[i] = predict(ds.row(i));
    return out;
}

namespace {

struct Standardizer {
    Vector mean;
    Vector scale;

    explicit Standardizer(const Matrix& x) {
        const auto n = static_cast<double>(x.rows());
        mean = x.colwise().mean().transpose();
        scale.resize(x.cols());
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            const double var = (x.col(c).array() - mean(c)).square().sum() / n;
            scale(c) = var > 0.0 ? std::sqrt(var) : 1.0;
        }
    }

    void apply(std::span<const double> x, double* out) const {
        for (std::size_t c = 0; c < x.size(); ++c) {
            const auto ci = static_cast<Eigen::Index>(c);
            out[c] = (x[c] - mean(ci)) / scale(ci);
        }
    }

    Matrix apply(const Matrix& x) const {
        Matrix z(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            apply({x.data() + r * x.cols(), static_cast<std::size_t>(x.cols())}, z.data() + r * z.cols());
        return z;
    }
};

struct LeastSquares {
    Vector beta;
    bool rank_deficient = false;
};

LeastSquares solve_least_squares(const Matrix& design, const Vector& y) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    LeastSquares out;
    out.beta = cod.solve(y);
    out.rank_deficient = cod.rank() < design.cols();
    return out;
}

// Linear: y = w.x + b on raw features.
class LinearModel final : public detail::Model {
public:
    explicit LinearModel(Vector coef) : coef_(std::move(coef)) {}

    double predict(std::span<const double> x) const override {
        const auto d = static_cast<Eigen::Index>(x.size());
        double acc = coef_(d);
        for (Eigen::Index c = 0; c < d; ++c) acc += coef_(c) * x[static_cast<std::size_t>(c)];
        return acc;
    }

private:
    Vector coef_;
};

FittedModel fit_linear(const Dataset& ds) {
    const auto n = ds.features().rows();
    const auto d = ds.features().cols();
    Matrix design(n, d + 1);
    design.leftCols(d) = ds.features();
    design.col(d).setOnes();
    auto ls = solve_least_squares(design, ds.labels());
    auto coef = ls.beta;
    return FittedModel(std::make_shared<LinearModel>(ls.beta), ds.dim(), ls.rank_deficient, std::move(coef));
}

// All exponent tuples with total degree <= degree, lexicographic.
std::vector<std::vector<int>> monomial_exponents(std::size_t dim, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> current(dim, 0);
    auto recurse = [&](auto& self, std::size_t var, int remaining) -> void {
        if (var == dim) {
            out.push_back(current);
            return;
        }
        for (int e = 0; e <= remaining; ++e) {
            current[var] = e;
            self(self, var + 1, remaining - e);
        }
        current[var] = 0;
    };
    recurse(recurse, 0, degree);
    return out;
}

class PolynomialModel final : public detail::Model {
public:
    PolynomialModel(Standardizer scaler, std::vector<std::vector<int>> exponents, Vector coef)
        : scaler_(std::move(scaler)), exponents_(std::move(exponents)), coef_(std::move(coef)) {}

    static void expand(const std::vector<std::vector<int>>& exponents, const double* z, std::size_t d,
                       double* out) {
        for (std::size_t t = 0; t < exponents.size(); ++t) {
            double m = 1.0;
            for (std::size_t c = 0; c < d; ++c)
                for (int e = 0; e < exponents[t][c]; ++e) m *= z[c];
            out[t] = m;
        }
    }

    double predict(std::span<const double> x) const override {
        std::vector<double> z(x.size());
        scaler_.apply(x, z.data());
        std::vector<double> phi(exponents_.size());
        expand(exponents_, z.data(), z.size(), phi.data());
        double acc = 0.0;
        for (std::size_t t = 0; t < phi.size(); ++t) acc += coef_(static_cast<Eigen::Index>(t)) * phi[t];
        return acc;
    }

private:
    Standardizer scaler_;
    std::vector<std::vector<int>> exponents_;
    Vector coef_;
};

FittedModel fit_polynomial(const PolynomialSpec& spec, const Dataset& ds) {
    Standardizer scaler(ds.features());
    const Matrix z = scaler.apply(ds.features());
    auto exponents = monomial_exponents(ds.dim(), spec.degree);
    Matrix design(z.rows(), static_cast<Eigen::Index>(exponents.size()));
    for (Eigen::Index r = 0; r < z.rows(); ++r)
        PolynomialModel::expand(exponents, z.data() + r * z.cols(), ds.dim(), design.data() + r * design.cols());
    auto ls = solve_least_squares(design, ds.labels());
    return FittedModel(std::make_shared<PolynomialModel>(std::move(scaler), std::move(exponents), ls.beta),
                       ds.dim(), ls.rank_deficient);
}

class KnnModel final : public detail::Model {
public:
    KnnModel(Standardizer scaler, Matrix points, Vector labels, std::size_t k)
        : scaler_(std::move(scaler)), points_(std::move(points)), labels_(std::move(labels)), k_(k) {}

    double predict(std::span<const double> x) const override {
        std::vector<double> z(x.size());
        scaler_.apply(x, z.data());
        const auto n = static_cast<std::size_t>(points_.rows());
        std::vector<std::pair<double, std::size_t>> dist(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            const double* p = points_.data() + i * z.size();
            for (std::size_t c = 0; c < z.size(); ++c) s += (p[c] - z[c]) * (p[c] - z[c]);
            dist[i] = {s, i};
        }
        // Ties on distance go to the lower row index.
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
        double acc = 0.0;
        for (std::size_t j = 0; j < k_; ++j) acc += labels_(static_cast<Eigen::Index>(dist[j].second));
        return acc / static_cast<double>(k_);
    }

private:
    Standardizer scaler_;
    Matrix points_;
    Vector labels_;
    std::size_t k_;
};

FittedModel fit_knn(const KnnSpec& spec, const Dataset& ds) {
    if (spec.k > ds.size())
        throw std::invalid_argument("knn: k=" + std::to_string(spec.k) + " exceeds training size " +
                                    std::to_string(ds.size()));
    Standardizer scaler(ds.features());
    Matrix z = scaler.apply(ds.features());
    return FittedModel(std::make_shared<KnnModel>(std::move(scaler), std::move(z), ds.labels(), spec.k),
                       ds.dim(), false);
}

class KernelRidgeModel final : public detail::Model {
public:
    KernelRidgeModel(Standardizer scaler, Matrix points, Vector dual, double offset, double gamma)
        : scaler_(std::move(scaler)), points_(std::move(points)), dual_(std::move(dual)), offset_(offset),
          gamma_(gamma) {}

    double predict(std::span<const double> x) const override {
        std::vector<double> z(x.size());
        scaler_.apply(x, z.data());
        double acc = offset_;
        for (Eigen::Index i = 0; i < points_.rows(); ++i) {
            double s = 0.0;
            const double* p = points_.data() + i * points_.cols();
            for (std::size_t c = 0; c < z.size(); ++c) s += (p[c] - z[c]) * (p[c] - z[c]);
            acc += dual_(i) * std::exp(-gamma_ * s);
        }
        return acc;
    }

private:
    Standardizer scaler_;
    Matrix points_;
    Vector dual_;
    double offset_;
    double gamma_;
};

FittedModel fit_kernel_ridge(const KernelRidgeSpec& spec, const Dataset& ds) {
    Standardizer scaler(ds.features());
    Matrix z = scaler.apply(ds.features());
    double gamma = 0.0;
    if (spec.gamma) {
        gamma = *spec.gamma;
    } else {
        const double var = (z.rowwise() - z.colwise().mean()).array().square().mean();
        gamma = 1.0 / (static_cast<double>(ds.dim()) * (var > 0.0 ? var : 1.0));
    }
    const auto n = z.rows();
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        gram(i, i) = 1.0 + spec.lambda;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double s = (z.row(i) - z.row(j)).squaredNorm();
            gram(i, j) = gram(j, i) = std::exp(-gamma * s);
        }
    }
    const double offset = ds.labels().mean();
    const Vector centered = ds.labels().array() - offset;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    bool fallback = llt.info() != Eigen::Success;
    Vector dual = fallback ? Vector(gram.ldlt().solve(centered)) : Vector(llt.solve(centered));
    return FittedModel(std::make_shared<KernelRidgeModel>(std::move(scaler), std::move(z), std::move(dual), offset,
                                                          gamma),
                       ds.dim(), fallback);
}

} // namespace

FittedModel fit(const TrainerSpec& spec, const Dataset& ds) {
    validate(spec);
    if (!ds.has_labels()) throw std::invalid_argument("fit: training data has no labels");
    struct {
        const Dataset& ds;
        FittedModel operator()(const LinearSpec&) const {
            if (ds.size() < ds.dim()) throw std::invalid_argument("linear: fewer rows than features");
            return fit_linear(ds);
        }
        FittedModel operator()(const PolynomialSpec& s) const { return fit_polynomial(s, ds); }
        FittedModel operator()(const KnnSpec& s) const { return fit_knn(s, ds); }
        FittedModel operator()(const KernelRidgeSpec& s) const { return fit_kernel_ridge(s, ds); }
    } visitor{ds};
    return std::visit(visitor, spec);
}

LooEnsemble fit_loo(const TrainerSpec& spec, const Dataset& ds, std::size_t threads) {
    if (ds.size() < 3) throw std::invalid_argument("fit_loo: need at least 3 rows");
    validate(spec);
    std::vector<std::optional<FittedModel>> slots(ds.size());
    parallel_for(ds.size(), threads, [&](std::size_t i) {
        std::vector<bool> excluded(ds.size(), false);
        excluded[i] = true;
        try {
            slots[i] = fit(spec, ds.without(excluded));
        } catch (const std::exception& e) {
            throw std::runtime_error("fit_loo: model " + std::to_string(i) + ": " + e.what());
        }
    });
    LooEnsemble out;
    out.models.reserve(ds.size());
    for (auto& s : slots) out.models.push_back(std::move(*s));
    return out;
}

FoldEnsemble fit_kfold(const TrainerSpec& spec, const Dataset& ds, FoldAssignment folds, std::size_t threads) {
    if (folds.fold.size() != ds.size()) throw std::invalid_argument("fit_kfold: fold assignment size mismatch");
    validate(spec);
    std::vector<std::optional<FittedModel>> slots(folds.k);
    parallel_for(folds.k, threads, [&](std::size_t f) {
        std::vector<bool> excluded(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) excluded[i] = folds.fold[i] == f;
        try {
            slots[f] = fit(spec, ds.without(excluded));
        } catch (const std::exception& e) {
            throw std::runtime_error("fit_kfold: fold " + std::to_string(f) + ": " + e.what());
        }
    });
    FoldEnsemble out;
    out.folds = std::move(folds);
    for (auto& s : slots) out.models.push_back(std::move(*s));
    return out;
}

FoldEnsemble fit_kfold(const TrainerSpec& spec, const Dataset& ds, std::size_t k, std::uint64_t seed,
                       std::size_t threads) {
    return fit_kfold(spec, ds, kfold_assign(ds.size(), k, seed), threads);
}

} // namespace riskgauge
