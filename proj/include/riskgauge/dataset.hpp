#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace riskgauge {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Covariate matrix (one row per record) with optional labels.
/// Unlabeled datasets are used as alpha-holdout sets.
class Dataset {
public:
    Dataset(Matrix features, std::optional<Vector> labels = std::nullopt);

    std::size_t size() const noexcept { return static_cast<std::size_t>(features_.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(features_.cols()); }
    bool has_labels() const noexcept { return labels_.has_value(); }

    const Matrix& features() const noexcept { return features_; }
    const Vector& labels() const;

    std::span<const double> row(std::size_t i) const {
        return {features_.data() + i * dim(), dim()};
    }
    double label(std::size_t i) const { return labels()(static_cast<Eigen::Index>(i)); }

    /// Rows in the order given by `indices`.
    Dataset subset(std::span<const std::size_t> indices) const;
    /// All rows except those flagged in `excluded` (size() entries), original order kept.
    Dataset without(const std::vector<bool>& excluded) const;
    Dataset without_labels() const { return Dataset(features_); }

private:
    Matrix features_;
    std::optional<Vector> labels_;
};

struct SplitPlan {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
};

struct FoldAssignment {
    std::vector<std::size_t> fold;  // 0-based fold label per row
    std::size_t k = 0;

    std::vector<std::size_t> members(std::size_t f) const;
};

/// Test size is round-half-up(test_fraction * n); both sides must be nonempty.
SplitPlan make_split_plan(std::size_t n, double test_fraction, std::uint64_t seed);

struct TrainTest {
    Dataset train;
    Dataset test;
};
TrainTest train_test_split(const Dataset& ds, double test_fraction, std::uint64_t seed);

/// Random permutation dealt round-robin into K folds, so sizes differ by at most one.
FoldAssignment kfold_assign(std::size_t n, std::size_t k, std::uint64_t seed);

// CSV with header x1,...,xd[,y]. Non-finite values are rejected.
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const Dataset& ds);
void write_csv_file(const std::string& path, const Dataset& ds);

} // namespace riskgauge
