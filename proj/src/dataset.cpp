#include "riskgauge/dataset.hpp"

#include "riskgauge/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace riskgauge {

Dataset::Dataset(Matrix features, std::optional<Vector> labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
    if (features_.rows() < 1 || features_.cols() < 1)
        throw std::invalid_argument("Dataset: need at least one row and one column");
    if (labels_ && labels_->size() != features_.rows())
        throw std::invalid_argument("Dataset: label count does not match row count");
    if (!features_.allFinite())
        throw std::invalid_argument("Dataset: non-finite feature value");
    if (labels_ && !labels_->allFinite())
        throw std::invalid_argument("Dataset: non-finite label value");
}

const Vector& Dataset::labels() const {
    if (!labels_) throw std::logic_error("Dataset: labels requested on an unlabeled dataset");
    return *labels_;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Matrix x(static_cast<Eigen::Index>(indices.size()), features_.cols());
    std::optional<Vector> y;
    if (labels_) y = Vector(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto src = static_cast<Eigen::Index>(indices[r]);
        if (indices[r] >= size()) throw std::out_of_range("Dataset::subset: index out of range");
        x.row(static_cast<Eigen::Index>(r)) = features_.row(src);
        if (y) (*y)(static_cast<Eigen::Index>(r)) = (*labels_)(src);
    }
    return Dataset(std::move(x), std::move(y));
}

Dataset Dataset::without(const std::vector<bool>& excluded) const {
    if (excluded.size() != size()) throw std::invalid_argument("Dataset::without: mask size mismatch");
    std::vector<std::size_t> keep;
    keep.reserve(size());
    for (std::size_t i = 0; i < size(); ++i)
        if (!excluded[i]) keep.push_back(i);
    return subset(keep);
}

std::vector<std::size_t> FoldAssignment::members(std::size_t f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold.size(); ++i)
        if (fold[i] == f) out.push_back(i);
    return out;
}

SplitPlan make_split_plan(std::size_t n, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("train_test_split: test_fraction must lie in (0,1)");
    const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n) + 0.5));
    if (n < 2 || n_test < 1 || n_test > n - 1)
        throw std::invalid_argument("train_test_split: split leaves an empty side");

    Rng rng(seed);
    auto perm = rng.permutation(n);
    SplitPlan plan;
    plan.seed = seed;
    plan.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    plan.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
    std::sort(plan.test.begin(), plan.test.end());
    std::sort(plan.train.begin(), plan.train.end());
    return plan;
}

TrainTest train_test_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    const auto plan = make_split_plan(ds.size(), test_fraction, seed);
    return {ds.subset(plan.train), ds.subset(plan.test)};
}

FoldAssignment kfold_assign(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2 || k > n) throw std::invalid_argument("kfold_assign: need 2 <= K <= n");
    Rng rng(seed);
    const auto perm = rng.permutation(n);
    FoldAssignment out;
    out.k = k;
    out.fold.resize(n);
    for (std::size_t pos = 0; pos < n; ++pos) out.fold[perm[pos]] = pos % k;
    return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        std::string f = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\r' || f.back() == '\t')) f.pop_back();
        std::size_t lead = 0;
        while (lead < f.size() && (f[lead] == ' ' || f[lead] == '\t')) ++lead;
        out.push_back(f.substr(lead));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_real(const std::string& field, std::size_t line_no) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || field.empty())
        throw std::runtime_error("CSV line " + std::to_string(line_no) + ": not a number: '" + field + "'");
    if (!std::isfinite(v))
        throw std::runtime_error("CSV line " + std::to_string(line_no) + ": non-finite value");
    return v;
}

} // namespace

Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("CSV: missing header");
    const auto header = split_fields(line);
    std::size_t d = 0;
    bool labeled = false;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "x" + std::to_string(c + 1) && !labeled) {
            ++d;
        } else if (header[c] == "y" && c + 1 == header.size() && d > 0) {
            labeled = true;
        } else {
            throw std::runtime_error("CSV: header must be x1,...,xd[,y]; got '" + header[c] + "'");
        }
    }
    if (d == 0) throw std::runtime_error("CSV: no feature columns");

    std::vector<double> xs;
    std::vector<double> ys;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw std::runtime_error("CSV line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " fields");
        for (std::size_t c = 0; c < d; ++c) xs.push_back(parse_real(fields[c], line_no));
        if (labeled) ys.push_back(parse_real(fields[d], line_no));
    }
    const auto n = xs.size() / d;
    if (n == 0) throw std::runtime_error("CSV: no data rows");
    Matrix x = Eigen::Map<Matrix>(xs.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::optional<Vector> y;
    if (labeled) y = Eigen::Map<Vector>(ys.data(), static_cast<Eigen::Index>(n));
    return Dataset(std::move(x), std::move(y));
}

Dataset read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return read_csv(in);
}

void write_csv(std::ostream& out, const Dataset& ds) {
    for (std::size_t c = 0; c < ds.dim(); ++c) out << (c ? "," : "") << 'x' << c + 1;
    if (ds.has_labels()) out << ",y";
    out << '\n';
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto r = ds.row(i);
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c) out << ',';
            put(r[c]);
        }
        if (ds.has_labels()) {
            out << ',';
            put(ds.label(i));
        }
        out << '\n';
    }
}

void write_csv_file(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_csv(out, ds);
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

} // namespace riskgauge
