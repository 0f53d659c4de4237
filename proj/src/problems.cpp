#include "ellopt/problems.hpp"

#include "ellopt/random.hpp"
#include "ellopt/trace_csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ellopt {

namespace {

constexpr double kSyntheticWeightNorm = 2.0;
constexpr int kSyntheticAttempts = 16;

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(std::string_view(line).substr(
            start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) {
            return fields;
        }
        start = comma + 1;
    }
}

double parse_number(const std::string& field, std::size_t line) {
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    if (!field.empty() && *begin == '+') {
        ++begin;
    }
    const auto res = std::from_chars(begin, end, v);
    if (field.empty() || res.ec != std::errc() || res.ptr != end) {
        throw ParseError("not a number: '" + field + "'", line);
    }
    if (!std::isfinite(v)) {
        throw ParseError("non-finite value: '" + field + "'", line);
    }
    return v;
}

}  // namespace

void Dataset::validate() const {
    if (features.rows() == 0 || features.cols() == 0) {
        throw std::invalid_argument("Dataset: no rows or no columns");
    }
    if (labels.size() != features.rows()) {
        throw std::invalid_argument("Dataset: label count does not match row count");
    }
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0.0 && labels[i] != 1.0) {
            throw std::invalid_argument("Dataset: labels must be 0 or 1");
        }
    }
    if (!features.allFinite()) {
        throw std::invalid_argument("Dataset: non-finite feature value");
    }
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.has_intercept = has_intercept;
    out.feature_names = feature_names;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = static_cast<Eigen::Index>(rows[i]);
        out.features.row(static_cast<Eigen::Index>(i)) = features.row(src);
        out.labels[static_cast<Eigen::Index>(i)] = labels[src];
    }
    return out;
}

double softplus(double t) {
    if (t > 0.0) {
        return t + std::log1p(std::exp(-t));
    }
    return std::log1p(std::exp(t));
}

LossGrad logistic_value_grad(const Vector& w, const Vector& x, double y) {
    require_dimension(static_cast<std::size_t>(w.size()), x.size(), "logistic_value_grad");
    const double z = w.dot(x);
    return {softplus(-z) + (1.0 - y) * z, (sigmoid(z) - y) * x};
}

double mean_logistic_loss(const Dataset& data, const Vector& w) {
    require_dimension(data.dimension(), w.size(), "mean_logistic_loss");
    const Vector z = data.features * w;
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        total += softplus(-z[i]) + (1.0 - data.labels[i]) * z[i];
    }
    return total / static_cast<double>(z.size());
}

// ---------------------------------------------------------------------------

LogisticObjective::LogisticObjective(std::shared_ptr<const Dataset> data)
    : data_(std::move(data)) {
    if (!data_) {
        throw std::invalid_argument("LogisticObjective: null dataset");
    }
    data_->validate();
}

double LogisticObjective::value(const Vector& w) const { return mean_logistic_loss(*data_, w); }

Vector LogisticObjective::subgradient(const Vector& w) const {
    Vector grad;
    value_and_subgradient(w, grad);
    return grad;
}

double LogisticObjective::value_and_subgradient(const Vector& w, Vector& grad) const {
    require_dimension(data_->dimension(), w.size(), "LogisticObjective");
    const Vector z = data_->features * w;
    Vector residual(z.size());
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double y = data_->labels[i];
        // One exp per row: softplus(−z) and σ(z) both from e^{−|z|}.
        const double e = std::exp(-std::abs(z[i]));
        total += std::max(-z[i], 0.0) + std::log1p(e) + (1.0 - y) * z[i];
        residual[i] = (z[i] >= 0.0 ? 1.0 : e) / (1.0 + e) - y;
    }
    const double inv_m = 1.0 / static_cast<double>(z.size());
    grad = data_->features.transpose() * residual * inv_m;
    return total * inv_m;
}

LogisticSampleOracle::LogisticSampleOracle(std::shared_ptr<const Dataset> data, double sigma,
                                           SamplingMode mode)
    : data_(std::move(data)), sigma_(sigma), mode_(mode) {
    if (!data_ || data_->rows() == 0) {
        throw std::invalid_argument("LogisticSampleOracle: empty dataset");
    }
    if (!(sigma_ >= 0.0)) {
        throw std::invalid_argument("LogisticSampleOracle: sigma must be nonnegative");
    }
}

std::size_t LogisticSampleOracle::pick(RandomStream& stream) const {
    if (mode_ == SamplingMode::Enumerate) {
        return stream.key().index % data_->rows();
    }
    return stream.uniform_index(data_->rows());
}

double LogisticSampleOracle::sample(const Vector& w, RandomStream& stream, Vector& grad) const {
    const auto i = static_cast<Eigen::Index>(pick(stream));
    const auto row = data_->features.row(i);
    const double y = data_->labels[i];
    const double z = row.dot(w);
    const double e = std::exp(-std::abs(z));
    grad = ((z >= 0.0 ? 1.0 : e) / (1.0 + e) - y) * row.transpose();
    return std::max(-z, 0.0) + std::log1p(e) + (1.0 - y) * z;
}

void LogisticSampleOracle::prefetch(const StreamKey& key) const {
    RandomStream stream(key);
    const auto i = static_cast<Eigen::Index>(pick(stream));
    const char* row = reinterpret_cast<const char*>(data_->features.row(i).data());
    const std::size_t bytes = data_->dimension() * sizeof(double);
    for (std::size_t off = 0; off < bytes; off += 64) {
        __builtin_prefetch(row + off);
    }
}

double LogisticSampleOracle::sample_value(const Vector& w, RandomStream& stream) const {
    const auto i = static_cast<Eigen::Index>(pick(stream));
    const double z = data_->features.row(i).dot(w);
    return softplus(-z) + (1.0 - data_->labels[i]) * z;
}

// ---------------------------------------------------------------------------

Vector mean_gradient_at_zero(const Dataset& data) {
    const Vector coeff = (0.5 * Vector::Ones(data.labels.size()) - data.labels);
    return data.features.transpose() * coeff / static_cast<double>(data.rows());
}

namespace {

std::vector<double> deviations_at_zero(const Dataset& data, const Vector& center) {
    std::vector<double> d(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        const Vector g = (0.5 - data.labels[idx]) * data.features.row(idx).transpose();
        d[i] = (g - center).norm();
    }
    return d;
}

double moment(const std::vector<double>& d, double sigma) {
    double total = 0.0;
    for (const double v : d) {
        total += std::exp(v * v / (sigma * sigma));
    }
    return total / static_cast<double>(d.size());
}

}  // namespace

double subgaussian_moment(const Dataset& data, const Vector& center, double sigma) {
    return moment(deviations_at_zero(data, center), sigma);
}

double fit_sigma(const Dataset& data, double quantile, double safety) {
    data.validate();
    if (!(quantile > 0.0 && quantile <= 1.0) || !(safety >= 1.0)) {
        throw std::invalid_argument("fit_sigma: need quantile in (0, 1] and safety >= 1");
    }
    std::vector<double> d = deviations_at_zero(data, mean_gradient_at_zero(data));
    const double largest = *std::max_element(d.begin(), d.end());
    if (largest == 0.0) {
        return 0.0;
    }
    std::vector<double> sorted = d;
    const auto k = static_cast<std::size_t>(
        std::ceil(quantile * static_cast<double>(sorted.size()))) - 1;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
    const double q = sorted[k];

    // mean exp(d²/σ²) decreases in σ and is ≤ e at σ = max d.
    double lo = 0.0;
    double hi = largest;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (moment(d, mid) <= std::numbers::e) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return safety * std::max(q, hi);
}

LogisticProblem LogisticProblem::build(std::shared_ptr<const Dataset> data, double radius,
                                       std::uint64_t seed, std::optional<double> sigma_override) {
    if (!data) {
        throw std::invalid_argument("LogisticProblem: null dataset");
    }
    data->validate();
    LogisticProblem p;
    p.data = data;
    p.set = std::make_shared<Ball>(Vector::Zero(static_cast<Eigen::Index>(data->dimension())),
                                   radius);
    p.objective = std::make_shared<LogisticObjective>(data);
    p.sigma = sigma_override ? *sigma_override : fit_sigma(*data);
    p.oracle = std::make_shared<LogisticSampleOracle>(data, p.sigma);
    p.diameter = 2.0 * radius;
    const ExactOracle exact(p.objective);
    p.objective_range = estimate_objective_range(exact, *p.set, seed);
    return p;
}

// ---------------------------------------------------------------------------

Vector synthetic_true_weights(std::size_t n, std::uint64_t seed, std::uint64_t attempt) {
    RandomStream stream({seed, StreamPurpose::DataWeights, attempt, 0});
    Vector w(static_cast<Eigen::Index>(n));
    double norm = 0.0;
    do {
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            w[i] = stream.normal();
        }
        norm = w.norm();
    } while (norm == 0.0);
    return w * (kSyntheticWeightNorm / norm);
}

Dataset generate_synthetic(std::size_t m, std::size_t n, std::uint64_t seed) {
    if (m == 0 || n < 2) {
        throw std::invalid_argument("generate_synthetic: need m >= 1 and n >= 2");
    }
    const auto rows = static_cast<Eigen::Index>(m);
    const auto cols = static_cast<Eigen::Index>(n);
    for (int attempt = 0; attempt < kSyntheticAttempts; ++attempt) {
        const auto attempt_key = static_cast<std::uint64_t>(attempt);
        const Vector w_true = synthetic_true_weights(n, seed, attempt_key);
        Dataset data;
        data.has_intercept = true;
        data.features.resize(rows, cols);
        data.labels.resize(rows);
        for (std::size_t j = 1; j < n; ++j) {
            data.feature_names.push_back("x" + std::to_string(j));
        }
        for (Eigen::Index i = 0; i < rows; ++i) {
            RandomStream stream(
                {seed, StreamPurpose::Data, attempt_key, static_cast<std::uint32_t>(i)});
            for (Eigen::Index j = 0; j + 1 < cols; ++j) {
                data.features(i, j) = stream.normal();
            }
            data.features(i, cols - 1) = 1.0;
            const double p = sigmoid(data.features.row(i).dot(w_true));
            data.labels[i] = stream.uniform() < p ? 1.0 : 0.0;
        }
        const double positives = data.labels.sum();
        const bool constant = positives == 0.0 || positives == static_cast<double>(m);
        if (m < 100 || !constant) {
            return data;
        }
    }
    throw std::runtime_error("generate_synthetic: labels stayed constant after every attempt");
}

// ---------------------------------------------------------------------------

Dataset read_dataset_csv(std::istream& in, bool intercept) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_fields(line);
            break;
        }
    }
    if (header.empty()) {
        throw ParseError("missing header row", line_no == 0 ? 1 : line_no);
    }
    // Strip a UTF-8 byte-order mark from the first column name.
    if (header[0].rfind("\xEF\xBB\xBF", 0) == 0) {
        header[0] = header[0].substr(3);
    }
    std::ptrdiff_t label_col = -1;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == "y") {
            if (label_col >= 0) {
                throw ParseError("duplicate label column 'y'", line_no);
            }
            label_col = static_cast<std::ptrdiff_t>(j);
        } else {
            if (header[j].empty()) {
                throw ParseError("empty column name", line_no);
            }
            names.push_back(header[j]);
        }
    }
    if (label_col < 0) {
        throw ParseError("header has no label column 'y'", line_no);
    }
    if (names.empty() && !intercept) {
        throw ParseError("no feature columns", line_no);
    }

    std::vector<double> values;
    std::vector<double> labels;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const double v = parse_number(fields[j], line_no);
            if (static_cast<std::ptrdiff_t>(j) == label_col) {
                if (v != 0.0 && v != 1.0) {
                    throw ParseError("label must be 0 or 1, found '" + fields[j] + "'", line_no);
                }
                labels.push_back(v);
            } else {
                values.push_back(v);
            }
        }
    }
    if (labels.empty()) {
        throw ParseError("no data rows", line_no);
    }

    Dataset data;
    data.has_intercept = intercept;
    data.feature_names = names;
    const auto rows = static_cast<Eigen::Index>(labels.size());
    const auto raw = static_cast<Eigen::Index>(names.size());
    const Eigen::Index cols = raw + (intercept ? 1 : 0);
    data.features.resize(rows, cols);
    data.labels = Eigen::Map<const Vector>(labels.data(), rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < raw; ++j) {
            data.features(i, j) = values[static_cast<std::size_t>(i * raw + j)];
        }
        if (intercept) {
            data.features(i, cols - 1) = 1.0;
        }
    }
    return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path, bool intercept) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return read_dataset_csv(in, intercept);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    const Eigen::Index raw = data.features.cols() - (data.has_intercept ? 1 : 0);
    for (Eigen::Index j = 0; j < raw; ++j) {
        const auto idx = static_cast<std::size_t>(j);
        out << (idx < data.feature_names.size() ? data.feature_names[idx]
                                                : "x" + std::to_string(j + 1))
            << ',';
    }
    out << "y\n";
    for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
        for (Eigen::Index j = 0; j < raw; ++j) {
            out << format_double(data.features(i, j)) << ',';
        }
        out << (data.labels[i] != 0.0 ? 1 : 0) << '\n';
    }
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    write_dataset_csv(out, data);
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double test_fraction,
                                             std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("split_train_test: test fraction must lie in (0, 1)");
    }
    const std::size_t m = data.rows();
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) {
        order[i] = i;
    }
    RandomStream stream({seed, StreamPurpose::Shuffle, 0, 0});
    for (std::size_t i = m; i > 1; --i) {
        std::swap(order[i - 1], order[stream.uniform_index(i)]);
    }
    const auto test_rows =
        static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(m)));
    if (test_rows == 0 || test_rows >= m) {
        throw std::invalid_argument("split_train_test: split leaves an empty part");
    }
    std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_rows));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(test_rows), order.end());
    return {data.subset(train), data.subset(test)};
}

ErmResult erm_reference(std::shared_ptr<const DeterministicFunction> f, const FeasibleSet& set,
                        double tol, std::optional<double> objective_range, std::size_t workers) {
    if (!(tol > 0.0)) {
        throw std::invalid_argument("erm_reference: tol must be positive");
    }
    const ExactOracle oracle(f);
    SolverConfig config;
    config.eps = tol;
    config.beta = 0.5;
    config.sigma = 0.0;
    config.objective_range = objective_range;
    config.workers = workers;
    config.stop_gap = tol;
    const SolverReport report = solve(oracle, set, config);
    return {report.best_point, f->value(report.best_point), report.iterations};
}

}  // namespace ellopt
