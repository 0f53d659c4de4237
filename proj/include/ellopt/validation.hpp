#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ellopt {

/// Outcome of one property suite: pass flag plus measured statistics in
/// report order.
struct SuiteResult {
    std::string suite;
    bool passed = false;
    std::string summary;
    std::vector<std::pair<std::string, std::string>> stats;
    double seconds = 0.0;
};

struct VolumeParams {
    std::size_t steps = 100000;
    std::size_t min_n = 2;
    std::size_t max_n = 20;
    double tolerance = 1e-9;
    std::uint64_t seed = 1;
};

struct ContainmentParams {
    std::size_t steps = 1000;
    std::size_t points = 1000;
    std::size_t max_n = 10;
    double tolerance = 1e-9;
    std::uint64_t seed = 2;
};

struct ConcentrationParams {
    std::vector<std::size_t> batch_sizes{10, 100};
    std::vector<double> betas{0.1, 0.01};
    std::size_t trials = 10000;
    std::size_t n = 5;
    double sigma = 1.0;
    std::uint64_t seed = 3;
};

struct DeltaParams {
    std::size_t trials = 1000;
    std::size_t points = 1000;
    std::uint64_t seed = 4;
};

struct Theorem1Params {
    std::size_t min_n = 2;
    std::size_t max_n = 5;
    std::size_t instances = 20;
    std::vector<std::size_t> iterations{10, 50, 200};
    double max_eta = 0.3;
    std::uint64_t seed = 5;
};

struct Theorem2Params {
    std::size_t n = 2;
    double eps = 0.05;
    double beta = 0.2;
    double sigma = 0.25;
    std::size_t runs = 100;
    std::size_t workers = 1;
    std::uint64_t seed = 6;
};

struct BudgetParams {
    std::vector<std::size_t> dims{5, 10, 25};
    double diameter = 2.0;
    double objective_range = 4.0;
    double inner_radius = 0.5;
    double eps = 0.01;
    double low = 3.9;
    double high = 4.1;
};

struct GradcheckParams {
    std::size_t points = 100;
    std::size_t n = 6;
    double step = 1e-6;
    double tolerance = 1e-5;
    std::uint64_t seed = 7;
};

SuiteResult validate_volume(const VolumeParams& p = {});
SuiteResult validate_containment(const ContainmentParams& p = {});
SuiteResult validate_concentration(const ConcentrationParams& p = {});
SuiteResult validate_delta(const DeltaParams& p = {});
SuiteResult validate_theorem1(const Theorem1Params& p = {});
SuiteResult validate_theorem2(const Theorem2Params& p = {});
SuiteResult validate_budget(const BudgetParams& p = {});
SuiteResult validate_gradcheck(const GradcheckParams& p = {});

/// Names accepted by run_validation.
const std::vector<std::string>& validation_suites();

/// Runs a suite with default parameters. Throws std::invalid_argument for an
/// unknown name.
SuiteResult run_validation(const std::string& suite, std::size_t workers = 1);

/// key=value report: suite, passed, summary, each statistic, seconds.
void write_validation_report(const std::filesystem::path& path, const SuiteResult& result);

}  // namespace ellopt
