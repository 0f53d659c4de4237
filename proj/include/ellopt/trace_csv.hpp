#pragma once

#include "ellopt/ellipsoid_solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ellopt {

/// Shortest decimal text that reads back to the same double; NaN becomes "".
std::string format_double(double v);

/// One row per record: k,feasible,cut_kind,f_estimate,logdet_H,c0,…,c{n−1}.
void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& trace);
void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<IterationRecord>& trace);

}  // namespace ellopt
