#include "ellopt/trace_csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace ellopt {

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

void write_trace_csv(std::ostream& out, const std::vector<IterationRecord>& trace) {
    const Eigen::Index n = trace.empty() ? 0 : trace.front().center.size();
    out << "k,feasible,cut_kind,f_estimate,logdet_H";
    for (Eigen::Index i = 0; i < n; ++i) {
        out << ",c" << i;
    }
    out << '\n';
    for (const auto& rec : trace) {
        out << rec.index << ',' << (rec.feasible ? 1 : 0) << ',' << to_string(rec.cut) << ','
            << format_double(rec.f_estimate) << ',' << format_double(rec.log_det);
        for (Eigen::Index i = 0; i < rec.center.size(); ++i) {
            out << ',' << format_double(rec.center[i]);
        }
        out << '\n';
    }
}

void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<IterationRecord>& trace) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    write_trace_csv(out, trace);
}

}  // namespace ellopt
