#include "rslab/bound_report.hpp"

#include <limits>
#include <ostream>
#include <stdexcept>

#include "rslab/csv.hpp"

namespace rslab {

BoundReport BoundReport::make(std::string name,
                              std::vector<double> claimed,
                              std::vector<double> measured,
                              double tolerance,
                              std::string note) {
    if (claimed.size() != measured.size())
        throw std::invalid_argument("BoundReport: claimed/measured size mismatch");
    if (claimed.empty())
        throw std::invalid_argument("BoundReport: empty series");
    BoundReport r;
    r.name = std::move(name);
    r.claimed = std::move(claimed);
    r.measured = std::move(measured);
    r.tolerance = tolerance;
    r.note = std::move(note);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.claimed.size(); ++i)
        m = std::min(m, r.claimed[i] - r.measured[i]);
    r.margin = m;
    r.pass = (m >= -tolerance);
    return r;
}

BoundReport BoundReport::skip(std::string name, std::string reason) {
    BoundReport r;
    r.name = std::move(name);
    r.margin = std::numeric_limits<double>::infinity();
    r.tolerance = 0.0;
    r.pass = true;
    r.skipped = true;
    r.note = std::move(reason);
    return r;
}

std::size_t BoundReport::argmin() const {
    std::size_t k = 0;
    for (std::size_t i = 1; i < claimed.size(); ++i)
        if (claimed[i] - measured[i] < claimed[k] - measured[k]) k = i;
    return k;
}

void write_reports_csv(std::ostream& os, const std::vector<BoundReport>& reports) {
    os << "name,margin,tolerance,pass,note\n";
    for (const auto& r : reports) {
        os << r.name << ',' << csv::num(r.margin) << ',' << csv::num(r.tolerance) << ','
           << (r.pass ? 1 : 0) << ',';
        csv::write_quoted(os, r.skipped ? ("skipped: " + r.note) : r.note);
        os << '\n';
    }
}

} // namespace rslab
