#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace rslab {

// Result of checking a claimed inequality "measured <= claimed" along a series
// of sample points.  margin = min(claimed - measured); the check passes when
// the margin is no worse than -tolerance.
struct BoundReport {
    std::string name;
    std::vector<double> claimed;
    std::vector<double> measured;
    double margin = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    bool skipped = false;
    std::string note;

    static BoundReport make(std::string name,
                            std::vector<double> claimed,
                            std::vector<double> measured,
                            double tolerance,
                            std::string note = {});

    static BoundReport skip(std::string name, std::string reason);

    // Index of the worst (smallest) margin entry.
    std::size_t argmin() const;
};

// One summary row per report: name,margin,tolerance,pass,note.
void write_reports_csv(std::ostream& os, const std::vector<BoundReport>& reports);

} // namespace rslab
