#pragma once

#include <string>

namespace cbf {

/// Outcome of one verified identity or inequality. `lhs`/`bound1`/`bound2`
/// carry the compared quantities (meaning depends on the check); a check that
/// does not apply in the current parameter regime reports skipped = true.
struct CheckReport {
    std::string tag;
    double lhs = 0.0;
    double bound1 = 0.0;
    double bound2 = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    bool skipped = false;
    std::string detail;

    std::string csv_row() const;
    static std::string csv_header();
};

}  // namespace cbf
