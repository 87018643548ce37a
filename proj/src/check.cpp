#include "cbf/check.hpp"

#include <cstdio>

namespace cbf {

std::string CheckReport::csv_header() {
    return "tag,lhs,bound1,bound2,tolerance,passed,skipped,detail";
}

std::string CheckReport::csv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%d,%d,%s", tag.c_str(), lhs,
                  bound1, bound2, tolerance, passed ? 1 : 0, skipped ? 1 : 0, detail.c_str());
    return buf;
}

}  // namespace cbf
