#pragma once

#include <iosfwd>
#include <string>

#include "lgcpd/designs.hpp"
#include "lgcpd/domain.hpp"
#include "lgcpd/evaluation.hpp"

namespace lgcpd {

/// Mask file: header "N1 N2 Nt lo1 hi1 lo2 hi2 lo_t hi_t", then N1*N2*Nt
/// whitespace-separated 0/1 values, s1 fastest and t slowest.
Domain load_mask_file(const std::string& path);
void save_mask_file(const std::string& path, const Domain& domain);

/// Sidecar path holding a design's provenance.
std::string provenance_path(const std::string& design_csv);

/// CSV with header "s1,s2,t", one row per point in design order, plus a
/// flat JSON provenance sidecar.
void save_design(const std::string& path, const Design& design);
/// Reads the CSV and, when present, the provenance sidecar.
Design load_design(const std::string& path);

/// Columns: design_name, criterion, estimate, std_error, M, reduction_vs_base_pct.
void write_comparison_csv(std::ostream& os, const Comparison& comparison);

/// Round-trip formatting for doubles.
std::string format_double(double x);

}  // namespace lgcpd
