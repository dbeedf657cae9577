#pragma once

// CSV input and JSON / CSV output.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "skewpen/estimators.hpp"
#include "skewpen/montecarlo.hpp"
#include "skewpen/wbar.hpp"

namespace skewpen {

inline constexpr const char* kFitSchema = "skewpen.fit/1";
inline constexpr const char* kStudySchema = "skewpen.study/1";
inline constexpr const char* kCoeffsSchema = "skewpen.coeffs/1";

/// Numeric CSV, comma separated. A first line that does not parse as numbers
/// is taken as a header. Errors name the 1-based line number.
Dataset read_csv(std::istream& in, const std::string& source = "<input>");
Dataset read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const Dataset& data, const std::vector<std::string>& header = {});

nlohmann::json params_to_json(const DirectParams& p);
nlohmann::json fit_to_json(const FitResult& fit);
nlohmann::json wbar_diagnostics_to_json(const WbarDiagnostics& d);

void summary_to_csv(std::ostream& out, const StudySummary& s);
nlohmann::json study_to_json(const StudyResult& study);
nlohmann::json rate_curves_to_json(const RateCurves& rc);

}  // namespace skewpen
