#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "multirecv/mcmc.hpp"
#include "multirecv/ppc.hpp"
#include "multirecv/summary.hpp"

namespace multirecv {

// Shortest round-trip text for a double; "nan"/"inf" spelled out.
std::string format_number(double x);

nlohmann::json ppc_report_to_json(const PpcReport& report, bool include_samples);

// ppc_report.json plus t1.csv, t2.csv (raw receiver order with an observed
// rank column for the popularity-sorted view) and transitivity.csv.
void write_ppc_report(const PpcReport& report, const std::filesystem::path& dir, bool include_samples);

nlohmann::json summary_to_json(const PosteriorSummary& summary);

// summary.json and parameters.csv (one row per summarized quantity).
void write_summary(const PosteriorSummary& summary, const std::filesystem::path& dir);

// Acceptance rates, adapted step sizes and split R-hat of the global scalars.
nlohmann::json convergence_to_json(const PosteriorDraws& draws);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace multirecv
