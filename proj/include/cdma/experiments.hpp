#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace cdma {

// Flat result rows keyed by a fixed column set; written as CSV or JSON lines.
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<nlohmann::json> rows;

    void write_csv(std::ostream& out) const;
    void write_jsonl(std::ostream& out) const;
};

// Estimate-vs-L study: fresh batches per (seed, Eb/N0, L) cell, ML and/or
// least-squares estimates recorded per user against the ground truth.
ResultTable run_convergence(const nlohmann::json& cfg);

// Streaming power tracking under a sinusoidal or stepwise trajectory, with a
// forgetting-factor covariance tracker and/or the windowed iterative tracker
// running on matched data.
ResultTable run_tracking(const nlohmann::json& cfg);

// Four-way BER comparison (perfect / subopt / iterative / no power control)
// over an Eb/N0 grid, all modes decoding identical received data.
ResultTable run_ber(const nlohmann::json& cfg);

}  // namespace cdma
