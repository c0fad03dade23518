// Shared test data: the replicated 2^3 factorial with two responses.
#pragma once

#include <string>

#include "rsopt/rsopt.hpp"

namespace rsopt::testing {

inline std::string data_path(const std::string& name) { return std::string(RSOPT_DATA_DIR) + "/" + name; }

inline TermSpec example_terms() { return TermSpec::linear_with_interactions(3); }

inline const ExperimentData& example_data() {
    static const ExperimentData data = ingest_csv_file(data_path("experiment.csv"));
    return data;
}

inline const FittedModel& example_model() {
    static const FittedModel model = fit_ols(example_data(), example_terms());
    return model;
}

inline Region unit_cube() { return Region::cube(3); }

}  // namespace rsopt::testing
