#pragma once

// Self-check suites run by `charflow check`. Each returns a JSON report with
// a "pass" flag and one boolean per gate under "gates".

#include <string>
#include <vector>

#include <json.hpp>

#include "charflow/cli/config.hpp"

namespace charflow::cli {

struct SuiteOptions {
    std::vector<unsigned> mollifier_n{8, 32, 128};
    std::string g = "1 + x1^2";         ///< nonnegative source
    std::string u = "1 + x2^2";         ///< nonnegative boundary datum
    std::string g_signed = "x1 - 0.3";  ///< sign-changing source
    std::string u_signed = "x2";        ///< sign-changing boundary datum
    double lambda = 1.0;
};

/// invariance, mollifier, semigroup, bvp, green
const std::vector<std::string>& suite_names();

/// Runs one suite, or all of them for "all". Throws InvalidArgument for an
/// unknown name.
nlohmann::json run_suite(const std::string& name, const RunConfig& config, const SuiteOptions& options = {});

}  // namespace charflow::cli
