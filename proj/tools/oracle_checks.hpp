#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace selab::checks {

// One self-contained check of a derived value against its brute-force
// oracle. Returns an error description on failure, nothing on success.
struct OracleCheck {
  std::string name;
  std::function<std::optional<std::string>()> run;
};

std::vector<OracleCheck> all_checks();

// Runs everything, prints one PASS/FAIL line per check, returns the number
// of failures.
int run_all(std::ostream& out);

}  // namespace selab::checks
