#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dcml/engine.hpp"

namespace dcml {

// Runs one command line (args exclude the program name). Returns the process
// exit status: 0 success, 1 usage, 2 data or validation, 3 numerical.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// `query N :: goal | ev1, ev2.` with N optional; evidence items are rv~=value.
struct QueryText {
  std::optional<std::size_t> samples;
  std::vector<Term> goal;
  std::vector<EvidenceItem> evidence;
};
QueryText parse_query_text(const std::string& text);

}  // namespace dcml
