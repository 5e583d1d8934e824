#pragma once

#include <string>
#include <vector>

#include "cyrisk/qubo.hpp"

namespace cyrisk {

struct RemoteSampleResult {
  std::vector<Assignment> samples;  // energy-validated, best first
  std::vector<double> energies;
  int discarded = 0;  // samples whose reported energy failed re-evaluation
};

// POST the fragment (QUBO text format) to an HTTP endpoint and parse a
// JSON response {"samples":[[bits...],...], "energies":[...]}. Every
// returned energy is re-evaluated locally; mismatching samples are
// discarded and counted. Throws RemoteError on network failures or a
// malformed response.
RemoteSampleResult remote_sample(const QuboModel& fragment,
                                 const std::string& endpoint,
                                 double timeout_s = 5.0);

}  // namespace cyrisk
