#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sefkit/core.hpp"

namespace sefkit::splitgen {

// Assigns every fact to its bucket and returns the median of the per-fact
// bucket lower bounds (the lower median on even counts). Serves as the
// default threshold between low- and high-frequency facts.
Count median_lower_bound(const FrequencyTable& table, const BucketSpec& spec);

enum class Profile { low, high };

// Frequency-biased subsample of the table's fact ids. The low profile draws
// floor(0.8 * size) ids uniformly without replacement from {x < threshold}
// and the remainder from {x >= threshold}; the high profile swaps the
// quotas. Deterministic per seed; throws ValidationError when either side
// cannot fill its quota, naming available vs requested.
std::vector<std::string> sample_split(const FrequencyTable& table, std::size_t size,
                                      Profile profile, Count threshold, std::uint64_t seed);

}  // namespace sefkit::splitgen
