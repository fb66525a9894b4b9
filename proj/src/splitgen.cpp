#include "sefkit/splitgen.hpp"

#include <algorithm>

#include "sefkit/error.hpp"
#include "sefkit/metrics.hpp"
#include "sefkit/rng.hpp"

namespace sefkit::splitgen {

Count median_lower_bound(const FrequencyTable& table, const BucketSpec& spec) {
    spec.validate();
    if (table.counts.empty()) {
        throw ValidationError("median_lower_bound needs a non-empty table");
    }
    std::vector<Count> bounds;
    bounds.reserve(table.counts.size());
    for (const auto& [fact, x] : table.counts) {
        (void)fact;
        bounds.push_back(spec.lower(metrics::assign_bucket(spec, x)));
    }
    // Lower median keeps the threshold an actual bucket lower bound.
    const std::size_t mid = (bounds.size() - 1) / 2;
    std::nth_element(bounds.begin(), bounds.begin() + static_cast<std::ptrdiff_t>(mid),
                     bounds.end());
    return bounds[mid];
}

std::vector<std::string> sample_split(const FrequencyTable& table, std::size_t size,
                                      Profile profile, Count threshold, std::uint64_t seed) {
    if (size == 0) {
        throw ValidationError("split size must be > 0");
    }
    std::vector<const std::string*> below;
    std::vector<const std::string*> at_or_above;
    for (const auto& [fact, x] : table.counts) {
        (x < threshold ? below : at_or_above).push_back(&fact);
    }

    const std::size_t major_quota = size * 8 / 10;  // floor(0.8 * size)
    const std::size_t minor_quota = size - major_quota;
    auto& major_pool = profile == Profile::low ? below : at_or_above;
    auto& minor_pool = profile == Profile::low ? at_or_above : below;

    const auto check = [&](const char* side, std::size_t want, std::size_t have) {
        if (want > have) {
            throw ValidationError(std::string("split quota infeasible: ") + side + " needs " +
                                  std::to_string(want) + " facts, table has " +
                                  std::to_string(have));
        }
    };
    check(profile == Profile::low ? "x < threshold" : "x >= threshold", major_quota,
          major_pool.size());
    check(profile == Profile::low ? "x >= threshold" : "x < threshold", minor_quota,
          minor_pool.size());

    Rng rng(seed);
    const auto draw = [&rng](std::vector<const std::string*>& pool, std::size_t k) {
        // Partial Fisher-Yates; pools are in sorted fact-id order (std::map
        // iteration), so the draw depends only on the seed.
        std::vector<std::string> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + rng.below(pool.size() - i);
            std::swap(pool[i], pool[j]);
            out.push_back(*pool[i]);
        }
        return out;
    };

    std::vector<std::string> ids = draw(major_pool, major_quota);
    std::vector<std::string> minor = draw(minor_pool, minor_quota);
    ids.insert(ids.end(), minor.begin(), minor.end());
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace sefkit::splitgen
