#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deltaclass/classify.hpp"

namespace deltaclass::testing {

// Five kinds of change whose metric vectors point in distinct directions.
inline const std::vector<std::string> kSyntheticClasses = {"add", "delete", "format", "refactor", "fix"};

struct SyntheticChange {
  std::string change_id;
  std::string truth;  // one of kSyntheticClasses
};

struct SyntheticCorpus {
  std::string history;  // batch-history text
  std::vector<SyntheticChange> changes;  // in history order
};

SyntheticCorpus generate_synthetic(std::uint64_t seed = 7, std::size_t per_bundle = 60);

// Label-log text labelling `ids` with their true class.
std::string truth_labels(const SyntheticCorpus& corpus, const std::vector<std::string>& ids,
                         const std::string& expert);

// change_id,class CSV for a seeded sample of n changes.
std::string truth_verification_csv(const SyntheticCorpus& corpus, std::size_t n, std::uint64_t seed);

}  // namespace deltaclass::testing
