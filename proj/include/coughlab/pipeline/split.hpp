// Subject-level train/test split, stratified by label.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "coughlab/audio_io.hpp"
#include "coughlab/common.hpp"

namespace coughlab {

struct CorpusSplit {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;

    bool in_test(const std::string& id) const {
        return std::find(test_ids.begin(), test_ids.end(), id) != test_ids.end();
    }
};

// Per class, round(n * test_fraction) subjects go to the test side (at least
// one, never all). Subjects stay whole; the draw is a seeded shuffle, so the
// same seed always yields the same split.
inline CorpusSplit split_corpus(const std::vector<SubjectRecord>& records,
                                double test_fraction, uint64_t seed,
                                const std::string& stage = "split") {
    if (records.empty()) throw InvalidArgument("split_corpus: empty record list");
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw InvalidArgument("split_corpus: test_fraction outside (0,1)");

    std::vector<std::string> by_class[2];
    for (const auto& r : records)
        by_class[r.label == Label::cancer ? 1 : 0].push_back(r.subject_id);
    if (by_class[0].empty() || by_class[1].empty())
        throw InvalidArgument("split_corpus: both classes must be present");

    CorpusSplit split;
    for (int c = 0; c < 2; ++c) {
        auto& ids = by_class[c];
        if (ids.size() < 2)
            throw InvalidArgument(std::string("split_corpus: class ") +
                                  (c == 1 ? "cancer" : "healthy") +
                                  " has fewer than 2 subjects");
        auto rng = make_rng(seed, stage + ":" + (c == 1 ? "cancer" : "healthy"));
        std::shuffle(ids.begin(), ids.end(), rng);
        size_t n_test = static_cast<size_t>(
            std::llround(static_cast<double>(ids.size()) * test_fraction));
        n_test = std::clamp<size_t>(n_test, 1, ids.size() - 1);
        split.test_ids.insert(split.test_ids.end(), ids.begin(), ids.begin() + n_test);
        split.train_ids.insert(split.train_ids.end(), ids.begin() + n_test, ids.end());
    }
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    return split;
}

}  // namespace coughlab
