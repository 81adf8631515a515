#pragma once

// Shared vocabulary types for the bank-loan-problem library.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace blp {

using FeatureVector = std::vector<double>;

// One labeled example. `weight` multiplies its loss contribution; ordinary
// buffer entries keep weight 1, pseudo-labeled entries carry the optimism
// weight W for the duration of a single optimistic fit.
struct LabeledPoint {
    FeatureVector x;
    int label = 0;  // 0 or 1
    double weight = 1.0;
};

using LabeledDataset = std::vector<LabeledPoint>;

// Buffer of accepted points with revealed labels. Multiset semantics: the
// same feature vector accepted twice is stored twice.
using AcceptedBuffer = LabeledDataset;

using Batch = std::vector<FeatureVector>;

using Rng = std::mt19937_64;

// Derives an independent stream seed from a run seed and a stream tag, so the
// env, policy, and label draws do not share a generator.
inline std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t stream_tag) {
    std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ULL * (stream_tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace blp
