#pragma once

// Dataset loaders and synthetic stream generators.
//
// Tabular loaders parse delimited text (gzip accepted), z-score the
// continuous columns, one-hot encode the categoricals in sorted category
// order, and keep the transform tables so the encoding is invertible up to
// the category maps. Rows containing a '?' field are dropped and counted.
// Loaders are pure: same file, same output; any shuffling happens in the
// environment.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "blp/types.hpp"

namespace blp::data {

struct TabularMeta {
    std::vector<std::string> feature_names;            // expanded, in vector order
    std::vector<double> cont_mean, cont_sd;            // per continuous column
    std::vector<std::vector<std::string>> categories;  // per categorical column, sorted
    std::size_t skipped_rows = 0;                      // dropped for missing fields
};

struct TabularData {
    LabeledDataset dataset;
    TabularMeta meta;
};

// Census-income CSV: comma delimited, header row required, the 14 standard
// attributes plus an `income` column; label 1 iff income is ">50K" (an
// optional trailing '.' is tolerated).
TabularData load_adult(const std::string& path);

// Bank-marketing CSV: semicolon delimited, optionally quoted fields, header
// row required; label 1 iff the `y` column is "yes".
TabularData load_bank(const std::string& path);

// IDX image/label file pair (big-endian, magics 0x00000803 / 0x00000801).
// Pixels are scaled to [0,1]; label 1 iff the digit is 5.
LabeledDataset load_mnist5(const std::string& images_path, const std::string& labels_path);

// Four Gaussian clusters in the plane with isotropic covariance; a point's
// label is its generating cluster's label (two positive clusters on one
// diagonal by default), so labels are deterministic given the draw.
struct XorConfig {
    std::array<std::array<double, 2>, 4> centers{{{0, 5}, {0, 0}, {5, -2}, {5, 5}}};
    std::array<int, 4> labels{{0, 1, 0, 1}};
    double variance = 0.5;
};

LabeledPoint xor_draw(const XorConfig& cfg, Rng& rng);

// Margin-separated logistic-linear stream: x uniform on the ball of radius
// `support_radius` with the band |theta*.x| < tau rejected; ||theta*|| is the
// Lipschitz constant of f*. Labels are Bernoulli(mu(theta*.x)).
struct LogisticStreamSpec {
    std::vector<double> theta_star;
    double tau = 0.2;
    double support_radius = 1.0;
};

// Picks theta_star: seed-deterministic direction with norm = lipschitz.
LogisticStreamSpec make_logistic_spec(int d, double tau, double lipschitz, std::uint64_t seed,
                                      double support_radius = 1.0);

double fstar(const LogisticStreamSpec& spec, const FeatureVector& x);

// Rejection-samples one x; errors out after 1e6 rejected candidates.
FeatureVector logistic_draw_x(const LogisticStreamSpec& spec, Rng& rng);

int logistic_draw_label(const LogisticStreamSpec& spec, const FeatureVector& x, Rng& rng);

}  // namespace blp::data
