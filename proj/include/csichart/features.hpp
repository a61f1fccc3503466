#pragma once

#include <string>

#include <Eigen/Dense>

#include "csichart/channel.hpp"

namespace csichart {

// Real, nonnegative channel feature of length B*S.
using FeatureVector = Eigen::VectorXd;

struct FeaturePipeline
{
    double sigma = 1.0;

    // Tag stored in dataset files. Any change to the scaling exponent, the
    // DFT convention or the stacking order must change this string.
    std::string version_tag() const;
};

// h * (B*S)^(sigma/2) / ||h||_F^sigma. Throws DegenerateInput for a zero matrix.
CsiMatrix feature_scale(const CsiMatrix &h, double sigma);

// Unnormalized 2-D DFT over antennas (rows) and subcarriers (columns):
// X[p,q] = sum_b sum_k h[b,k] exp(-j2pi pb/B) exp(-j2pi qk/S).
Eigen::MatrixXcd dft2(const Eigen::MatrixXcd &h);

// vec(|dft2(feature_scale(h, sigma))|), stacked column-major: entry q*B + p
// holds beam p of delay tap q.
FeatureVector csi_to_features(const CsiMatrix &h, double sigma);

} // namespace csichart
