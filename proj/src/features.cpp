#include "csichart/features.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "csichart/errors.hpp"

namespace csichart {

namespace {

Eigen::MatrixXcd dft_matrix(Eigen::Index n)
{
    Eigen::MatrixXcd f(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) {
            // r*c reduced modulo n keeps the angle in [0, 2pi).
            const auto e = (r * c) % n;
            f(r, c) = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(e) / static_cast<double>(n));
        }
    return f;
}

} // namespace

std::string FeaturePipeline::version_tag() const
{
    std::ostringstream os;
    os.precision(17);
    os << "csi-features/v1;sigma=" << sigma << ";dft=unnormalized;stack=col-major";
    return os.str();
}

CsiMatrix feature_scale(const CsiMatrix &h, double sigma)
{
    const double fro = h.entries.norm();
    if (!(fro > 0.0))
        throw DegenerateInput("cannot scale an all-zero CSI matrix");
    if (sigma == 0.0)
        return h;
    const double n = static_cast<double>(h.entries.size());
    const double factor = std::pow(n, 0.5 * sigma) / std::pow(fro, sigma);
    CsiMatrix out = h;
    out.entries *= factor;
    return out;
}

Eigen::MatrixXcd dft2(const Eigen::MatrixXcd &h)
{
    // F_S is symmetric, so the column transform is a right multiplication.
    return dft_matrix(h.rows()) * h * dft_matrix(h.cols());
}

FeatureVector csi_to_features(const CsiMatrix &h, double sigma)
{
    const Eigen::MatrixXcd spectrum = dft2(feature_scale(h, sigma).entries);
    const Eigen::MatrixXd mag = spectrum.cwiseAbs();
    return Eigen::Map<const Eigen::VectorXd>(mag.data(), mag.size());
}

} // namespace csichart
