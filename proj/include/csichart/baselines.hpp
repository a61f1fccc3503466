#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "csichart/dataset.hpp"
#include "csichart/nn.hpp"
#include "csichart/siamese.hpp"

namespace csichart {

// Free low-dimensional points of classical Sammon's mapping, one column per
// sample.
struct Embedding
{
    Eigen::MatrixXd points;
};

struct SammonOptions
{
    int d_prime = 2;
    int iterations = 2000;
    double learning_rate = 0.3;
    double momentum = 0.5;
    double epsilon = 1e-6;
    std::uint64_t seed = 0;
};

struct SammonResult
{
    Embedding embedding;    // lowest-loss iterate
    double best_loss = 0.0;
    std::vector<double> best_loss_history; // best-so-far loss after each iteration
};

// Unnormalized Sammon loss sum_{n<m} w_nm (||x_n-x_m||_eps - ||y_n-y_m||_eps)^2
// with w_nm = 1/||x_n-x_m||_eps.
double sammon_loss(const Eigen::MatrixXd &features, const Eigen::MatrixXd &points, double epsilon);

// PCA-initialized, diagonally preconditioned gradient descent with momentum
// on the Sammon loss. Throws InvalidInput when fewer than two samples.
SammonResult sammon_nonparametric(const Eigen::MatrixXd &features, const SammonOptions &opts);

// Top-d principal component scores, rescaled so the mean pairwise distance
// matches that of the features.
Eigen::MatrixXd pca_embedding(const Eigen::MatrixXd &features, int d);

// Position regression with the same tower: supervised training without the
// pairwise term. Every sample must be anchored.
TrainResult train_fcnn(MlpModel model, const Dataset &data, const SgdConfig &sgd_cfg);

void export_embedding_csv(const std::filesystem::path &path, const Eigen::MatrixXd &points);

} // namespace csichart
