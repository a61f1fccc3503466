#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csichart/dataset.hpp"
#include "csichart/nn.hpp"

namespace csichart {

// Point sets are matrices with one point per column.

// Mean Euclidean distance between matching columns.
double mde(const Eigen::MatrixXd &pred, const Eigen::MatrixXd &truth);

// Kruskal's stress over unordered pairs with the least-squares scale
// beta = sum(delta*d) / sum(d^2) (beta = 0 when every d is 0).
double kruskal_stress(const Eigen::MatrixXd &ref, const Eigen::MatrixXd &emb);

// Neighbor ranks from point n, 1 = nearest, self excluded (rank 0 for n
// itself). Ties on squared distance break by ascending index.
std::vector<int> neighbor_ranks(const Eigen::MatrixXd &points, Eigen::Index n);

// Venna-Kaski trustworthiness: penalizes emb-space neighbors that are not
// ref-space neighbors by their excess ref rank. Requires 1 <= K < (2N-1)/3.
double trustworthiness(const Eigen::MatrixXd &ref, const Eigen::MatrixXd &emb, int k);

// continuity(ref, emb, K) == trustworthiness(emb, ref, K)
double continuity(const Eigen::MatrixXd &ref, const Eigen::MatrixXd &emb, int k);

bool valid_neighborhood_size(int k, std::size_t n);

struct MetricReport
{
    std::optional<double> mde;
    double ks = 0.0;
    std::vector<int> k_values;
    std::map<int, double> tw;
    std::map<int, double> ct;

    // Rows in fixed order: MDE (if present), KS, TW@K..., CT@K...
    std::vector<std::pair<std::string, double>> rows() const;
    std::string to_csv() const;
    std::string to_table() const;
    void write(const std::filesystem::path &csv_path, const std::filesystem::path &table_path) const;
};

inline const std::vector<int> default_k_values = {1, 40, 80};

// ref: ground-truth geometry, emb: predicted or embedded points.
MetricReport evaluate_points(const Eigen::MatrixXd &emb,
                             const Eigen::MatrixXd &ref,
                             const std::vector<int> &k_values,
                             bool include_mde);

enum class ReferenceSpace { positions, features };

struct EvaluationOptions
{
    std::vector<int> k_values = default_k_values;
    bool include_mde = true;
    // TW/CT/KS reference geometry; MDE always compares against positions.
    ReferenceSpace reference = ReferenceSpace::positions;
};

// Predictions of `model` on every sample of `data`.
MetricReport evaluate(const MlpModel &model, const Dataset &data, const EvaluationOptions &opts = {});

// Precomputed points (one column per sample of `data`), e.g. a
// nonparametric embedding.
MetricReport evaluate(const Eigen::MatrixXd &points, const Dataset &data, const EvaluationOptions &opts = {});

} // namespace csichart
