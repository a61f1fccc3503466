#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csichart/channel.hpp"

namespace csichart {

// Aligned samples: column n of `features` belongs to column n of
// `positions`, anchored[n] and trace_id[n].
struct Dataset
{
    SceneConfig scene;
    std::string pipeline_version;
    Eigen::MatrixXd features;  // D x N
    Eigen::MatrixXd positions; // D' x N, zero columns when has_positions is false
    bool has_positions = false;
    std::vector<std::uint8_t> anchored;
    std::vector<std::int64_t> trace_id; // -1 when the sample is not part of a trace

    std::size_t size() const { return static_cast<std::size_t>(features.cols()); }
    std::size_t feature_dim() const { return static_cast<std::size_t>(features.rows()); }
    std::size_t position_dim() const { return static_cast<std::size_t>(positions.rows()); }
    std::size_t anchor_count() const;
    std::vector<std::size_t> anchored_indices() const;

    Dataset subset(std::span<const std::size_t> indices) const;

    // Throws ShapeError when the per-sample arrays disagree in length or
    // anchors appear without positions.
    void validate() const;

    bool operator==(const Dataset &other) const;
};

// Anchors the first round(fraction * N) entries of a seeded permutation, so
// smaller fractions are nested inside larger ones for the same seed.
std::vector<std::uint8_t> sample_anchor_mask(std::size_t n, double fraction, std::uint64_t seed);

// Binary container: magic, format version, JSON header (scene config, D, D',
// N, pipeline version), then per-sample records.
void save_dataset(const std::filesystem::path &path, const Dataset &data);
Dataset load_dataset(const std::filesystem::path &path);

// index,trace_id,anchored,pos_x,pos_y,f0..f{D-1}
void export_dataset_csv(const std::filesystem::path &path, const Dataset &data);

} // namespace csichart
