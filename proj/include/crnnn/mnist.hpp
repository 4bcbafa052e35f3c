#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "crnnn/neural_net.hpp"

namespace crnnn {

// Pixels are stored as raw bytes; image(i) scales into [0, 1].
struct MnistDataset {
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> pixels;  // dim x count
    std::vector<int> labels;

    std::size_t count() const { return labels.size(); }
    int image_dim() const { return static_cast<int>(pixels.rows()); }
    Eigen::VectorXd image(std::size_t i) const {
        return pixels.col(static_cast<Eigen::Index>(i)).cast<double>() / 255.0;
    }
};

// Big-endian IDX: images magic 0x00000803 (count, rows, cols, raw bytes),
// labels magic 0x00000801. Parse errors name the byte offset.
MnistDataset load_idx(const std::string& images_path, const std::string& labels_path);

// 10 at the true digit, ones elsewhere.
Eigen::VectorXd encode_target(int label);

struct TrainingConfig {
    double learning_rate = 0.1;
    int batch_size = 300;
    int iterations = 1000;
    std::uint64_t rng_seed = 0;
    int sample_pool = 60000;
};

struct IterationRecord {
    double cost;      // batch-mean quadratic cost before the update
    double accuracy;  // batch argmax accuracy before the update
};

struct TrainingMetrics {
    std::vector<IterationRecord> per_iteration;
    HardwiredNetwork final_network;
};

// Plain SGD: per iteration draws batch_size distinct indices from the first
// sample_pool examples, applies the batch-mean gradient. Deterministic for
// a fixed (data, initial net, config).
TrainingMetrics train(const MnistDataset& data, const HardwiredNetwork& initial,
                      const TrainingConfig& cfg);

struct EvalResult {
    double accuracy;
    double mean_cost;
};

EvalResult evaluate(const HardwiredNetwork& net, const MnistDataset& data,
                    const std::vector<std::size_t>& indices);

// `iter,cost,accuracy` rows
void write_metrics_csv(std::ostream& os, const TrainingMetrics& metrics);

}  // namespace crnnn
