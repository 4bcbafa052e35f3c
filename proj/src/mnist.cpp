#include "crnnn/mnist.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "crnnn/rng.hpp"

namespace crnnn {

namespace {

std::uint32_t read_be32(std::ifstream& f, const std::string& path, std::size_t offset) {
    unsigned char buf[4];
    f.read(reinterpret_cast<char*>(buf), 4);
    if (!f)
        throw ParseError(path + ": truncated at byte offset " + std::to_string(offset));
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace

MnistDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw ParseError("cannot open images file '" + images_path + "'");
    const std::uint32_t img_magic = read_be32(imgs, images_path, 0);
    if (img_magic != 0x00000803)
        throw ParseError(images_path + ": bad images magic at byte offset 0 (got " +
                         std::to_string(img_magic) + ", want 2051)");
    const std::uint32_t count = read_be32(imgs, images_path, 4);
    const std::uint32_t rows = read_be32(imgs, images_path, 8);
    const std::uint32_t cols = read_be32(imgs, images_path, 12);
    const std::size_t dim = std::size_t(rows) * cols;
    if (dim == 0) throw ParseError(images_path + ": zero image dimensions at byte offset 8");

    MnistDataset ds;
    ds.pixels.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
    // row-major flattening: rows of the image are contiguous in the file
    imgs.read(reinterpret_cast<char*>(ds.pixels.data()),
              static_cast<std::streamsize>(dim * count));
    if (imgs.gcount() != static_cast<std::streamsize>(dim * count))
        throw ParseError(images_path + ": truncated pixel data at byte offset " +
                         std::to_string(16 + imgs.gcount()));

    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw ParseError("cannot open labels file '" + labels_path + "'");
    const std::uint32_t lab_magic = read_be32(labs, labels_path, 0);
    if (lab_magic != 0x00000801)
        throw ParseError(labels_path + ": bad labels magic at byte offset 0 (got " +
                         std::to_string(lab_magic) + ", want 2049)");
    const std::uint32_t lab_count = read_be32(labs, labels_path, 4);
    if (lab_count != count)
        throw ParseError(labels_path + ": label count " + std::to_string(lab_count) +
                         " does not match image count " + std::to_string(count));
    std::vector<unsigned char> raw(lab_count);
    labs.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(lab_count));
    if (labs.gcount() != static_cast<std::streamsize>(lab_count))
        throw ParseError(labels_path + ": truncated label data at byte offset " +
                         std::to_string(8 + labs.gcount()));
    ds.labels.assign(raw.begin(), raw.end());
    return ds;
}

Eigen::VectorXd encode_target(int label) {
    if (label < 0 || label > 9) throw StructureError("label out of range 0..9");
    Eigen::VectorXd t = Eigen::VectorXd::Ones(10);
    t[label] = 10.0;
    return t;
}

namespace {

Eigen::VectorXd encode_target_general(int label, int classes) {
    if (label < 0 || label >= classes) throw StructureError("label out of range");
    Eigen::VectorXd t = Eigen::VectorXd::Ones(classes);
    t[label] = 10.0;
    return t;
}

Eigen::MatrixXd apply_activation(const ActivationSpec& spec, const Eigen::MatrixXd& z) {
    return z.unaryExpr([&](double y) { return activate(spec, y); });
}

Eigen::MatrixXd apply_activation_derivative(const ActivationSpec& spec,
                                            const Eigen::MatrixXd& z) {
    return z.unaryExpr([&](double y) { return activate_derivative(spec, y); });
}

}  // namespace

TrainingMetrics train(const MnistDataset& data, const HardwiredNetwork& initial,
                      const TrainingConfig& cfg) {
    if (cfg.batch_size <= 0 || cfg.iterations < 0 || cfg.learning_rate < 0.0)
        throw StructureError("bad training configuration");
    if (cfg.batch_size > cfg.sample_pool)
        throw StructureError("batch_size exceeds sample_pool");
    if (static_cast<std::size_t>(cfg.sample_pool) > data.count())
        throw StructureError("sample_pool exceeds dataset size");
    if (initial.arch.input_size() != data.image_dim())
        throw DimensionError("network input size does not match image dimension");

    const int m = initial.arch.depth();
    const int classes = initial.arch.output_size();
    const int B = cfg.batch_size;
    Parameters p = initial.params;
    Rng rng(cfg.rng_seed);

    TrainingMetrics metrics{{}, initial};
    metrics.per_iteration.reserve(static_cast<std::size_t>(cfg.iterations));

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const auto idx =
            rng.randperm(static_cast<std::size_t>(cfg.sample_pool), static_cast<std::size_t>(B));

        Eigen::MatrixXd a(data.image_dim(), B);
        Eigen::MatrixXd target(classes, B);
        for (int k = 0; k < B; ++k) {
            a.col(k) = data.image(idx[static_cast<std::size_t>(k)]);
            target.col(k) =
                encode_target_general(data.labels[idx[static_cast<std::size_t>(k)]], classes);
        }

        // batched forward pass
        std::vector<Eigen::MatrixXd> zs(m), as(m + 1);
        as[0] = std::move(a);
        for (int l = 0; l < m; ++l) {
            zs[l] = (p.weights[l] * as[l]).colwise() + p.biases[l];
            as[l + 1] = apply_activation(initial.activation, zs[l]);
        }

        // batch estimate of the cost and accuracy before the update
        double cost = 0.0;
        int correct = 0;
        for (int k = 0; k < B; ++k) {
            cost += 0.5 * (as[m].col(k) - target.col(k)).squaredNorm();
            Eigen::Index argmax;
            as[m].col(k).maxCoeff(&argmax);
            if (argmax == data.labels[idx[static_cast<std::size_t>(k)]]) ++correct;
        }
        metrics.per_iteration.push_back(
            {cost / B, static_cast<double>(correct) / static_cast<double>(B)});

        // batched backprop, batch-mean gradients
        Eigen::MatrixXd delta = (as[m] - target)
                                    .cwiseProduct(apply_activation_derivative(
                                        initial.activation, zs[m - 1]));
        for (int l = m - 1; l >= 0; --l) {
            const Eigen::MatrixXd grad_w = delta * as[l].transpose() / B;
            const Eigen::VectorXd grad_b = delta.rowwise().sum() / B;
            if (l > 0)
                delta = (p.weights[l].transpose() * delta)
                            .cwiseProduct(
                                apply_activation_derivative(initial.activation, zs[l - 1]));
            p.weights[l] -= cfg.learning_rate * grad_w;
            p.biases[l] -= cfg.learning_rate * grad_b;
            if (!p.weights[l].allFinite() || !p.biases[l].allFinite())
                throw NumericError("training diverged (NaN parameters) at iteration " +
                                   std::to_string(iter));
        }
    }
    metrics.final_network = HardwiredNetwork(initial.arch, std::move(p), initial.activation);
    return metrics;
}

EvalResult evaluate(const HardwiredNetwork& net, const MnistDataset& data,
                    const std::vector<std::size_t>& indices) {
    double cost = 0.0;
    int correct = 0;
    for (std::size_t i : indices) {
        if (i >= data.count()) throw DimensionError("evaluation index out of range");
        const ForwardResult fwd = forward(net, data.image(i));
        cost += quadratic_cost(fwd.output(),
                               encode_target_general(data.labels[i], net.arch.output_size()));
        Eigen::Index argmax;
        fwd.output().maxCoeff(&argmax);
        if (argmax == data.labels[i]) ++correct;
    }
    const double n = static_cast<double>(indices.size());
    return {correct / n, cost / n};
}

void write_metrics_csv(std::ostream& os, const TrainingMetrics& metrics) {
    os << "iter,cost,accuracy\n" << std::setprecision(17);
    for (std::size_t i = 0; i < metrics.per_iteration.size(); ++i)
        os << i << "," << metrics.per_iteration[i].cost << ","
           << metrics.per_iteration[i].accuracy << "\n";
}

}  // namespace crnnn
