#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace plume_scout::agent {

struct NetShape {
    Eigen::Index input = 1;
    Eigen::Index hidden1 = 128;
    Eigen::Index hidden2 = 64;
    Eigen::Index num_actions = 1;
    Eigen::Index num_atoms = 51;

    Eigen::Index outputs() const noexcept { return num_actions * num_atoms; }
    Eigen::Index param_count() const noexcept;

    friend bool operator==(const NetShape&, const NetShape&) = default;
};

/// input -> hidden1 -> hidden2 -> (num_actions x num_atoms) logits, ReLU between
/// layers. All parameters live in one flat vector so optimizer state, target
/// copies and checkpoints operate on a single buffer.
///
/// Layout: W1 (hidden1 x input), b1, W2 (hidden2 x hidden1), b2,
/// W3t (hidden2 x outputs), b3. The output weights are stored transposed so the
/// atoms of one action occupy contiguous columns.
class QNetwork {
public:
    using Mat = Eigen::Map<Eigen::MatrixXd>;
    using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
    using Vec = Eigen::Map<Eigen::VectorXd>;
    using ConstVec = Eigen::Map<const Eigen::VectorXd>;

    explicit QNetwork(const NetShape& shape);  // all zeros

    /// Glorot-uniform weights, zero biases.
    static QNetwork glorot(const NetShape& shape, std::mt19937_64& rng);

    const NetShape& shape() const noexcept { return shape_; }
    Eigen::VectorXd& params() noexcept { return params_; }
    const Eigen::VectorXd& params() const noexcept { return params_; }

    ConstMat w1() const { return view(params_, 0); }
    ConstVec b1() const { return vview(params_, 1); }
    ConstMat w2() const { return view(params_, 2); }
    ConstVec b2() const { return vview(params_, 3); }
    ConstMat w3t() const { return view(params_, 4); }
    ConstVec b3() const { return vview(params_, 5); }

    /// Per-action atom probabilities for one encoding: num_actions x num_atoms.
    Eigen::MatrixXd forward(const Eigen::VectorXd& encoding) const;

    /// Output logits for a batch of encodings (one per column): outputs x batch.
    Eigen::MatrixXd logits_batch(const Eigen::MatrixXd& encodings) const;

    // Views into any buffer with this network's layout (parameters or gradients).
    Mat view(Eigen::VectorXd& buf, int block) const;
    ConstMat view(const Eigen::VectorXd& buf, int block) const;
    Vec vview(Eigen::VectorXd& buf, int block) const;
    ConstVec vview(const Eigen::VectorXd& buf, int block) const;

private:
    struct Block {
        Eigen::Index offset, rows, cols;
    };
    Block block(int index) const;

    NetShape shape_;
    Eigen::VectorXd params_;
};

/// Column-wise softmax over atoms for every action of a logit column.
/// logits: outputs-length column; returns num_atoms x num_actions probabilities.
Eigen::MatrixXd atom_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits, Eigen::Index num_atoms);

}  // namespace plume_scout::agent
