#include "plume_scout/agent/qnet.hpp"

#include <cmath>
#include <string>

#include "plume_scout/errors.hpp"

namespace plume_scout::agent {

Eigen::Index NetShape::param_count() const noexcept {
    return hidden1 * input + hidden1 + hidden2 * hidden1 + hidden2 + hidden2 * outputs() + outputs();
}

QNetwork::QNetwork(const NetShape& shape) : shape_(shape) {
    if (shape.input < 1 || shape.hidden1 < 1 || shape.hidden2 < 1 || shape.num_actions < 1 || shape.num_atoms < 2) {
        throw InvalidArgument("invalid network shape");
    }
    params_ = Eigen::VectorXd::Zero(shape.param_count());
}

QNetwork QNetwork::glorot(const NetShape& shape, std::mt19937_64& rng) {
    QNetwork net(shape);
    for (int b : {0, 2, 4}) {
        auto w = net.view(net.params_, b);
        // W3 is stored transposed; fan-in/fan-out are symmetric in the bound anyway.
        const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        std::uniform_real_distribution<double> uni(-bound, bound);
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = uni(rng);
        }
    }
    return net;
}

QNetwork::Block QNetwork::block(int index) const {
    const auto& s = shape_;
    const Block blocks[6] = {
        {0, s.hidden1, s.input},
        {0, s.hidden1, 1},
        {0, s.hidden2, s.hidden1},
        {0, s.hidden2, 1},
        {0, s.hidden2, s.outputs()},
        {0, s.outputs(), 1},
    };
    Eigen::Index offset = 0;
    for (int i = 0; i < index; ++i) offset += blocks[i].rows * blocks[i].cols;
    return {offset, blocks[index].rows, blocks[index].cols};
}

QNetwork::Mat QNetwork::view(Eigen::VectorXd& buf, int index) const {
    const Block b = block(index);
    return Mat(buf.data() + b.offset, b.rows, b.cols);
}

QNetwork::ConstMat QNetwork::view(const Eigen::VectorXd& buf, int index) const {
    const Block b = block(index);
    return ConstMat(buf.data() + b.offset, b.rows, b.cols);
}

QNetwork::Vec QNetwork::vview(Eigen::VectorXd& buf, int index) const {
    const Block b = block(index);
    return Vec(buf.data() + b.offset, b.rows);
}

QNetwork::ConstVec QNetwork::vview(const Eigen::VectorXd& buf, int index) const {
    const Block b = block(index);
    return ConstVec(buf.data() + b.offset, b.rows);
}

Eigen::MatrixXd QNetwork::logits_batch(const Eigen::MatrixXd& encodings) const {
    if (encodings.rows() != shape_.input) {
        throw InvalidArgument("encoding has " + std::to_string(encodings.rows()) + " entries, network expects " +
                              std::to_string(shape_.input));
    }
    Eigen::MatrixXd h1 = ((w1() * encodings).colwise() + b1()).cwiseMax(0.0);
    Eigen::MatrixXd h2 = ((w2() * h1).colwise() + b2()).cwiseMax(0.0);
    Eigen::MatrixXd out(shape_.outputs(), encodings.cols());
    out.noalias() = w3t().transpose() * h2;
    out.colwise() += b3();
    return out;
}

Eigen::MatrixXd QNetwork::forward(const Eigen::VectorXd& encoding) const {
    const Eigen::MatrixXd logits = logits_batch(encoding);
    return atom_softmax(logits.col(0), shape_.num_atoms).transpose();
}

Eigen::MatrixXd atom_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits, Eigen::Index num_atoms) {
    const Eigen::Index actions = logits.size() / num_atoms;
    Eigen::MatrixXd p = Eigen::Map<const Eigen::MatrixXd>(logits.data(), num_atoms, actions);
    for (Eigen::Index a = 0; a < actions; ++a) p.col(a).array() -= p.col(a).maxCoeff();
    // One exp over the whole block vectorizes far better than per-action calls.
    p.array() = p.array().exp();
    for (Eigen::Index a = 0; a < actions; ++a) p.col(a) /= p.col(a).sum();
    return p;
}

}  // namespace plume_scout::agent
