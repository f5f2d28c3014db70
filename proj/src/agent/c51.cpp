#include "plume_scout/agent/c51.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plume_scout/errors.hpp"

namespace plume_scout::agent {

void AtomSupport::validate() const {
    if (num_atoms < 2) throw InvalidArgument("atom support needs at least two atoms");
    if (!(v_min < v_max)) throw InvalidArgument("atom support requires v_min < v_max");
}

Eigen::VectorXd AtomSupport::atoms() const {
    Eigen::VectorXd z(num_atoms);
    for (int j = 0; j < num_atoms; ++j) z[j] = atom(j);
    return z;
}

Eigen::VectorXd action_values(const QNetwork& net, const AtomSupport& support, const Eigen::VectorXd& encoding) {
    return net.forward(encoding) * support.atoms();
}

int masked_argmax(const Eigen::Ref<const Eigen::VectorXd>& values, const ActionMask& mask) {
    int best = -1;
    for (Eigen::Index a = 0; a < values.size(); ++a) {
        if (!mask[static_cast<std::size_t>(a)]) continue;
        if (best < 0 || values[a] > values[best]) best = static_cast<int>(a);
    }
    return best;
}

int select_action(const QNetwork& net, const AtomSupport& support, const Eigen::VectorXd& encoding,
                  const ActionMask& mask, double epsilon, std::mt19937_64& rng) {
    if (mask.size() != static_cast<std::size_t>(net.shape().num_actions)) {
        throw InvalidArgument("action mask size does not match the network");
    }
    std::vector<int> feasible;
    for (std::size_t a = 0; a < mask.size(); ++a) {
        if (mask[a]) feasible.push_back(static_cast<int>(a));
    }
    if (feasible.empty()) throw InvalidArgument("select_action: no feasible action");

    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, feasible.size() - 1);
        return feasible[pick(rng)];
    }
    return masked_argmax(action_values(net, support, encoding), mask);
}

Eigen::MatrixXd project_target(std::span<const double> rewards, std::span<const bool> dones,
                               const Eigen::MatrixXd& next_dists, const AtomSupport& support, double discount) {
    const auto batch = static_cast<Eigen::Index>(rewards.size());
    if (dones.size() != rewards.size() || next_dists.rows() != batch || next_dists.cols() != support.num_atoms) {
        throw InvalidArgument("project_target: inconsistent batch shapes");
    }
    const double dz = support.spacing();
    const int last = support.num_atoms - 1;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(batch, support.num_atoms);

    auto deposit = [&](Eigen::Index row, double value, double mass) {
        const double clamped = std::clamp(value, support.v_min, support.v_max);
        const double b = std::clamp((clamped - support.v_min) / dz, 0.0, static_cast<double>(last));
        const auto lo = static_cast<int>(std::floor(b));
        const auto hi = static_cast<int>(std::ceil(b));
        if (lo == hi) {
            out(row, lo) += mass;
        } else {
            out(row, lo) += mass * (hi - b);
            out(row, hi) += mass * (b - lo);
        }
    };

    for (Eigen::Index i = 0; i < batch; ++i) {
        const double r = rewards[static_cast<std::size_t>(i)];
        if (dones[static_cast<std::size_t>(i)]) {
            deposit(i, r, 1.0);
            continue;
        }
        for (int j = 0; j <= last; ++j) deposit(i, r + discount * support.atom(j), next_dists(i, j));
    }
    return out;
}

namespace {

struct Activations {
    Eigen::MatrixXd z1, h1, z2, h2;
};

Activations hidden_pass(const QNetwork& net, const Eigen::MatrixXd& x) {
    Activations a;
    a.z1 = (net.w1() * x).colwise() + net.b1();
    a.h1 = a.z1.cwiseMax(0.0);
    a.z2 = (net.w2() * a.h1).colwise() + net.b2();
    a.h2 = a.z2.cwiseMax(0.0);
    return a;
}

void check_batch(const QNetwork& net, const Eigen::MatrixXd& x, std::span<const int> actions,
                 const Eigen::MatrixXd& targets) {
    const auto& s = net.shape();
    if (x.rows() != s.input || x.cols() != static_cast<Eigen::Index>(actions.size()) || targets.rows() != x.cols() ||
        targets.cols() != s.num_atoms) {
        throw InvalidArgument("loss: inconsistent batch shapes");
    }
    if (x.cols() == 0) throw InvalidArgument("loss: empty batch");
    for (int a : actions) {
        if (a < 0 || a >= s.num_actions) throw InvalidArgument("loss: action " + std::to_string(a) + " out of range");
    }
}

// Logits of the taken action for sample b.
Eigen::VectorXd action_logits(const QNetwork& net, const Activations& act, Eigen::Index b, int action) {
    const Eigen::Index K = net.shape().num_atoms;
    return net.w3t().middleCols(action * K, K).transpose() * act.h2.col(b) + net.b3().segment(action * K, K);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
    Eigen::VectorXd p = (z.array() - z.maxCoeff()).exp();
    return p / p.sum();
}

}  // namespace

double c51_loss(const QNetwork& net, const Eigen::MatrixXd& encodings, std::span<const int> actions,
                const Eigen::MatrixXd& targets) {
    check_batch(net, encodings, actions, targets);
    const Activations act = hidden_pass(net, encodings);
    double total = 0.0;
    for (Eigen::Index b = 0; b < encodings.cols(); ++b) {
        const Eigen::VectorXd p = softmax(action_logits(net, act, b, actions[static_cast<std::size_t>(b)]));
        total -= (targets.row(b).transpose().array() * p.array().max(kProbabilityFloor).log()).sum();
    }
    return total / static_cast<double>(encodings.cols());
}

LossAndGrads loss_and_grads(const QNetwork& net, const Eigen::MatrixXd& encodings, std::span<const int> actions,
                            const Eigen::MatrixXd& targets) {
    check_batch(net, encodings, actions, targets);
    const auto& s = net.shape();
    const Eigen::Index B = encodings.cols();
    const Eigen::Index K = s.num_atoms;
    const double inv_b = 1.0 / static_cast<double>(B);

    const Activations act = hidden_pass(net, encodings);
    LossAndGrads out;
    out.grads = Eigen::VectorXd::Zero(s.param_count());
    auto dw3t = net.view(out.grads, 4);
    auto db3 = net.vview(out.grads, 5);
    Eigen::MatrixXd dh2(s.hidden2, B);

    double total = 0.0;
    for (Eigen::Index b = 0; b < B; ++b) {
        const int a = actions[static_cast<std::size_t>(b)];
        const Eigen::VectorXd p = softmax(action_logits(net, act, b, a));
        const Eigen::VectorXd t = targets.row(b).transpose();
        total -= (t.array() * p.array().max(kProbabilityFloor).log()).sum();

        // d/dz_k of -sum_j t_j log(max(p_j, floor)): floored entries carry no gradient.
        const Eigen::ArrayXd live = (p.array() >= kProbabilityFloor).cast<double>();
        const double live_mass = (t.array() * live).sum();
        const Eigen::VectorXd g = ((p.array() * live_mass - t.array() * live) * inv_b).matrix();

        dw3t.middleCols(a * K, K).noalias() += act.h2.col(b) * g.transpose();
        db3.segment(a * K, K) += g;
        dh2.col(b).noalias() = net.w3t().middleCols(a * K, K) * g;
    }
    out.loss = total * inv_b;
    if (!std::isfinite(out.loss)) throw NumericError("C51 loss is not finite");

    const Eigen::MatrixXd dz2 = dh2.cwiseProduct((act.z2.array() > 0.0).cast<double>().matrix());
    net.view(out.grads, 2).noalias() = dz2 * act.h1.transpose();
    net.vview(out.grads, 3) = dz2.rowwise().sum();
    const Eigen::MatrixXd dz1 =
        (net.w2().transpose() * dz2).cwiseProduct((act.z1.array() > 0.0).cast<double>().matrix());
    net.view(out.grads, 0).noalias() = dz1 * encodings.transpose();
    net.vview(out.grads, 1) = dz1.rowwise().sum();
    return out;
}

}  // namespace plume_scout::agent
