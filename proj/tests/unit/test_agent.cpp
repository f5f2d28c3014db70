#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "plume_scout/agent/adam.hpp"
#include "plume_scout/agent/c51.hpp"
#include "plume_scout/agent/c51_agent.hpp"
#include "plume_scout/agent/encoding.hpp"
#include "plume_scout/agent/qnet.hpp"
#include "plume_scout/agent/replay.hpp"
#include "plume_scout/errors.hpp"

using namespace plume_scout;
using namespace plume_scout::agent;

namespace {

Eigen::VectorXd random_vec(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> z(0.0, scale);
    Eigen::VectorXd v(n);
    for (auto& x : v) x = z(rng);
    return v;
}

Eigen::VectorXd random_dist(Eigen::Index k, std::mt19937_64& rng) {
    std::gamma_distribution<double> g(0.7, 1.0);
    Eigen::VectorXd p(k);
    for (auto& x : p) x = g(rng);
    return p / p.sum();
}

// Projection through hat functions: each shifted atom spreads its mass over
// the support with weights max(0, 1 - |Tz - z_i| / dz).
Eigen::VectorXd hat_projection(double r, bool done, const Eigen::VectorXd& p, const AtomSupport& s, double discount) {
    const int K = s.num_atoms;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(K);
    const int sources = done ? 1 : K;
    for (int j = 0; j < sources; ++j) {
        const double tz = std::clamp(done ? r : r + discount * s.atom(j), s.v_min, s.v_max);
        const double mass = done ? 1.0 : p[j];
        for (int i = 0; i < K; ++i) out[i] += mass * std::max(0.0, 1.0 - std::abs(tz - s.atom(i)) / s.spacing());
    }
    return out;
}

Transition random_transition(Eigen::Index in, int actions, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> a(0, actions - 1);
    ActionMask mask(static_cast<std::size_t>(actions), true);
    return Transition{random_vec(in, rng), a(rng), random_vec(1, rng, 0.3)[0], random_vec(in, rng),
                      std::bernoulli_distribution(0.2)(rng), mask};
}

}  // namespace

TEST_CASE("state encoding") {
    const Scenario sc = build_scenario(paperlike_preset());
    const auto enc = StateEncoder::for_scenario(sc, 2);
    CHECK(enc.size() == 104);
    EnvState s;
    s.analysis = sc.background;
    s.drones = {DroneState{0, 2000.0, true}, DroneState{99, 2000.0, true}};
    const Eigen::VectorXd e = enc.encode(s);
    const Eigen::VectorXd expected = (sc.background.values.array() - sc.background.mean()) / sc.background.stddev();
    CHECK((e.head(100) - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(e[100] == 0.0);
    CHECK(e[101] == 0.0);
    CHECK(e[102] == 1.0);
    CHECK(e[103] == 1.0);

    EnvState t = s;
    t.drones[0].budget = 5.0;
    CHECK(enc.encode(t) == e);

    s.drones[0].cell = 23;  // row 2, col 3
    const Eigen::VectorXd f = enc.encode(s);
    CHECK(f[100] == doctest::Approx(3.0 / 9.0));
    CHECK(f[101] == doctest::Approx(2.0 / 9.0));
    CHECK_THROWS_AS(StateEncoder(sc.spec.grid, 2, 0.0, 0.0), InvalidScenario);
}

TEST_CASE("network forward") {
    const NetShape shape{6, 8, 5, 4, 7};
    CHECK(shape.param_count() == 8 * 6 + 8 + 5 * 8 + 5 + 5 * 28 + 28);
    const QNetwork zero(shape);
    const Eigen::MatrixXd p0 = zero.forward(Eigen::VectorXd::Ones(6));
    CHECK((p0.array() - 1.0 / 7.0).abs().maxCoeff() < 1e-15);

    std::mt19937_64 rng(2);
    const QNetwork net = QNetwork::glorot(shape, rng);
    const double bound1 = std::sqrt(6.0 / (6 + 8));
    CHECK(net.w1().cwiseAbs().maxCoeff() <= bound1);
    CHECK(net.b1().isZero());
    const AtomSupport support{7, -2.0, 2.0};
    for (int t = 0; t < 50; ++t) {
        const Eigen::VectorXd x = random_vec(6, rng, 3.0);
        const Eigen::MatrixXd p = net.forward(x);
        CHECK(p.rows() == 4);
        CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
        CHECK(p.minCoeff() >= 0.0);
        const Eigen::VectorXd q = action_values(net, support, x);
        CHECK(q.minCoeff() >= -2.0);
        CHECK(q.maxCoeff() <= 2.0);
        // Batch logits agree with the single-sample path.
        const Eigen::MatrixXd logits = net.logits_batch(x);
        const Eigen::MatrixXd pb = atom_softmax(logits.col(0), 7);
        CHECK((pb.transpose() - p).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("action selection") {
    const NetShape shape{3, 4, 4, 20, 5};
    QNetwork net(shape);
    const AtomSupport support{5, -1.0, 1.0};
    const Eigen::VectorXd x = Eigen::VectorXd::Ones(3);
    std::mt19937_64 rng(8);

    net.vview(net.params(), 5)[7 * 5 + 4] = 10.0;  // action 7 puts its mass on the top atom
    ActionMask all(20, true);
    CHECK(select_action(net, support, x, all, 0.0, rng) == 7);
    ActionMask no7 = all;
    no7[7] = false;
    net.vview(net.params(), 5)[12 * 5 + 4] = 5.0;
    CHECK(select_action(net, support, x, no7, 0.0, rng) == 12);
    CHECK_THROWS_AS(select_action(net, support, x, ActionMask(20, false), 0.0, rng), InvalidArgument);

    SUBCASE("epsilon 1 is uniform over the feasible set") {
        ActionMask half(20, false);
        for (int a = 0; a < 20; a += 2) half[static_cast<std::size_t>(a)] = true;
        std::vector<int> counts(20, 0);
        const int draws = 10000;
        for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(select_action(net, support, x, half, 1.0, rng))];
        double chi2 = 0.0;
        for (int a = 0; a < 20; ++a) {
            if (!half[static_cast<std::size_t>(a)]) {
                CHECK(counts[static_cast<std::size_t>(a)] == 0);
                continue;
            }
            const double d = counts[static_cast<std::size_t>(a)] - draws / 10.0;
            chi2 += d * d / (draws / 10.0);
        }
        CHECK(chi2 < 27.88);  // chi-square, 9 dof, p = 0.001
    }
}

TEST_CASE("projection examples") {
    const AtomSupport s{3, -1.0, 1.0};
    Eigen::MatrixXd next(1, 3);
    next << 0.2, 0.5, 0.3;
    const double r0 = 0.0, r_half = 0.5, r5 = 5.0;
    const bool live = false, done = true;
    Eigen::MatrixXd t = project_target(std::span(&r0, 1), std::span(&live, 1), next, s, 1.0);
    CHECK((t.row(0) - next.row(0)).cwiseAbs().maxCoeff() < 1e-15);
    t = project_target(std::span(&r_half, 1), std::span(&done, 1), next, s, 1.0);
    CHECK(t(0, 0) == doctest::Approx(0.0));
    CHECK(t(0, 1) == doctest::Approx(0.5));
    CHECK(t(0, 2) == doctest::Approx(0.5));
    t = project_target(std::span(&r5, 1), std::span(&done, 1), next, s, 1.0);
    CHECK(t(0, 2) == doctest::Approx(1.0));
}

TEST_CASE("projection matches the hat-function oracle") {
    std::mt19937_64 rng(41);
    const AtomSupport s;
    std::uniform_real_distribution<double> ur(-3.0, 3.0), ud(0.0, 1.0);
    const int B = 200;
    for (int round = 0; round < 10; ++round) {
        std::vector<double> r(B);
        std::unique_ptr<bool[]> dones(new bool[B]);
        Eigen::MatrixXd next(B, s.num_atoms);
        std::vector<double> discounts(B);
        for (int b = 0; b < B; ++b) {
            r[static_cast<std::size_t>(b)] = ur(rng);
            dones[static_cast<std::size_t>(b)] = ud(rng) < 0.2;
            next.row(b) = random_dist(s.num_atoms, rng).transpose();
        }
        const double discount = ud(rng);
        const Eigen::MatrixXd t = project_target(r, std::span(dones.get(), B), next, s, discount);
        for (int b = 0; b < B; ++b) {
            const Eigen::VectorXd o = hat_projection(r[static_cast<std::size_t>(b)], dones[static_cast<std::size_t>(b)],
                                                     next.row(b).transpose(), s, discount);
            CHECK((t.row(b).transpose() - o).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(std::abs(t.row(b).sum() - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("loss gradient matches central differences") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const NetShape shape{4, 6, 5, 3, 5};
        const QNetwork net = QNetwork::glorot(shape, rng);
        QNetwork probe = net;
        // Nonzero biases so every parameter block is exercised away from zero.
        probe.params() += 0.05 * random_vec(shape.param_count(), rng);
        const int B = 6;
        Eigen::MatrixXd enc(4, B), targets(B, 5);
        std::vector<int> actions(B);
        for (int b = 0; b < B; ++b) {
            enc.col(b) = random_vec(4, rng, 2.0);
            targets.row(b) = random_dist(5, rng).transpose();
            actions[static_cast<std::size_t>(b)] = std::uniform_int_distribution<int>(0, 2)(rng);
        }
        const LossAndGrads lg = loss_and_grads(probe, enc, actions, targets);
        CHECK(lg.loss == doctest::Approx(c51_loss(probe, enc, actions, targets)));
        const double h = 1e-5;
        int bad = 0;
        for (Eigen::Index i = 0; i < shape.param_count(); ++i) {
            QNetwork plus = probe, minus = probe;
            plus.params()[i] += h;
            minus.params()[i] -= h;
            const double fd = (c51_loss(plus, enc, actions, targets) - c51_loss(minus, enc, actions, targets)) / (2 * h);
            const double scale = std::max({std::abs(fd), std::abs(lg.grads[i]), 1e-6});
            if (std::abs(fd - lg.grads[i]) > 1e-4 * scale) ++bad;
        }
        CHECK(bad == 0);
    }
}

TEST_CASE("loss identities") {
    std::mt19937_64 rng(6);
    const NetShape shape{3, 4, 4, 2, 5};
    const QNetwork net = QNetwork::glorot(shape, rng);
    Eigen::MatrixXd enc(3, 2);
    enc.col(0) = random_vec(3, rng);
    enc.col(1) = random_vec(3, rng);
    const std::vector<int> actions{0, 1};
    Eigen::MatrixXd own(2, 5);
    own.row(0) = net.forward(enc.col(0)).row(0);
    own.row(1) = net.forward(enc.col(1)).row(1);
    double entropy = 0.0;
    for (int b = 0; b < 2; ++b) {
        for (int j = 0; j < 5; ++j) entropy -= own(b, j) * std::log(own(b, j));
    }
    CHECK(c51_loss(net, enc, actions, own) == doctest::Approx(entropy / 2.0));

    // Duplicating the batch leaves the mean loss unchanged.
    Eigen::MatrixXd enc2(3, 4), t2(4, 5);
    enc2 << enc, enc;
    t2 << own, own;
    CHECK(c51_loss(net, enc2, std::vector<int>{0, 1, 0, 1}, t2) == doctest::Approx(c51_loss(net, enc, actions, own)));

    // A sharp prediction against its own one-hot target costs almost nothing.
    QNetwork sharp(shape);
    sharp.vview(sharp.params(), 5)[2] = 40.0;
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(1, 5);
    onehot(0, 2) = 1.0;
    CHECK(c51_loss(sharp, enc.col(0), std::vector<int>{0}, onehot) < 1e-12);
}

TEST_CASE("adam") {
    AdamState st(1, AdamConfig{0.1, 0.9, 0.999, 1e-8});
    Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 2.0);
    adam_step(st, p, Eigen::VectorXd::Ones(1));
    CHECK(p[0] == doctest::Approx(2.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(st.step == 1);

    AdamState zero(3, AdamConfig{});
    Eigen::VectorXd q = Eigen::Vector3d(1, 2, 3);
    adam_step(zero, q, Eigen::VectorXd::Zero(3));
    CHECK(q == Eigen::Vector3d(1, 2, 3));
}

TEST_CASE("replay buffer") {
    ReplayBuffer buf(5);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 8; ++i) {
        Transition t;
        t.action = i;
        buf.push(t);
    }
    CHECK(buf.size() == 5);
    std::vector<int> held;
    for (std::size_t i = 0; i < buf.size(); ++i) held.push_back(buf[i].action);
    std::sort(held.begin(), held.end());
    CHECK(held == std::vector<int>{3, 4, 5, 6, 7});
    for (int t = 0; t < 100; ++t) {
        auto idx = buf.sample_indices(4, rng);
        CHECK(idx.size() == 4);
        std::sort(idx.begin(), idx.end());
        CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
        CHECK(idx.back() < 5);
    }
    CHECK(buf.sample_indices(10, rng).size() == 5);
}

TEST_CASE("agent training bookkeeping") {
    C51Config cfg;
    cfg.hidden1 = 16;
    cfg.hidden2 = 8;
    cfg.batch_size = 4;
    cfg.buffer_capacity = 100;
    cfg.adam.learning_rate = 1e-3;
    std::mt19937_64 rng(12);
    C51Agent agent(5, 3, cfg, 77);
    CHECK_FALSE(agent.train_step().has_value());
    for (int i = 0; i < 20; ++i) agent.remember(random_transition(5, 3, rng));

    const Eigen::VectorXd x = random_vec(5, rng);
    for (int u = 0; u < 7; ++u) {
        const Eigen::VectorXd before = agent.target().params();
        REQUIRE(agent.train_step().has_value());
        if (agent.gradient_updates() % 3 != 0) CHECK(agent.target().params() == before);
        else CHECK(agent.target().forward(x) == agent.online().forward(x));
    }
    CHECK(agent.gradient_updates() == 7);
    CHECK(agent.target_syncs() == 2);

    SUBCASE("identical seeds give identical trajectories") {
        C51Agent a(5, 3, cfg, 5), b(5, 3, cfg, 5);
        std::mt19937_64 r1(9), r2(9);
        for (int i = 0; i < 30; ++i) {
            a.remember(random_transition(5, 3, r1));
            b.remember(random_transition(5, 3, r2));
        }
        for (int u = 0; u < 10; ++u) CHECK(*a.train_step() == *b.train_step());
        CHECK(a.online().params() == b.online().params());
    }

    SUBCASE("checkpoint round trip resumes bit-identically") {
        const auto path = (std::filesystem::temp_directory_path() / "plume_scout_agent.ckpt").string();
        agent.save(path);
        C51Agent loaded = C51Agent::load(path);
        CHECK(loaded.online().params() == agent.online().params());
        CHECK(loaded.target().params() == agent.target().params());
        CHECK(loaded.optimizer().m == agent.optimizer().m);
        CHECK(loaded.optimizer().v == agent.optimizer().v);
        CHECK(loaded.optimizer().step == agent.optimizer().step);
        CHECK(loaded.gradient_updates() == 7);
        CHECK(loaded.target_syncs() == 2);
        // Replay contents are not checkpointed; refill both identically and continue.
        std::mt19937_64 r1(4), r2(4);
        C51Agent fresh_a = C51Agent::load(path);
        for (int i = 0; i < 10; ++i) {
            fresh_a.remember(random_transition(5, 3, r1));
            loaded.remember(random_transition(5, 3, r2));
        }
        for (int u = 0; u < 5; ++u) CHECK(*fresh_a.train_step() == *loaded.train_step());

        {
            std::ofstream(path, std::ios::binary | std::ios::trunc) << "not a checkpoint";
        }
        CHECK_THROWS_AS(C51Agent::load(path), FormatError);
        std::filesystem::remove(path);
    }
}
