#include "plume_scout/agent/c51_agent.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "plume_scout/errors.hpp"

namespace plume_scout::agent {

namespace {

NetShape shape_for(Eigen::Index input, Eigen::Index actions, const C51Config& c) {
    return NetShape{input, c.hidden1, c.hidden2, actions, c.support.num_atoms};
}

}  // namespace

C51Agent::C51Agent(Eigen::Index input_size, Eigen::Index num_actions, const C51Config& config, std::uint64_t seed)
    : config_(config),
      online_(shape_for(input_size, num_actions, config)),
      target_(online_.shape()),
      replay_(config.buffer_capacity),
      rng_(seed) {
    config_.support.validate();
    if (config_.batch_size == 0 || config_.target_period == 0) {
        throw InvalidArgument("batch size and target period must be positive");
    }
    online_ = QNetwork::glorot(online_.shape(), rng_);
    target_ = online_;
    adam_ = AdamState(online_.params().size(), config_.adam);
}

C51Agent::C51Agent(C51Config config, QNetwork online, QNetwork target, AdamState adam, std::mt19937_64 rng)
    : config_(std::move(config)),
      online_(std::move(online)),
      target_(std::move(target)),
      adam_(std::move(adam)),
      replay_(config_.buffer_capacity),
      rng_(rng) {}

void C51Agent::sync_target() {
    target_.params() = online_.params();
    ++target_syncs_;
}

Eigen::MatrixXd C51Agent::compute_targets(const std::vector<std::size_t>& indices) const {
    const auto batch = static_cast<Eigen::Index>(indices.size());
    const Eigen::Index K = config_.support.num_atoms;
    std::vector<double> rewards(indices.size());
    std::unique_ptr<bool[]> dones(new bool[indices.size()]);
    std::vector<Eigen::Index> bootstrap;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const Transition& t = replay_[indices[i]];
        rewards[i] = t.reward;
        const bool stranded = std::none_of(t.next_mask.begin(), t.next_mask.end(), [](bool b) { return b; });
        dones[i] = t.done || stranded;
        if (!dones[i]) bootstrap.push_back(static_cast<Eigen::Index>(i));
    }

    Eigen::MatrixXd next_dists = Eigen::MatrixXd::Zero(batch, K);
    if (!bootstrap.empty()) {
        Eigen::MatrixXd next_states(online_.shape().input, static_cast<Eigen::Index>(bootstrap.size()));
        for (std::size_t c = 0; c < bootstrap.size(); ++c) {
            next_states.col(static_cast<Eigen::Index>(c)) = replay_[indices[static_cast<std::size_t>(bootstrap[c])]].next_state;
        }
        const Eigen::MatrixXd logits = target_.logits_batch(next_states);
        const Eigen::VectorXd atoms = config_.support.atoms();
        for (std::size_t c = 0; c < bootstrap.size(); ++c) {
            const Transition& t = replay_[indices[static_cast<std::size_t>(bootstrap[c])]];
            const Eigen::MatrixXd probs = atom_softmax(logits.col(static_cast<Eigen::Index>(c)), K);
            const Eigen::VectorXd q = probs.transpose() * atoms;
            const int greedy = masked_argmax(q, t.next_mask);
            next_dists.row(bootstrap[c]) = probs.col(greedy).transpose();
        }
    }
    return project_target(rewards, std::span<const bool>(dones.get(), indices.size()), next_dists, config_.support,
                          config_.discount);
}

std::optional<double> C51Agent::train_step() {
    if (replay_.size() < config_.batch_size) return std::nullopt;
    const std::vector<std::size_t> indices = replay_.sample_indices(config_.batch_size, rng_);
    const Eigen::MatrixXd targets = compute_targets(indices);

    Eigen::MatrixXd states(online_.shape().input, static_cast<Eigen::Index>(indices.size()));
    std::vector<int> actions(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        states.col(static_cast<Eigen::Index>(i)) = replay_[indices[i]].state;
        actions[i] = replay_[indices[i]].action;
    }
    const LossAndGrads lg = loss_and_grads(online_, states, actions, targets);
    adam_step(adam_, online_.params(), lg.grads);
    ++gradient_updates_;
    if (gradient_updates_ % config_.target_period == 0) sync_target();
    return lg.loss;
}

// ---------------------------------------------------------------------------
// Checkpoint: little-endian, versioned, self-describing.

namespace {

constexpr std::array<char, 8> kMagic = {'P', 'S', 'C', '5', '1', 'C', 'K', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}
    void u32(std::uint32_t v) { bytes(v, 4); }
    void u64(std::uint64_t v) { bytes(v, 8); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void vec(const Eigen::VectorXd& v) {
        u64(static_cast<std::uint64_t>(v.size()));
        for (double x : v) f64(x);
    }
    void str(const std::string& s) {
        u64(s.size());
        os_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

private:
    void bytes(std::uint64_t v, int count) {
        char buf[8];
        for (int i = 0; i < count; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
        os_.write(buf, count);
    }
    std::ostream& os_;
};

class Reader {
public:
    explicit Reader(std::istream& is) : is_(is) {}
    std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
    std::uint64_t u64() { return bytes(8); }
    double f64() { return std::bit_cast<double>(u64()); }
    Eigen::VectorXd vec(Eigen::Index expected) {
        const auto n = static_cast<Eigen::Index>(u64());
        if (n != expected) throw FormatError("checkpoint: parameter block has unexpected length");
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = f64();
        return v;
    }
    std::string str() {
        const std::uint64_t n = u64();
        if (n > (1u << 20)) throw FormatError("checkpoint: string field too long");
        std::string s(n, '\0');
        read(s.data(), n);
        return s;
    }
    void read(char* dst, std::size_t n) {
        is_.read(dst, static_cast<std::streamsize>(n));
        if (!is_) throw FormatError("checkpoint: truncated file");
    }

private:
    std::uint64_t bytes(int count) {
        unsigned char buf[8];
        read(reinterpret_cast<char*>(buf), static_cast<std::size_t>(count));
        std::uint64_t v = 0;
        for (int i = 0; i < count; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        return v;
    }
    std::istream& is_;
};

}  // namespace

void C51Agent::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint '" + path + "'");
    Writer w(os);
    os.write(kMagic.data(), kMagic.size());
    w.u32(kFormatVersion);

    const NetShape& s = online_.shape();
    w.u32(3);  // layers, each as (out, in)
    w.u64(static_cast<std::uint64_t>(s.hidden1));
    w.u64(static_cast<std::uint64_t>(s.input));
    w.u64(static_cast<std::uint64_t>(s.hidden2));
    w.u64(static_cast<std::uint64_t>(s.hidden1));
    w.u64(static_cast<std::uint64_t>(s.outputs()));
    w.u64(static_cast<std::uint64_t>(s.hidden2));
    w.u64(static_cast<std::uint64_t>(s.num_actions));
    w.u64(static_cast<std::uint64_t>(s.num_atoms));

    w.f64(config_.support.v_min);
    w.f64(config_.support.v_max);
    w.f64(config_.discount);
    w.u64(config_.batch_size);
    w.u64(config_.buffer_capacity);
    w.u64(config_.target_period);
    w.f64(config_.adam.learning_rate);
    w.f64(config_.adam.beta1);
    w.f64(config_.adam.beta2);
    w.f64(config_.adam.epsilon);

    w.vec(online_.params());
    w.vec(target_.params());
    w.vec(adam_.m);
    w.vec(adam_.v);
    w.u64(adam_.step);
    w.u64(gradient_updates_);
    w.u64(target_syncs_);

    std::ostringstream rng_text;
    rng_text << rng_;
    w.str(rng_text.str());
    if (!os) throw IoError("failed writing checkpoint '" + path + "'");
}

C51Agent C51Agent::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint '" + path + "'");
    Reader r(is);
    std::array<char, 8> magic{};
    r.read(magic.data(), magic.size());
    if (magic != kMagic) throw FormatError("'" + path + "' is not a C51 checkpoint");
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    if (r.u32() != 3) throw FormatError("checkpoint: expected three layers");

    NetShape s;
    s.hidden1 = static_cast<Eigen::Index>(r.u64());
    s.input = static_cast<Eigen::Index>(r.u64());
    s.hidden2 = static_cast<Eigen::Index>(r.u64());
    if (static_cast<Eigen::Index>(r.u64()) != s.hidden1) throw FormatError("checkpoint: inconsistent layer shapes");
    const auto outputs = static_cast<Eigen::Index>(r.u64());
    if (static_cast<Eigen::Index>(r.u64()) != s.hidden2) throw FormatError("checkpoint: inconsistent layer shapes");
    s.num_actions = static_cast<Eigen::Index>(r.u64());
    s.num_atoms = static_cast<Eigen::Index>(r.u64());
    if (s.num_actions * s.num_atoms != outputs) throw FormatError("checkpoint: output layer does not match atoms");

    C51Config cfg;
    cfg.hidden1 = s.hidden1;
    cfg.hidden2 = s.hidden2;
    cfg.support.num_atoms = static_cast<int>(s.num_atoms);
    cfg.support.v_min = r.f64();
    cfg.support.v_max = r.f64();
    cfg.discount = r.f64();
    cfg.batch_size = r.u64();
    cfg.buffer_capacity = r.u64();
    cfg.target_period = r.u64();
    cfg.adam.learning_rate = r.f64();
    cfg.adam.beta1 = r.f64();
    cfg.adam.beta2 = r.f64();
    cfg.adam.epsilon = r.f64();
    cfg.support.validate();

    QNetwork online(s), target(s);
    online.params() = r.vec(s.param_count());
    target.params() = r.vec(s.param_count());
    AdamState adam(s.param_count(), cfg.adam);
    adam.m = r.vec(s.param_count());
    adam.v = r.vec(s.param_count());
    adam.step = r.u64();
    const std::uint64_t updates = r.u64();
    const std::uint64_t syncs = r.u64();
    std::istringstream rng_text(r.str());
    std::mt19937_64 rng;
    rng_text >> rng;
    if (!rng_text) throw FormatError("checkpoint: corrupt RNG state");

    C51Agent agent(cfg, std::move(online), std::move(target), std::move(adam), rng);
    agent.gradient_updates_ = updates;
    agent.target_syncs_ = syncs;
    return agent;
}

}  // namespace plume_scout::agent
