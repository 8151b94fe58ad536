#include "unload/net.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "unload/rng.hpp"

namespace unload {

namespace {

constexpr char kMagic[8] = {'U', 'N', 'L', 'D', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

Dense init_dense(int out, int in, Rng& rng) {
    // fan-in scaled uniform
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    Dense d;
    d.weight.resize(out, in);
    d.bias.resize(out);
    for (int r = 0; r < out; ++r) {
        for (int c = 0; c < in; ++c) d.weight(r, c) = rng.uniform(-scale, scale);
    }
    for (int r = 0; r < out; ++r) d.bias(r) = rng.uniform(-scale, scale);
    return d;
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) {
        throw NumericalError(std::string("non-finite values in ") + what);
    }
}

template <typename Writer>
void for_each_param(const std::vector<Dense>& layers, Writer&& fn) {
    for (const auto& layer : layers) {
        fn(layer.weight);
        fn(layer.bias);
    }
}

}  // namespace

void NetConfig::validate() const {
    if (channels <= 0 || height <= 0 || width <= 0) {
        throw std::invalid_argument("input dims must be positive");
    }
    if (num_critics < 1) {
        throw std::invalid_argument("need at least one critic");
    }
    for (int h : hidden_sizes) {
        if (h <= 0) throw std::invalid_argument("hidden sizes must be positive");
    }
    if (hidden_sizes.empty()) {
        throw std::invalid_argument("need at least one hidden layer");
    }
}

CriticEnsemble::CriticEnsemble(const NetConfig& config) : config_(config) {
    config_.validate();
    Rng rng(derive_seed(config_.seed, "net-init"));
    int in = config_.input_size();
    for (int h : config_.hidden_sizes) {
        trunk_.push_back(init_dense(h, in, rng));
        in = h;
    }
    for (int k = 0; k < config_.num_critics; ++k) {
        heads_.push_back(init_dense(config_.output_size(), in, rng));
    }
    target_trunk_ = trunk_;
    target_heads_ = heads_;

    auto zero_state = [](const Dense& d) {
        AdamState s;
        s.m_weight = Eigen::MatrixXd::Zero(d.weight.rows(), d.weight.cols());
        s.v_weight = s.m_weight;
        s.m_bias = Eigen::VectorXd::Zero(d.bias.size());
        s.v_bias = s.m_bias;
        return s;
    };
    for (const auto& d : trunk_) adam_trunk_.push_back(zero_state(d));
    for (const auto& d : heads_) adam_heads_.push_back(zero_state(d));
}

Eigen::VectorXd CriticEnsemble::to_input(const Observation& obs) const {
    if (obs.height != config_.height || obs.width != config_.width) {
        throw std::invalid_argument("observation shape mismatch");
    }
    const int plane = config_.height * config_.width;
    Eigen::VectorXd x(config_.input_size());
    for (int p = 0; p < plane; ++p) {
        for (int c = 0; c < 3; ++c) {
            x(c * plane + p) = obs.rgb[static_cast<size_t>(p) * 3 + c] / 255.0;
        }
    }
    return x;
}

Eigen::MatrixXd CriticEnsemble::batch_inputs(
    const std::vector<const Observation*>& obs) const {
    Eigen::MatrixXd x(config_.input_size(), static_cast<Eigen::Index>(obs.size()));
    for (size_t i = 0; i < obs.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = to_input(*obs[i]);
    return x;
}

Eigen::MatrixXd CriticEnsemble::trunk_forward(const Eigen::MatrixXd& x,
                                              const std::vector<Dense>& trunk,
                                              std::vector<Eigen::MatrixXd>* activations) const {
    Eigen::MatrixXd a = x;
    if (activations) activations->push_back(a);
    for (const auto& layer : trunk) {
        a = ((layer.weight * a).colwise() + layer.bias).cwiseMax(0.0);
        if (activations) activations->push_back(a);
    }
    return a;
}

std::vector<QMap> CriticEnsemble::forward(const Observation& obs, bool use_target) const {
    const auto& trunk = use_target ? target_trunk_ : trunk_;
    const auto& heads = use_target ? target_heads_ : heads_;
    const Eigen::MatrixXd h = trunk_forward(to_input(obs), trunk, nullptr);
    std::vector<QMap> maps;
    maps.reserve(heads.size());
    for (const auto& head : heads) {
        QMap q;
        q.height = config_.height;
        q.width = config_.width;
        q.values = head.weight * h + head.bias;
        check_finite(q.values, "Q map");
        maps.push_back(std::move(q));
    }
    return maps;
}

QMap min_over_critics(const std::vector<QMap>& maps) {
    if (maps.empty()) throw std::invalid_argument("min_over_critics needs >= 1 map");
    QMap out = maps.front();
    for (size_t k = 1; k < maps.size(); ++k) {
        if (maps[k].values.size() != out.values.size()) {
            throw std::invalid_argument("Q map shape mismatch");
        }
        out.values = out.values.cwiseMin(maps[k].values);
    }
    return out;
}

double td_target_from_qmaps(double reward, double gamma, bool terminal,
                            const std::vector<QMap>& next_qmaps) {
    if (terminal) return reward;
    return reward + gamma * min_over_critics(next_qmaps).values.maxCoeff();
}

double CriticEnsemble::td_target(double reward, const Observation& next_obs, bool terminal,
                                 double gamma) const {
    if (terminal) return reward;  // skip the forward pass entirely
    return td_target_from_qmaps(reward, gamma, false, forward(next_obs, /*use_target=*/true));
}

std::vector<double> CriticEnsemble::td_targets(
    const std::vector<const Observation*>& next_obs, const std::vector<double>& rewards,
    const std::vector<uint8_t>& terminals, double gamma) const {
    const size_t n = next_obs.size();
    std::vector<double> out(n);
    std::vector<const Observation*> boot;
    std::vector<size_t> boot_index;
    for (size_t i = 0; i < n; ++i) {
        if (terminals[i]) {
            out[i] = rewards[i];
        } else {
            boot.push_back(next_obs[i]);
            boot_index.push_back(i);
        }
    }
    if (boot.empty()) return out;

    const Eigen::MatrixXd h = trunk_forward(batch_inputs(boot), target_trunk_, nullptr);
    Eigen::MatrixXd min_q;
    for (const auto& head : target_heads_) {
        Eigen::MatrixXd q = (head.weight * h).colwise() + head.bias;
        check_finite(q, "target Q map");
        min_q = min_q.size() == 0 ? std::move(q) : min_q.cwiseMin(q).eval();
    }
    for (size_t j = 0; j < boot.size(); ++j) {
        out[boot_index[j]] =
            rewards[boot_index[j]] + gamma * min_q.col(static_cast<Eigen::Index>(j)).maxCoeff();
    }
    return out;
}

CriticEnsemble::Gradients CriticEnsemble::compute_gradients(const UpdateBatch& batch) const {
    const size_t n = batch.size();
    if (n == 0) throw std::invalid_argument("empty batch");
    if (batch.actions.size() != n || batch.targets.size() != n) {
        throw std::invalid_argument("batch field length mismatch");
    }
    for (double y : batch.targets) {
        if (!std::isfinite(y)) throw NumericalError("non-finite TD target");
    }

    std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts[i] = post-ReLU of trunk layer i
    const Eigen::MatrixXd x = batch_inputs(batch.observations);
    trunk_forward(x, trunk_, &acts);
    const Eigen::MatrixXd& top = acts.back();

    Gradients grads;
    grads.per_critic_loss.assign(heads_.size(), 0.0);
    for (const auto& head : heads_) {
        grads.heads.push_back({Eigen::MatrixXd::Zero(head.weight.rows(), head.weight.cols()),
                               Eigen::VectorXd::Zero(head.bias.size())});
    }
    for (const auto& layer : trunk_) {
        grads.trunk.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                               Eigen::VectorXd::Zero(layer.bias.size())});
    }

    // Heads: the loss reads Q only at the taken action pixel, so the output
    // delta is one-hot and only that head row receives weight gradient.
    Eigen::MatrixXd top_delta = Eigen::MatrixXd::Zero(top.rows(), top.cols());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (size_t k = 0; k < heads_.size(); ++k) {
        const auto& head = heads_[k];
        auto& head_grad = grads.heads[k];
        for (size_t i = 0; i < n; ++i) {
            const int a = batch.actions[i];
            if (a < 0 || a >= config_.output_size()) {
                throw std::invalid_argument("action pixel out of range");
            }
            const auto col = top.col(static_cast<Eigen::Index>(i));
            const double q = head.weight.row(a).dot(col) + head.bias(a);
            const double residual = q - batch.targets[i];
            grads.per_critic_loss[k] += residual * residual * inv_n;
            const double delta = 2.0 * residual * inv_n;
            head_grad.weight.row(a) += delta * col.transpose();
            head_grad.bias(a) += delta;
            top_delta.col(static_cast<Eigen::Index>(i)) += delta * head.weight.row(a).transpose();
        }
        grads.total_loss += grads.per_critic_loss[k];
    }

    // Trunk backward; shared gradients already accumulated across heads.
    Eigen::MatrixXd delta = std::move(top_delta);
    for (int l = static_cast<int>(trunk_.size()) - 1; l >= 0; --l) {
        delta.array() *= (acts[l + 1].array() > 0.0).cast<double>();
        grads.trunk[l].weight = delta * acts[l].transpose();
        grads.trunk[l].bias = delta.rowwise().sum();
        if (l > 0) delta = (trunk_[l].weight.transpose() * delta).eval();
    }
    return grads;
}

double CriticEnsemble::total_loss(const UpdateBatch& batch) const {
    const size_t n = batch.size();
    const Eigen::MatrixXd x = batch_inputs(batch.observations);
    const Eigen::MatrixXd top = trunk_forward(x, trunk_, nullptr);
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (const auto& head : heads_) {
        for (size_t i = 0; i < n; ++i) {
            const double q = head.weight.row(batch.actions[i]).dot(top.col(static_cast<Eigen::Index>(i))) +
                             head.bias(batch.actions[i]);
            const double residual = q - batch.targets[i];
            loss += residual * residual * inv_n;
        }
    }
    return loss;
}

void CriticEnsemble::adam_step(Dense& param, const DenseGrad& grad, AdamState& state,
                               double lr) {
    const double t = static_cast<double>(adam_steps_);
    const double correction1 = 1.0 - std::pow(kAdamBeta1, t);
    const double correction2 = 1.0 - std::pow(kAdamBeta2, t);
    state.m_weight = kAdamBeta1 * state.m_weight + (1.0 - kAdamBeta1) * grad.weight;
    state.v_weight = kAdamBeta2 * state.v_weight.array().matrix() +
                     (1.0 - kAdamBeta2) * grad.weight.cwiseProduct(grad.weight);
    param.weight.array() -= lr * (state.m_weight.array() / correction1) /
                            ((state.v_weight.array() / correction2).sqrt() + kAdamEps);
    state.m_bias = kAdamBeta1 * state.m_bias + (1.0 - kAdamBeta1) * grad.bias;
    state.v_bias = kAdamBeta2 * state.v_bias + (1.0 - kAdamBeta2) * grad.bias.cwiseProduct(grad.bias);
    param.bias.array() -= lr * (state.m_bias.array() / correction1) /
                          ((state.v_bias.array() / correction2).sqrt() + kAdamEps);
}

std::vector<double> CriticEnsemble::update(const UpdateBatch& batch, double learning_rate) {
    Gradients grads = compute_gradients(batch);
    for (const auto& g : grads.trunk) {
        check_finite(g.weight, "trunk gradient");
        check_finite(g.bias, "trunk bias gradient");
    }
    for (const auto& g : grads.heads) {
        check_finite(g.weight, "head gradient");
        check_finite(g.bias, "head bias gradient");
    }
    ++adam_steps_;
    for (size_t l = 0; l < trunk_.size(); ++l) {
        adam_step(trunk_[l], grads.trunk[l], adam_trunk_[l], learning_rate);
    }
    for (size_t k = 0; k < heads_.size(); ++k) {
        adam_step(heads_[k], grads.heads[k], adam_heads_[k], learning_rate);
    }
    return grads.per_critic_loss;
}

void CriticEnsemble::polyak_update(double zeta) {
    if (zeta <= 0.0 || zeta > 1.0) throw std::invalid_argument("zeta must be in (0, 1]");
    auto track = [zeta](std::vector<Dense>& target, const std::vector<Dense>& online) {
        for (size_t i = 0; i < target.size(); ++i) {
            target[i].weight = (1.0 - zeta) * target[i].weight + zeta * online[i].weight;
            target[i].bias = (1.0 - zeta) * target[i].bias + zeta * online[i].bias;
        }
    };
    track(target_trunk_, trunk_);
    track(target_heads_, heads_);
}

namespace {

long param_count(const std::vector<Dense>& layers) {
    long n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

void flatten_into(const std::vector<Dense>& layers, Eigen::VectorXd& out, long& pos) {
    for (const auto& l : layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out(pos++) = l.weight(r, c);
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) out(pos++) = l.bias(r);
    }
}

void unflatten_from(std::vector<Dense>& layers, const Eigen::VectorXd& in, long& pos) {
    for (auto& l : layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = in(pos++);
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = in(pos++);
    }
}

}  // namespace

Eigen::VectorXd CriticEnsemble::flatten_params() const {
    Eigen::VectorXd out(param_count(trunk_) + param_count(heads_));
    long pos = 0;
    flatten_into(trunk_, out, pos);
    flatten_into(heads_, out, pos);
    return out;
}

Eigen::VectorXd CriticEnsemble::flatten_target_params() const {
    Eigen::VectorXd out(param_count(target_trunk_) + param_count(target_heads_));
    long pos = 0;
    flatten_into(target_trunk_, out, pos);
    flatten_into(target_heads_, out, pos);
    return out;
}

void CriticEnsemble::set_params(const Eigen::VectorXd& flat) {
    long pos = 0;
    unflatten_from(trunk_, flat, pos);
    unflatten_from(heads_, flat, pos);
    if (pos != flat.size()) throw std::invalid_argument("parameter vector size mismatch");
}

namespace {

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("truncated checkpoint");
    return value;
}

void write_layers(std::ostream& out, const std::vector<Dense>& layers) {
    for_each_param(layers, [&](const auto& p) {
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            for (Eigen::Index c = 0; c < p.cols(); ++c) {
                const double v = p(r, c);
                write_raw(out, v);
            }
        }
    });
}

void read_layers(std::istream& in, std::vector<Dense>& layers) {
    for (auto& layer : layers) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
                layer.weight(r, c) = read_raw<double>(in);
            }
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
            layer.bias(r) = read_raw<double>(in);
        }
    }
}

}  // namespace

void CriticEnsemble::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_raw(out, kVersion);
    write_raw(out, static_cast<int32_t>(config_.channels));
    write_raw(out, static_cast<int32_t>(config_.height));
    write_raw(out, static_cast<int32_t>(config_.width));
    write_raw(out, static_cast<uint32_t>(config_.hidden_sizes.size()));
    for (int h : config_.hidden_sizes) write_raw(out, static_cast<int32_t>(h));
    write_raw(out, static_cast<int32_t>(config_.num_critics));
    write_raw(out, static_cast<uint64_t>(config_.seed));
    write_layers(out, trunk_);
    write_layers(out, heads_);
    write_layers(out, target_trunk_);
    write_layers(out, target_heads_);
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

CriticEnsemble CriticEnsemble::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("bad checkpoint magic: " + path);
    }
    if (read_raw<uint32_t>(in) != kVersion) {
        throw std::runtime_error("unsupported checkpoint version: " + path);
    }
    NetConfig config;
    config.channels = read_raw<int32_t>(in);
    config.height = read_raw<int32_t>(in);
    config.width = read_raw<int32_t>(in);
    const uint32_t n_hidden = read_raw<uint32_t>(in);
    config.hidden_sizes.clear();
    for (uint32_t i = 0; i < n_hidden; ++i) config.hidden_sizes.push_back(read_raw<int32_t>(in));
    config.num_critics = read_raw<int32_t>(in);
    config.seed = read_raw<uint64_t>(in);

    CriticEnsemble ensemble(config);
    read_layers(in, ensemble.trunk_);
    read_layers(in, ensemble.heads_);
    read_layers(in, ensemble.target_trunk_);
    read_layers(in, ensemble.target_heads_);
    return ensemble;
}

}  // namespace unload
