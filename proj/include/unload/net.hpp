#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "unload/image.hpp"

namespace unload {

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NetConfig {
    int channels = 3;
    int height = 64;
    int width = 64;
    std::vector<int> hidden_sizes = {256, 256};
    int num_critics = 2;
    uint64_t seed = 0;

    int input_size() const { return channels * height * width; }
    int output_size() const { return height * width; }  // one Q value per pixel

    void validate() const;
    bool operator==(const NetConfig&) const = default;
};

// Per-pixel value map, row-major pixel order.
struct QMap {
    int height = 0;
    int width = 0;
    Eigen::VectorXd values;
};

struct Dense {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
};

struct DenseGrad {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
};

// One training sample: observation, taken action (flat pixel index), TD target.
struct UpdateBatch {
    std::vector<const Observation*> observations;
    std::vector<int> actions;
    std::vector<double> targets;

    size_t size() const { return observations.size(); }
};

// Shared-trunk critic ensemble: hidden layers with ReLU feed K linear heads,
// each emitting one Q value per pixel. Target copies track the online
// parameters through Polyak averaging and are the only parameters read by
// action selection and TD targets.
class CriticEnsemble {
public:
    explicit CriticEnsemble(const NetConfig& config);

    const NetConfig& config() const { return config_; }

    // K per-pixel Q maps for a single observation.
    std::vector<QMap> forward(const Observation& obs, bool use_target) const;

    // y = r when terminal, else r + gamma * max_pixel min_critic of the
    // target ensemble evaluated on next_obs.
    double td_target(double reward, const Observation& next_obs, bool terminal,
                     double gamma) const;

    // Batched variant used by the trainer; one GEMM over the whole batch.
    std::vector<double> td_targets(const std::vector<const Observation*>& next_obs,
                                   const std::vector<double>& rewards,
                                   const std::vector<uint8_t>& terminals,
                                   double gamma) const;

    struct Gradients {
        std::vector<DenseGrad> trunk;
        std::vector<DenseGrad> heads;
        std::vector<double> per_critic_loss;  // pre-update MSE per critic
        double total_loss = 0.0;
    };

    // Analytic gradients of the summed per-critic MSE at the taken action
    // pixels; trunk gradients accumulate across all K heads.
    Gradients compute_gradients(const UpdateBatch& batch) const;

    // Loss only, same path as compute_gradients; used by finite differences.
    double total_loss(const UpdateBatch& batch) const;

    // One Adam step per critic on the shared batch. Returns per-critic
    // pre-update losses. Throws NumericalError on non-finite gradients.
    std::vector<double> update(const UpdateBatch& batch, double learning_rate);

    // target <- (1 - zeta) * target + zeta * online, elementwise.
    void polyak_update(double zeta);

    void save(const std::string& path) const;
    static CriticEnsemble load(const std::string& path);

    // Online parameters flattened in declaration order (trunk then heads);
    // used by the finite-difference oracle.
    Eigen::VectorXd flatten_params() const;
    void set_params(const Eigen::VectorXd& flat);
    Eigen::VectorXd flatten_target_params() const;

    const std::vector<Dense>& trunk() const { return trunk_; }
    const std::vector<Dense>& heads() const { return heads_; }
    const std::vector<Dense>& target_trunk() const { return target_trunk_; }
    const std::vector<Dense>& target_heads() const { return target_heads_; }

    // Observation -> input vector, channel-major then row-major pixels.
    Eigen::VectorXd to_input(const Observation& obs) const;

private:
    struct AdamState {
        Eigen::MatrixXd m_weight, v_weight;
        Eigen::VectorXd m_bias, v_bias;
    };

    Eigen::MatrixXd batch_inputs(const std::vector<const Observation*>& obs) const;
    // Trunk forward on an input matrix (input_size x N); returns the top
    // activation (last hidden x N) and optionally the pre-activations.
    Eigen::MatrixXd trunk_forward(const Eigen::MatrixXd& x, const std::vector<Dense>& trunk,
                                  std::vector<Eigen::MatrixXd>* activations) const;
    void adam_step(Dense& param, const DenseGrad& grad, AdamState& state, double lr);

    NetConfig config_;
    std::vector<Dense> trunk_;
    std::vector<Dense> heads_;
    std::vector<Dense> target_trunk_;
    std::vector<Dense> target_heads_;
    std::vector<AdamState> adam_trunk_;
    std::vector<AdamState> adam_heads_;
    long adam_steps_ = 0;
};

// Element-wise minimum across K maps of equal shape.
QMap min_over_critics(const std::vector<QMap>& maps);

// y = r when terminal, else r + gamma * max_pixel of min_over_critics(maps).
double td_target_from_qmaps(double reward, double gamma, bool terminal,
                            const std::vector<QMap>& next_qmaps);

}  // namespace unload
