#pragma once

#include "laoc/model.hpp"
#include "laoc/policy.hpp"
#include "laoc/priors.hpp"
#include "laoc/safeset.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace laoc {

enum class TrainMode { Pure, Finetune };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);

struct TrainConfig {
    double learning_rate = 5e-4;
    int epochs = 400;
    int batch_size = 20;
    std::uint64_t seed = 7;
    TrainMode mode = TrainMode::Pure;
    /// Safety slack used by finetuning; must be positive in that mode.
    double lambda = 0.0;
    PriorConfig prior;

    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;

    /// Throws InvalidInput.
    void validate() const;
};

/// Loss of one unrolled episode and its gradient with respect to theta.
struct EpisodeGradient {
    double loss = 0.0;
    std::vector<double> grad;
    int binding_rounds = 0;
    /// Binding rounds where d(constraint)/d(rho) was too small to divide by.
    int flat_rounds = 0;
};

/// J_H of the unconstrained policy on one episode, with reverse-mode gradient.
EpisodeGradient pure_episode_gradient(const PolicyNet& net, const Episode& episode,
                                      const SystemParams& params);

/// J_H of LAOC with the linear mapping on one episode. Binding rounds are
/// differentiated through the root of the constraint along the segment
/// (implicit function theorem). Throws InvariantViolation if an executed
/// action is ever unsafe.
EpisodeGradient safe_episode_gradient(const PolicyNet& net, const Episode& episode,
                                      const SystemParams& params, const SafeSetParams& safe,
                                      const PriorConfig& prior);

/// Mean over the selected episodes, summed in the given order.
EpisodeGradient batch_gradient(const PolicyNet& net, const std::vector<Episode>& episodes,
                               std::span<const std::size_t> indices, const SystemParams& params,
                               const SafeSetParams* safe, const PriorConfig& prior);

struct TrainResult {
    PolicyNet net;
    /// Mean batch loss of each epoch.
    std::vector<double> loss_curve;
    int flat_rounds = 0;
};

/// Adam on the mean episode loss. Starts from init, or from Glorot weights
/// seeded by config.seed. Throws TrainingDiverged on a non-finite loss.
TrainResult train_pure(const std::vector<Episode>& episodes, const SystemParams& params,
                       const TrainConfig& config, std::optional<PolicyNet> init = std::nullopt);

/// Adam on the mean loss of the safe actions, starting from init.
TrainResult finetune_safe(PolicyNet init, const std::vector<Episode>& episodes,
                          const SystemParams& params, const SafeSetParams& safe,
                          const TrainConfig& config);

struct PolicyFile {
    PolicyNet net;
    TrainConfig train;
    std::vector<double> loss_curve;
    /// Free-form effective configuration echoed by the writer.
    std::string config_echo;
};

inline constexpr int kPolicyFormatVersion = 1;

/// JSON with an architecture header and the flat parameter vector.
void save_policy(const std::filesystem::path& path, const PolicyFile& file);
/// Throws InvalidInput when the architecture header does not match.
PolicyFile load_policy(const std::filesystem::path& path);

} // namespace laoc
