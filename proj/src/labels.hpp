#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "core.hpp"
#include "marginals.hpp"
#include "rng.hpp"

namespace relugd {

enum class NoiseKind { GaussianNoise, UniformBounded };

struct LabelModel {
    enum class Kind { Realizable, AdditiveNoise, MisspecifiedTeacher, RegionFlip };

    Kind kind = Kind::Realizable;

    // AdditiveNoise
    NoiseKind noise_kind = NoiseKind::GaussianNoise;
    double noise_param = 0.0;  // std for Gaussian, half-width for UniformBounded

    // MisspecifiedTeacher
    WeightVector v_alt;
    double mix_prob = 0.0;

    // RegionFlip: y = relu(v.x) * (1 - flip_magnitude * 1[||x|| <= flip_radius])
    double flip_radius = 0.0;
    double flip_magnitude = 0.0;

    std::optional<double> clip_bound;  // B_Y

    static LabelModel realizable() { return {}; }
    static LabelModel gaussian_noise(double std_dev);
    static LabelModel uniform_noise(double half_width);

    std::string describe() const;
};

struct Instance {
    MarginalSpec marginal;
    WeightVector teacher;
    LabelModel label_model;
    HypothesisSet hypothesis_set;

    void validate() const;
};

// Draw the label for a sampled x_tilde. Consumes rng state even for
// noise-free models so that the sample stream stays aligned across models.
double draw_label(const Instance& instance, std::span<const double> x_tilde, Rng& rng);

Dataset generate_dataset(const Instance& instance, std::size_t n, std::uint64_t seed);

std::string dataset_csv(const Instance& instance, const Dataset& data, std::uint64_t seed);

struct OptReference {
    enum class Mode { Exact, UpperBound };
    Mode mode = Mode::Exact;
    double value = 0.0;
    double std_err = 0.0;  // UpperBound only (MC)
};

// Exact OPT for independent zero-mean additive noise, L(v) upper bound otherwise.
OptReference opt_reference(const Instance& instance);

// True iff the label model leaves v the minimizer of L over H.
bool is_v_optimal_for(const Instance& instance);

} // namespace relugd
