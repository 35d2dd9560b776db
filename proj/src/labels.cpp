#include "labels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "csv.hpp"
#include "oracles.hpp"

namespace relugd {

LabelModel LabelModel::gaussian_noise(double std_dev) {
    LabelModel m;
    m.kind = Kind::AdditiveNoise;
    m.noise_kind = NoiseKind::GaussianNoise;
    m.noise_param = std_dev;
    return m;
}

LabelModel LabelModel::uniform_noise(double half_width) {
    LabelModel m;
    m.kind = Kind::AdditiveNoise;
    m.noise_kind = NoiseKind::UniformBounded;
    m.noise_param = half_width;
    return m;
}

std::string LabelModel::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Realizable: os << "realizable"; break;
        case Kind::AdditiveNoise:
            os << (noise_kind == NoiseKind::GaussianNoise ? "gauss_noise(s=" : "uniform_noise(a=")
               << noise_param << ")";
            break;
        case Kind::MisspecifiedTeacher: os << "misspecified(p=" << mix_prob << ")"; break;
        case Kind::RegionFlip:
            os << "region_flip(r=" << flip_radius << ",m=" << flip_magnitude << ")";
            break;
    }
    if (clip_bound) os << "|clip=" << *clip_bound;
    return os.str();
}

void Instance::validate() const {
    if (teacher.dim() != marginal.dim)
        throw std::invalid_argument("Instance: teacher dimension does not match marginal");
    if (!teacher.finite()) throw std::invalid_argument("Instance: teacher must be finite");
    if (!hypothesis_set.contains(teacher))
        throw std::invalid_argument("Instance: teacher must lie in the hypothesis set");
    if (label_model.kind == LabelModel::Kind::MisspecifiedTeacher &&
        label_model.v_alt.dim() != marginal.dim)
        throw std::invalid_argument("Instance: v_alt dimension does not match marginal");
}

double draw_label(const Instance& instance, std::span<const double> x_tilde, Rng& rng) {
    const LabelModel& m = instance.label_model;
    double y;
    switch (m.kind) {
        case LabelModel::Kind::Realizable:
            y = relu(affine_eval(instance.teacher, x_tilde));
            break;
        case LabelModel::Kind::AdditiveNoise: {
            const double xi = (m.noise_kind == NoiseKind::GaussianNoise)
                                  ? m.noise_param * rng.normal()
                                  : rng.uniform(-m.noise_param, m.noise_param);
            y = relu(affine_eval(instance.teacher, x_tilde)) + xi;
            break;
        }
        case LabelModel::Kind::MisspecifiedTeacher: {
            const bool alt = rng.uniform() < m.mix_prob;
            y = relu(affine_eval(alt ? m.v_alt : instance.teacher, x_tilde));
            break;
        }
        case LabelModel::Kind::RegionFlip: {
            double n2 = 0.0;
            for (double x : x_tilde) n2 += x * x;
            const double base = relu(affine_eval(instance.teacher, x_tilde));
            y = base * (n2 <= m.flip_radius * m.flip_radius ? 1.0 - m.flip_magnitude : 1.0);
            break;
        }
        default:
            throw std::logic_error("unknown label model");
    }
    if (m.clip_bound) y = std::clamp(y, -*m.clip_bound, *m.clip_bound);
    return y;
}

Dataset generate_dataset(const Instance& instance, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_dataset: n >= 1 required");
    instance.validate();
    Dataset data;
    data.d = instance.marginal.dim;
    data.x.resize(n * data.d);
    data.y.resize(n);
    MarginalSampler sampler(instance.marginal, derive_seed(seed, {0x7a}));
    Rng label_rng(derive_seed(seed, {0x7b}));
    for (std::size_t i = 0; i < n; ++i) {
        std::span<double> row{data.x.data() + i * data.d, data.d};
        sampler.draw_row(row);
        data.y[i] = draw_label(instance, row, label_rng);
    }
    return data;
}

std::string dataset_csv(const Instance& instance, const Dataset& data, std::uint64_t seed) {
    std::ostringstream os;
    os << "# d=" << data.d << " seed=" << seed
       << " label_model=" << instance.label_model.describe() << "\n";
    for (std::size_t j = 0; j < data.d; ++j) os << "x_" << (j + 1) << ',';
    os << "y\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.d; ++j) os << fmt17(data.x[i * data.d + j]) << ',';
        os << fmt17(data.y[i]) << "\n";
    }
    return os.str();
}

OptReference opt_reference(const Instance& instance) {
    const LabelModel& m = instance.label_model;
    const bool exact = is_v_optimal_for(instance);
    OptReference ref;
    if (exact) {
        ref.mode = OptReference::Mode::Exact;
        if (m.kind == LabelModel::Kind::Realizable) {
            ref.value = 0.0;
        } else {
            // L(w) = F(w) + E[xi^2]/2, so OPT = Var(xi)/2
            const double var = (m.noise_kind == NoiseKind::GaussianNoise)
                                   ? m.noise_param * m.noise_param
                                   : m.noise_param * m.noise_param / 3.0;
            ref.value = 0.5 * var;
        }
        return ref;
    }
    ref.mode = OptReference::Mode::UpperBound;
    const auto mc = mc_loss(instance.teacher, instance, 1000000,
                            derive_seed(0x09f7u, {instance.marginal.dim}));
    ref.value = mc.estimate;
    ref.std_err = mc.std_err;
    return ref;
}

bool is_v_optimal_for(const Instance& instance) {
    const LabelModel& m = instance.label_model;
    if (m.clip_bound) return false;  // clipping breaks noise independence
    return m.kind == LabelModel::Kind::Realizable || m.kind == LabelModel::Kind::AdditiveNoise;
}

} // namespace relugd
