#include "difmaml/model.hpp"

#include <cmath>

#include "difmaml/errors.hpp"
#include "difmaml/rng.hpp"

namespace difmaml::model {

int ModelSpec::param_count() const {
    int m = 0;
    for (int l = 0; l < layer_count(); ++l)
        m += (layer_sizes[l] + 1) * layer_sizes[l + 1];
    return m;
}

int ModelSpec::weight_offset(int l) const {
    int off = 0;
    for (int i = 0; i < l; ++i) off += (layer_sizes[i] + 1) * layer_sizes[i + 1];
    return off;
}

int ModelSpec::bias_offset(int l) const {
    return weight_offset(l) + layer_sizes[l] * layer_sizes[l + 1];
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    ParamVector w(static_cast<std::size_t>(spec.param_count()), 0.0);
    RngStream rng(SeedKey{seed});
    for (int l = 0; l < spec.layer_count(); ++l) {
        const int fan_in = spec.layer_sizes[l];
        const int fan_out = spec.layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        double* wl = w.data() + spec.weight_offset(l);
        for (int i = 0; i < fan_in * fan_out; ++i) wl[i] = rng.uniform(-limit, limit);
        // biases stay zero
    }
    return w;
}

std::vector<double> forward(const ModelSpec& spec, const ParamVector& w,
                            std::span<const double> x) {
    if (static_cast<int>(x.size()) != spec.input_dim())
        throw DimensionMismatch("model input dimension mismatch");
    if (static_cast<int>(w.size()) != spec.param_count())
        throw DimensionMismatch("parameter count mismatch");

    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    for (int l = 0; l < spec.layer_count(); ++l) {
        const int in = spec.layer_sizes[l];
        const int out = spec.layer_sizes[l + 1];
        const double* wl = w.data() + spec.weight_offset(l);
        const double* bl = w.data() + spec.bias_offset(l);
        next.assign(static_cast<std::size_t>(out), 0.0);
        for (int i = 0; i < out; ++i) {
            const double* row = wl + static_cast<std::size_t>(i) * in;
            double s = bl[i];
            for (int j = 0; j < in; ++j) s += row[j] * cur[j];
            next[static_cast<std::size_t>(i)] = s;
        }
        const bool last = l == spec.layer_count() - 1;
        if (!last && spec.activation == Activation::relu)
            for (double& v : next) v = v > 0.0 ? v : 0.0;
        cur.swap(next);
    }
    return cur;
}

double mse_loss(const ModelSpec& spec, const ParamVector& w,
                const autodiff::DataBatch& batch) {
    if (batch.count <= 0) throw DimensionMismatch("empty batch");
    double total = 0.0;
    for (int s = 0; s < batch.count; ++s) {
        auto pred = forward(spec, w, batch.input(s));
        auto y = batch.target(s);
        double e = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred[i] - y[i];
            e += d * d;
        }
        total += e;
    }
    return total / batch.count;
}

autodiff::NodeId MlpMseLoss::build(autodiff::Tape& tape, autodiff::NodeId w,
                                   const autodiff::DataBatch& batch) const {
    if (batch.input_dim != spec_.input_dim() || batch.target_dim != spec_.output_dim())
        throw DimensionMismatch("batch shape does not match model spec");

    std::vector<autodiff::NodeId> per_sample;
    per_sample.reserve(static_cast<std::size_t>(batch.count));
    for (int s = 0; s < batch.count; ++s) {
        autodiff::NodeId h = tape.constant(batch.input(s));
        for (int l = 0; l < spec_.layer_count(); ++l) {
            h = tape.affine_params(h, spec_.weight_offset(l), spec_.bias_offset(l),
                                   spec_.layer_sizes[l + 1], spec_.layer_sizes[l]);
            const bool last = l == spec_.layer_count() - 1;
            if (!last && spec_.activation == Activation::relu) h = tape.relu(h);
        }
        autodiff::NodeId err = tape.sub(h, tape.constant(batch.target(s)));
        per_sample.push_back(tape.sum_sq(err));
    }
    return tape.mean_scalars(per_sample);
}

}  // namespace difmaml::model
