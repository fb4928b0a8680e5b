#pragma once

#include <functional>
#include <string>

#include "odernn/tape.hpp"

namespace odernn {

/// Maps a hidden-state node h to its time derivative dh/dt on the given tape.
/// The dynamics are autonomous: time is not an input.
using DynamicsFn = std::function<Var(Tape&, Var)>;

/// Learned dynamics: linear H -> 2H, tanh, linear 2H -> H, no output activation.
/// The output layer is scaled down at init so early trajectories stay near
/// constant even over large time jumps.
struct DynamicsNet {
    int hidden = 0;
    int width = 0;
    Parameter* w1 = nullptr;
    Parameter* b1 = nullptr;
    Parameter* w2 = nullptr;
    Parameter* b2 = nullptr;

    static DynamicsNet create(ParameterSet& params, const std::string& prefix, int hidden,
                              Rng& rng) {
        DynamicsNet net;
        net.hidden = hidden;
        net.width = 2 * hidden;
        const auto h = static_cast<std::size_t>(hidden);
        const auto w = static_cast<std::size_t>(net.width);
        net.w1 = &params.add(prefix + ".w1", uniform_init(h, w, h, rng));
        net.b1 = &params.add(prefix + ".b1", uniform_init(1, w, h, rng));
        net.w2 = &params.add(prefix + ".w2", uniform_init(w, h, w, rng, 0.1));
        net.b2 = &params.add(prefix + ".b2", uniform_init(1, h, w, rng, 0.1));
        return net;
    }

    Var apply(Tape& t, Var h) const {
        Var a = t.tanh(t.add(t.matmul(h, t.param(*w1)), t.param(*b1)));
        return t.add(t.matmul(a, t.param(*w2)), t.param(*b2));
    }

    DynamicsFn fn() const {
        return [this](Tape& t, Var h) { return apply(t, h); };
    }
};

}  // namespace odernn
