#pragma once

#include <string>

#include "odernn/tape.hpp"

namespace odernn {

/// Gated recurrent unit cell.
///
///   z = sigmoid(x Wz + h Uz + bz)
///   r = sigmoid(x Wr + h Ur + br)
///   c = tanh(x Wc + (r o h) Uc + bc)
///   h' = (1 - z) o h + z o c
struct GruCell {
    int input_size = 0;
    int hidden_size = 0;
    Parameter* w_z = nullptr;
    Parameter* u_z = nullptr;
    Parameter* b_z = nullptr;
    Parameter* w_r = nullptr;
    Parameter* u_r = nullptr;
    Parameter* b_r = nullptr;
    Parameter* w_c = nullptr;
    Parameter* u_c = nullptr;
    Parameter* b_c = nullptr;

    static GruCell create(ParameterSet& params, const std::string& prefix, int input_size,
                          int hidden_size, Rng& rng) {
        GruCell cell;
        cell.input_size = input_size;
        cell.hidden_size = hidden_size;
        const auto in = static_cast<std::size_t>(input_size);
        const auto h = static_cast<std::size_t>(hidden_size);
        auto weights = [&](const char* name, std::size_t r, std::size_t c) -> Parameter* {
            return &params.add(prefix + "." + name, uniform_init(r, c, h, rng));
        };
        cell.w_z = weights("w_z", in, h);
        cell.u_z = weights("u_z", h, h);
        cell.b_z = weights("b_z", 1, h);
        cell.w_r = weights("w_r", in, h);
        cell.u_r = weights("u_r", h, h);
        cell.b_r = weights("b_r", 1, h);
        cell.w_c = weights("w_c", in, h);
        cell.u_c = weights("u_c", h, h);
        cell.b_c = weights("b_c", 1, h);
        return cell;
    }

    /// One cell update; x is B x input_size, h is B x hidden_size.
    Var step(Tape& t, Var h, Var x) const {
        const Matrix& xv = t.value(x);
        const Matrix& hv = t.value(h);
        if (static_cast<int>(xv.cols) != input_size ||
            static_cast<int>(hv.cols) != hidden_size || xv.rows != hv.rows) {
            throw DimensionError("gru step: got x " + xv.shape_str() + ", h " + hv.shape_str() +
                                 " for cell " + std::to_string(input_size) + "->" +
                                 std::to_string(hidden_size));
        }
        Var z = t.sigmoid(t.add(t.add(t.matmul(x, t.param(*w_z)), t.matmul(h, t.param(*u_z))),
                                t.param(*b_z)));
        Var r = t.sigmoid(t.add(t.add(t.matmul(x, t.param(*w_r)), t.matmul(h, t.param(*u_r))),
                                t.param(*b_r)));
        Var c = t.tanh(t.add(
            t.add(t.matmul(x, t.param(*w_c)), t.matmul(t.mul(r, h), t.param(*u_c))),
            t.param(*b_c)));
        // (1 - z) o h + z o c, written as h + z o (c - h)
        return t.add(h, t.mul(z, t.sub(c, h)));
    }
};

/// Prediction head: a single linear map hidden -> output.
struct OutputNet {
    int hidden_size = 0;
    int output_size = 0;
    Parameter* w = nullptr;
    Parameter* b = nullptr;

    static OutputNet create(ParameterSet& params, const std::string& prefix, int hidden_size,
                            int output_size, Rng& rng) {
        OutputNet net;
        net.hidden_size = hidden_size;
        net.output_size = output_size;
        const auto h = static_cast<std::size_t>(hidden_size);
        const auto o = static_cast<std::size_t>(output_size);
        net.w = &params.add(prefix + ".w", uniform_init(h, o, h, rng));
        net.b = &params.add(prefix + ".b", uniform_init(1, o, h, rng));
        return net;
    }

    Var apply(Tape& t, Var h) const {
        return t.add(t.matmul(h, t.param(*w)), t.param(*b));
    }
};

}  // namespace odernn
