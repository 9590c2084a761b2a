#pragma once

// Random inputs shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "ddsp/lp.hpp"
#include "ddsp/recurrent.hpp"
#include "ddsp/relocation.hpp"

namespace gen {

using namespace ddsp;

// Feasible by construction around a hidden interior point, bounded by a box.
inline LinearProgram random_lp(std::mt19937_64& rng, std::size_t n, std::size_t m) {
    std::uniform_real_distribution<double> coef(-5.0, 5.0), pos(0.1, 3.0), slack(0.0, 2.0);
    LinearProgram lp;
    lp.sense = std::bernoulli_distribution(0.5)(rng) ? ObjectiveSense::Maximize : ObjectiveSense::Minimize;
    std::vector<double> x0(n);
    for (std::size_t j = 0; j < n; ++j) {
        x0[j] = pos(rng);
        const double hi = std::bernoulli_distribution(0.5)(rng) ? x0[j] + pos(rng) : kInf;
        lp.add_variable(coef(rng), 0.0, hi);
    }
    std::vector<std::pair<std::size_t, double>> box;
    for (std::size_t j = 0; j < n; ++j) box.emplace_back(j, 1.0);
    double total = 0;
    for (double v : x0) total += v;
    lp.add_row(box, RowSense::LessEqual, total + 5.0);
    for (std::size_t i = 1; i < m; ++i) {
        std::vector<std::pair<std::size_t, double>> terms;
        double ax = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::bernoulli_distribution(0.3)(rng)) continue;
            const double a = std::round(coef(rng) * 4.0) / 4.0;
            terms.emplace_back(j, a);
            ax += a * x0[j];
        }
        const int kind = std::uniform_int_distribution<int>(0, 5)(rng);
        if (kind == 0) {
            lp.add_row(terms, RowSense::Equal, ax);
        } else if (kind <= 2) {
            lp.add_row(terms, RowSense::GreaterEqual, ax - slack(rng));
        } else {
            lp.add_row(terms, RowSense::LessEqual, ax + slack(rng));
        }
    }
    return lp;
}

inline RelocationInstance random_instance(std::mt19937_64& rng, std::size_t z) {
    std::uniform_int_distribution<int> stock(0, 20);
    std::uniform_real_distribution<double> cost(0.2, 4.0);
    RelocationInstance inst;
    for (std::size_t i = 0; i < z; ++i) inst.initial_stock.push_back(stock(rng));
    inst.move_cost.assign(z * z, 0.0);
    for (std::size_t i = 0; i < z; ++i) {
        for (std::size_t j = 0; j < z; ++j) {
            if (i != j) inst.move_cost[i * z + j] = cost(rng);
        }
    }
    inst.price = std::uniform_real_distribution<double>(3.0, 10.0)(rng);
    inst.penalty = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
    return inst;
}

inline ModelSpec small_spec(CellType cell, HeadKind head, std::size_t zones = 2, std::size_t hidden = 3,
                     std::size_t window = 4) {
    ModelSpec s;
    s.cell = cell;
    s.input_size = zones;
    s.hidden = hidden;
    s.dense = {5, 4};
    s.window = window;
    s.head.kind = head;
    s.head.zones = zones;
    s.head.components = 3;
    return s;
}

inline WindowSet random_windows(std::mt19937_64& rng, const ModelSpec& s, std::size_t n) {
    std::normal_distribution<double> nd(0.0, 1.0);
    WindowSet ws;
    ws.window = s.window;
    for (std::size_t i = 0; i < n; ++i) {
        Window w;
        w.first_day = i;
        for (std::size_t t = 0; t < s.window; ++t) {
            std::vector<double> x(s.input_size);
            for (auto& v : x) v = nd(rng);
            w.inputs.push_back(x);
        }
        w.target.resize(s.head.zones);
        for (auto& v : w.target) v = nd(rng);
        ws.pairs.push_back(w);
    }
    return ws;
}

inline std::vector<double> analytic_gradient(const RecurrentModel& m, const WindowSet& ws, LossKind loss) {
    std::vector<std::size_t> batch(ws.size());
    std::iota(batch.begin(), batch.end(), 0);
    std::vector<double> g(m.parameter_count());
    batch_gradient(m, ws, batch, loss, g);
    return g;
}

inline void perturb_biases(RecurrentModel& m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (const auto& t : m.tensors()) {
        if (t.cols != 1) continue;
        for (std::size_t j = t.offset; j < t.offset + t.size(); ++j) m.parameters()[j] = u(rng);
    }
}

}  // namespace gen
