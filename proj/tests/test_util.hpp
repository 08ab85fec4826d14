#pragma once

#include <vector>

#include "sklab/demand.hpp"
#include "sklab/rng.hpp"

namespace sklab::testutil {

// Random small instance generator for property-style suites.
inline DemandDistribution random_distribution(Substream& rng, int max_atoms = 3,
                                              int max_quantity = 3, double max_price = 3.0) {
    const int n = 1 + static_cast<int>(rng.uniform() * max_atoms);
    std::vector<double> weights(n + 1);  // last weight is the no-arrival atom
    double total = 0.0;
    for (auto& w : weights) {
        w = 0.05 + rng.uniform();
        total += w;
    }
    std::vector<DemandAtom> atoms;
    for (int i = 0; i < n; ++i) {
        DemandAtom a;
        // quarter-step prices so ties against thresholds actually happen
        a.price = 0.25 * (1 + static_cast<int>(rng.uniform() * 4.0 * max_price));
        a.quantity = 1 + static_cast<int>(rng.uniform() * max_quantity);
        a.prob = weights[i] / total;
        atoms.push_back(a);
    }
    double atom_mass = 0.0;
    for (const auto& a : atoms) atom_mass += a.prob;
    return DemandDistribution(std::move(atoms), 1.0 - atom_mass);
}

inline MultiDemandDistribution random_multi_distribution(Substream& rng, int dim,
                                                         int max_atoms = 3,
                                                         int max_quantity = 2,
                                                         double max_price = 3.0) {
    const int n = 1 + static_cast<int>(rng.uniform() * max_atoms);
    std::vector<double> weights(n + 1);
    double total = 0.0;
    for (auto& w : weights) {
        w = 0.05 + rng.uniform();
        total += w;
    }
    std::vector<MultiDemandAtom> atoms;
    for (int i = 0; i < n; ++i) {
        MultiDemandAtom a;
        a.price = 0.25 * (1 + static_cast<int>(rng.uniform() * 4.0 * max_price));
        for (int k = 0; k < dim; ++k)
            a.quantities.push_back(1 + static_cast<int>(rng.uniform() * max_quantity));
        a.prob = weights[i] / total;
        atoms.push_back(a);
    }
    double atom_mass = 0.0;
    for (const auto& a : atoms) atom_mass += a.prob;
    return MultiDemandDistribution(dim, std::move(atoms), 1.0 - atom_mass);
}

// The 0.5-Bernoulli unit-demand workhorse instance.
inline DemandDistribution bernoulli_half() {
    return DemandDistribution({{1.0, 1, 0.5}}, 0.5);
}

} // namespace sklab::testutil
