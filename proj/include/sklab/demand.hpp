#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sklab/errors.hpp"

namespace sklab {

inline constexpr double kProbTolerance = 1e-12;

struct DemandAtom {
    double price = 0.0;   // unit offer price, > 0 for a real arrival
    int quantity = 0;     // requested units, >= 1
    double prob = 0.0;
};

// Discrete joint law of (price, quantity). The no-arrival atom is kept
// separate so every atom in `atoms` is a genuine request.
class DemandDistribution {
public:
    DemandDistribution() = default;
    DemandDistribution(std::vector<DemandAtom> atoms, double no_arrival_prob)
        : atoms_(std::move(atoms)), no_arrival_(no_arrival_prob) {
        validate();
    }

    const std::vector<DemandAtom>& atoms() const { return atoms_; }
    double no_arrival_prob() const { return no_arrival_; }

    double arrival_prob() const { return 1.0 - no_arrival_; }

    double max_price() const {
        double m = 0.0;
        for (const auto& a : atoms_) m = std::max(m, a.price);
        return m;
    }

    int max_quantity() const {
        int m = 0;
        for (const auto& a : atoms_) m = std::max(m, a.quantity);
        return m;
    }

    // E[PQ], the full-acceptance revenue rate.
    double mean_pq() const {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.prob * a.price * a.quantity;
        return s;
    }

    // Probability mass of requests larger than the remaining capacity d.
    double theta_tail(int d) const {
        double s = 0.0;
        for (const auto& a : atoms_)
            if (a.quantity > d) s += a.prob;
        return s;
    }

    // g(x) = E[Q (P - x)^+], the quantity-weighted price excess over
    // threshold x. Convex, nonincreasing, zero beyond the top price.
    double loss_g(double x) const {
        double s = 0.0;
        for (const auto& a : atoms_)
            s += a.prob * a.quantity * std::max(a.price - x, 0.0);
        return s;
    }

    // Probability an arrival's unit price clears threshold x, ties accepted.
    double accept_prob(double x) const {
        double s = 0.0;
        for (const auto& a : atoms_)
            if (a.price >= x) s += a.prob;
        return s;
    }

    // Mean price among accepted arrivals at threshold x; 0 if none clear it.
    double mean_accepted_price(double x) const {
        double mass = 0.0, s = 0.0;
        for (const auto& a : atoms_) {
            if (a.price >= x) {
                mass += a.prob;
                s += a.prob * a.price;
            }
        }
        return mass > 0.0 ? s / mass : 0.0;
    }

    bool unit_demand() const {
        return std::all_of(atoms_.begin(), atoms_.end(),
                           [](const DemandAtom& a) { return a.quantity == 1; });
    }

private:
    void validate() {
        double total = no_arrival_;
        for (const auto& a : atoms_) {
            if (a.quantity < 1) throw ValidationError("atom quantity must be >= 1");
            if (a.price < 0.0) throw ValidationError("atom price must be >= 0");
            if (a.prob < 0.0) throw ValidationError("atom probability must be >= 0");
            total += a.prob;
        }
        if (no_arrival_ < 0.0) throw ValidationError("no-arrival probability must be >= 0");
        if (std::abs(total - 1.0) > kProbTolerance)
            throw ValidationError("probabilities sum to " + std::to_string(total) +
                                  ", expected 1");
        // merge duplicate (price, quantity) atoms, keeping first-seen order
        std::vector<DemandAtom> merged;
        for (const auto& a : atoms_) {
            auto it = std::find_if(merged.begin(), merged.end(), [&](const DemandAtom& b) {
                return b.price == a.price && b.quantity == a.quantity;
            });
            if (it == merged.end())
                merged.push_back(a);
            else
                it->prob += a.prob;
        }
        atoms_ = std::move(merged);
    }

    std::vector<DemandAtom> atoms_;
    double no_arrival_ = 1.0;
};

struct MultiDemandAtom {
    double price = 0.0;              // total reward per accepted request
    std::vector<int> quantities;     // one component per capacity axis
    double prob = 0.0;
};

class MultiDemandDistribution {
public:
    MultiDemandDistribution() = default;
    MultiDemandDistribution(int dim, std::vector<MultiDemandAtom> atoms,
                            double no_arrival_prob)
        : dim_(dim), atoms_(std::move(atoms)), no_arrival_(no_arrival_prob) {
        validate();
    }

    int dim() const { return dim_; }
    const std::vector<MultiDemandAtom>& atoms() const { return atoms_; }
    double no_arrival_prob() const { return no_arrival_; }
    double arrival_prob() const { return 1.0 - no_arrival_; }

    double max_price() const {
        double m = 0.0;
        for (const auto& a : atoms_) m = std::max(m, a.price);
        return m;
    }

    std::vector<int> max_quantities() const {
        std::vector<int> m(dim_, 0);
        for (const auto& a : atoms_)
            for (int k = 0; k < dim_; ++k) m[k] = std::max(m[k], a.quantities[k]);
        return m;
    }

    // E[P 1{arrival}], the full-acceptance reward rate.
    double mean_reward() const {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.prob * a.price;
        return s;
    }

    // G(z) = E[(P - sum_k z_k Q^k)^+]: expected reward excess over the
    // marginal-value cost of the requested bundle.
    double multi_G(const std::vector<double>& z) const {
        check_dim(z.size());
        double s = 0.0;
        for (const auto& a : atoms_) {
            double cost = 0.0;
            for (int k = 0; k < dim_; ++k) cost += z[k] * a.quantities[k];
            s += a.prob * std::max(a.price - cost, 0.0);
        }
        return s;
    }

    // P[at least one requested component exceeds its remaining capacity].
    double multi_theta_tail(const std::vector<int>& d) const {
        check_dim(d.size());
        double s = 0.0;
        for (const auto& a : atoms_) {
            for (int k = 0; k < dim_; ++k) {
                if (a.quantities[k] > d[k]) {
                    s += a.prob;
                    break;
                }
            }
        }
        return s;
    }

    // Probability an arrival clears the bundle threshold, ties accepted.
    double multi_accept_prob(const std::vector<double>& z) const {
        check_dim(z.size());
        double s = 0.0;
        for (const auto& a : atoms_) {
            double cost = 0.0;
            for (int k = 0; k < dim_; ++k) cost += z[k] * a.quantities[k];
            if (a.price >= cost) s += a.prob;
        }
        return s;
    }

    // Probability that an accepted arrival consumes component k.
    double component_consume_prob(const std::vector<double>& z, int k) const {
        check_dim(z.size());
        double s = 0.0;
        for (const auto& a : atoms_) {
            double cost = 0.0;
            for (int j = 0; j < dim_; ++j) cost += z[j] * a.quantities[j];
            if (a.price >= cost && a.quantities[k] >= 1) s += a.prob;
        }
        return s;
    }

private:
    void check_dim(std::size_t n) const {
        if (static_cast<int>(n) != dim_)
            throw ValidationError("dimension mismatch: expected " + std::to_string(dim_) +
                                  ", got " + std::to_string(n));
    }

    void validate() {
        if (dim_ < 1) throw ValidationError("dimension must be >= 1");
        double total = no_arrival_;
        for (const auto& a : atoms_) {
            if (static_cast<int>(a.quantities.size()) != dim_)
                throw ValidationError("atom quantity vector has wrong dimension");
            for (int q : a.quantities)
                if (q < 1) throw ValidationError("atom quantity components must be >= 1");
            if (a.price < 0.0) throw ValidationError("atom price must be >= 0");
            if (a.prob < 0.0) throw ValidationError("atom probability must be >= 0");
            total += a.prob;
        }
        if (no_arrival_ < 0.0) throw ValidationError("no-arrival probability must be >= 0");
        if (std::abs(total - 1.0) > kProbTolerance)
            throw ValidationError("probabilities sum to " + std::to_string(total) +
                                  ", expected 1");
    }

    int dim_ = 0;
    std::vector<MultiDemandAtom> atoms_;
    double no_arrival_ = 1.0;
};

// One-dimensional law embedded as an m=1 multi law. The multi reward
// convention is total reward per request, so the embedded price is p*q.
inline MultiDemandDistribution embed_1d(const DemandDistribution& dist) {
    std::vector<MultiDemandAtom> atoms;
    atoms.reserve(dist.atoms().size());
    for (const auto& a : dist.atoms())
        atoms.push_back({a.price * a.quantity, {a.quantity}, a.prob});
    return MultiDemandDistribution(1, std::move(atoms), dist.no_arrival_prob());
}

} // namespace sklab
