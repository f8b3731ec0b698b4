#pragma once
// Radio environment simulation: joint primary-user occupancy chain, per-node
// energy statistics, the exact energy-detector LLR, and the noise-only
// threshold rule.

#include <cstdint>
#include <string>
#include <vector>

#include "linbp/factor_graph.hpp"
#include "linbp/rng.hpp"

namespace linbp {

// Joint Markov chain over transmitter state vectors u in {0,1}^pu_count,
// encoded as bitmasks (bit n = transmitter n). Rows are full transition
// distributions.
struct OccupancyChain {
    int pu_count = 0;
    std::vector<std::vector<double>> rows;  // rows[state][next]

    int state_count() const { return 1 << pu_count; }
    void validate() const;  // rows nonnegative, each summing to 1 within 1e-12
};

// Family used by the experiments: each transmitter has marginal on
// probability p_on and on-persistence p_stay; corr in [0,1] mixes
// independent per-transmitter transitions (0) with transitions driven by a
// single shared uniform draw (1, which keeps equal-state transmitters locked
// together). Marginal laws are unaffected by corr.
OccupancyChain make_occupancy_chain(int pu_count, double p_on, double p_stay, double corr);

std::uint32_t step_occupancy(std::uint32_t state, const OccupancyChain& chain, Rng& rng);

struct Scenario {
    FactorGraph graph{1, {}};
    int pu_count = 0;
    // snr_db[node][pu]; NaN encodes "out of range" (zero gain).
    std::vector<std::vector<double>> snr_db;
    std::vector<double> noise_var;
    int samples_per_slot = 100;  // K
    OccupancyChain occupancy_chain;

    // Derived at validation time.
    std::vector<std::vector<double>> snr_linear;   // 0 where unreceivable
    std::vector<std::vector<bool>> receivable;
    std::vector<std::string> warnings;             // e.g. node hears no transmitter

    void validate();  // throws std::invalid_argument on violated invariants

    // sigma^2_rx for one node given the occupancy bitmask.
    double received_power(int node, std::uint32_t u) const;
    bool occupied(int node, std::uint32_t u) const;  // OR over receivable PUs
};

struct SlotRecord {
    std::uint32_t u = 0;                 // transmitter states
    std::vector<std::uint8_t> x;         // per-node ground-truth occupancy
    std::vector<double> gamma;           // per-node energy statistic |y|^2/K
};

// Draws gamma_j as (sigma^2_rx/K) * chi^2_K, i.e. E[gamma] = sigma^2_rx and
// Var[gamma] = 2 sigma^4_rx / K, without materializing waveform samples.
SlotRecord sense_slot(const Scenario& scenario, std::uint32_t u, Rng& rng);

// Exact LLR of the energy statistic under a single Gaussian source:
//   -(K/2) ln(1+rho) + [rho/(1+rho)] * (K*gamma_raw) / (2 sigma_nu^2)
double exact_llr(double energy, double snr, int samples, double noise_var);

// Noise-only threshold with false-alarm target alpha under the Gaussian
// approximation: tau0 = sigma_nu^2 (1 + sqrt(2/K) Qinv(alpha)).
double tau0(double noise_var, int samples, double alpha);

}  // namespace linbp
