#include "linbp/radio_env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "linbp/math.hpp"

namespace linbp {

void OccupancyChain::validate() const {
    if (pu_count < 1 || pu_count > 20)
        throw std::invalid_argument("OccupancyChain: pu_count out of range");
    const int states = state_count();
    if (static_cast<int>(rows.size()) != states)
        throw std::invalid_argument("OccupancyChain: wrong row count");
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != states)
            throw std::invalid_argument("OccupancyChain: wrong row length");
        double sum = 0.0;
        for (double p : row) {
            if (!(p >= 0.0))
                throw std::invalid_argument("OccupancyChain: negative transition probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("OccupancyChain: row does not sum to 1");
    }
}

OccupancyChain make_occupancy_chain(int pu_count, double p_on, double p_stay, double corr) {
    if (!(p_on > 0.0 && p_on < 1.0))
        throw std::invalid_argument("occupancy chain: p_on must lie in (0,1)");
    if (!(p_stay >= 0.0 && p_stay <= 1.0))
        throw std::invalid_argument("occupancy chain: p_stay must lie in [0,1]");
    if (!(corr >= 0.0 && corr <= 1.0))
        throw std::invalid_argument("occupancy chain: corr must lie in [0,1]");
    // Stationarity fixes the off->off probability from (p_on, p_stay).
    const double p_off_to_on = p_on * (1.0 - p_stay) / (1.0 - p_on);
    if (p_off_to_on > 1.0)
        throw std::invalid_argument("occupancy chain: p_on too large for given p_stay");

    OccupancyChain chain;
    chain.pu_count = pu_count;
    const int states = chain.state_count();
    chain.rows.assign(states, std::vector<double>(states, 0.0));

    for (int s = 0; s < states; ++s) {
        // turn-on probability of each transmitter given its current state
        std::vector<double> on_prob(pu_count);
        for (int n = 0; n < pu_count; ++n)
            on_prob[n] = (s >> n & 1) ? p_stay : p_off_to_on;

        for (int next = 0; next < states; ++next) {
            // independent component
            double indep = 1.0;
            for (int n = 0; n < pu_count; ++n)
                indep *= (next >> n & 1) ? on_prob[n] : 1.0 - on_prob[n];

            // locked component: one shared uniform U, transmitter n turns on
            // iff U < on_prob[n]; the next-state event is an interval in U.
            double lo = 0.0, hi = 1.0;
            for (int n = 0; n < pu_count; ++n) {
                if (next >> n & 1)
                    hi = std::min(hi, on_prob[n]);
                else
                    lo = std::max(lo, on_prob[n]);
            }
            const double locked = std::max(0.0, hi - lo);

            chain.rows[s][next] = corr * locked + (1.0 - corr) * indep;
        }
    }
    chain.validate();
    return chain;
}

std::uint32_t step_occupancy(std::uint32_t state, const OccupancyChain& chain, Rng& rng) {
    if (state >= static_cast<std::uint32_t>(chain.state_count()))
        throw std::invalid_argument("step_occupancy: state outside chain state space");
    const auto& row = chain.rows[state];
    const double u = rng.uniform01();
    double cdf = 0.0;
    for (std::size_t next = 0; next < row.size(); ++next) {
        cdf += row[next];
        if (u < cdf)
            return static_cast<std::uint32_t>(next);
    }
    return static_cast<std::uint32_t>(row.size() - 1);
}

void Scenario::validate() {
    const int n = graph.node_count();
    if (pu_count < 1)
        throw std::invalid_argument("Scenario: pu_count must be >= 1");
    if (samples_per_slot < 1)
        throw std::invalid_argument("Scenario: K must be >= 1");
    if (static_cast<int>(noise_var.size()) != n)
        throw std::invalid_argument("Scenario: noise_var size mismatch");
    for (double v : noise_var)
        if (!(v > 0.0))
            throw std::invalid_argument("Scenario: noise_var must be positive");
    if (static_cast<int>(snr_db.size()) != n)
        throw std::invalid_argument("Scenario: snr_db row count mismatch");
    occupancy_chain.validate();
    if (occupancy_chain.pu_count != pu_count)
        throw std::invalid_argument("Scenario: occupancy chain pu_count mismatch");

    snr_linear.assign(n, std::vector<double>(pu_count, 0.0));
    receivable.assign(n, std::vector<bool>(pu_count, false));
    warnings.clear();
    for (int j = 0; j < n; ++j) {
        if (static_cast<int>(snr_db[j].size()) != pu_count)
            throw std::invalid_argument("Scenario: snr_db column count mismatch");
        bool any = false;
        for (int p = 0; p < pu_count; ++p) {
            const double db = snr_db[j][p];
            if (std::isnan(db))
                continue;
            if (!std::isfinite(db))
                throw std::invalid_argument("Scenario: snr_db must be finite or NaN");
            snr_linear[j][p] = std::pow(10.0, db / 10.0);
            receivable[j][p] = true;
            any = true;
        }
        if (!any)
            warnings.push_back("node " + std::to_string(j) +
                               " hears no transmitter; its occupancy is constantly 0");
    }
}

double Scenario::received_power(int node, std::uint32_t u) const {
    double power = 1.0;
    for (int p = 0; p < pu_count; ++p)
        if ((u >> p & 1) && receivable[node][p])
            power += snr_linear[node][p];
    return noise_var[node] * power;
}

bool Scenario::occupied(int node, std::uint32_t u) const {
    for (int p = 0; p < pu_count; ++p)
        if ((u >> p & 1) && receivable[node][p])
            return true;
    return false;
}

SlotRecord sense_slot(const Scenario& scenario, std::uint32_t u, Rng& rng) {
    const int n = scenario.graph.node_count();
    SlotRecord slot;
    slot.u = u;
    slot.x.resize(n);
    slot.gamma.resize(n);
    for (int j = 0; j < n; ++j) {
        slot.x[j] = scenario.occupied(j, u) ? 1 : 0;
        const double power = scenario.received_power(j, u);
        slot.gamma[j] =
            power * rng.chi_square(scenario.samples_per_slot) / scenario.samples_per_slot;
    }
    return slot;
}

double exact_llr(double energy, double snr, int samples, double noise_var) {
    if (!(snr > 0.0))
        throw std::invalid_argument("exact_llr: snr must be positive");
    if (!(noise_var > 0.0))
        throw std::invalid_argument("exact_llr: noise_var must be positive");
    const double norm_sq = samples * energy;  // |y|^2
    return -0.5 * samples * std::log1p(snr) +
           (snr / (1.0 + snr)) * norm_sq / (2.0 * noise_var);
}

double tau0(double noise_var, int samples, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("tau0: alpha must lie in (0,1)");
    if (samples < 1)
        throw std::invalid_argument("tau0: K must be >= 1");
    return noise_var * (1.0 + std::sqrt(2.0 / samples) * q_inverse(alpha));
}

}  // namespace linbp
