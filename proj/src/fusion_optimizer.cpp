#include "linbp/fusion_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "linbp/errors.hpp"
#include "linbp/math.hpp"

namespace linbp {

namespace {

constexpr double kBoundMargin = 1e-6;  // the bound is a strict inequality

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

void add_ridge(Eigen::MatrixXd& cov, double ridge) {
    const double dim = static_cast<double>(cov.rows());
    const double trace = cov.trace();
    const double amount = ridge * (trace > 0.0 ? trace / dim : 1.0);
    cov.diagonal().array() += amount;
}

const NodeConditional& node_stats(const ConditionalStats& stats, int node) {
    if (node < 0 || node >= static_cast<int>(stats.nodes.size()))
        throw std::invalid_argument("stats: node index out of range");
    return stats.nodes[node];
}

struct MixtureComponent {
    double weight = 0.0;
    double eta = 0.0;
    double sigma = 0.0;
};

// Components of the conditional law of c.gamma given x_node = v. Patterns
// without valid moments borrow the global conditional moments.
std::vector<MixtureComponent> mixture_components(const std::vector<double>& coeffs,
                                                 const ConditionalStats& stats, int node, int v,
                                                 int* pattern_fallbacks) {
    const NodeConditional& ns = node_stats(stats, node);
    if (coeffs.size() != ns.members.size())
        throw std::invalid_argument("mixture: coefficient count does not match fusion members");
    if (ns.count[v] == 0)
        throw NumericalError("mixture: no window samples with label " + std::to_string(v) +
                             " at node " + std::to_string(node));
    const Eigen::VectorXd c = to_eigen(coeffs);
    const double global_eta = c.dot(ns.mean[v]);
    const double global_var = c.dot(ns.cov[v] * c);

    std::vector<MixtureComponent> mix;
    mix.reserve(ns.patterns[v].size());
    for (const auto& [bits, cell] : ns.patterns[v]) {
        (void)bits;
        if (cell.prob <= 0.0)
            continue;
        MixtureComponent mc;
        mc.weight = cell.prob;
        if (cell.moments_valid) {
            mc.eta = c.dot(cell.mean);
            mc.sigma = std::sqrt(std::max(0.0, c.dot(cell.cov * c)));
        } else {
            if (pattern_fallbacks)
                ++*pattern_fallbacks;
            mc.eta = global_eta;
            mc.sigma = std::sqrt(std::max(0.0, global_var));
        }
        if (!(mc.sigma > 0.0))
            throw NumericalError("mixture: zero variance at node " + std::to_string(node));
        mix.push_back(mc);
    }
    if (mix.empty())
        throw NumericalError("mixture: no observed patterns at node " + std::to_string(node));
    return mix;
}

double mixture_exceedance(const std::vector<MixtureComponent>& mix, double tau) {
    double g = 0.0;
    for (const auto& mc : mix)
        g += mc.weight * q_function((tau - mc.eta) / mc.sigma);
    return g;
}

}  // namespace

ConditionalStats estimate_conditional_stats(const std::vector<std::vector<double>>& gamma_window,
                                            const std::vector<std::vector<std::uint8_t>>& labels,
                                            const FactorGraph& graph, double ridge,
                                            PatternScope scope) {
    const int n = graph.node_count();
    const int T = static_cast<int>(gamma_window.size());
    if (T < 2)
        throw std::invalid_argument("estimate_conditional_stats: window must have >= 2 slots");
    if (labels.size() != gamma_window.size())
        throw std::invalid_argument("estimate_conditional_stats: labels/window length mismatch");
    for (int t = 0; t < T; ++t)
        if (static_cast<int>(gamma_window[t].size()) != n ||
            static_cast<int>(labels[t].size()) != n)
            throw std::invalid_argument("estimate_conditional_stats: row width mismatch");
    if (scope == PatternScope::Full && n > 12)
        throw std::invalid_argument("estimate_conditional_stats: full scope limited to 12 nodes");

    ConditionalStats stats;
    stats.window_length = T;
    stats.ridge = ridge;
    stats.scope = scope;
    stats.nodes.resize(n);

    for (int j = 0; j < n; ++j) {
        NodeConditional& ns = stats.nodes[j];
        ns.members.push_back(j);
        for (int k : graph.neighbors(j))
            ns.members.push_back(k);
        if (scope == PatternScope::Neighborhood) {
            ns.pattern_nodes = graph.neighbors(j);
        } else {
            for (int k = 0; k < n; ++k)
                if (k != j)
                    ns.pattern_nodes.push_back(k);
        }
        const int dim = static_cast<int>(ns.members.size());

        for (int v = 0; v < 2; ++v) {
            // first pass: counts, means, pattern counts
            Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
            std::map<std::uint32_t, Eigen::VectorXd> pattern_sum;
            for (int t = 0; t < T; ++t) {
                if (labels[t][j] != v)
                    continue;
                ++ns.count[v];
                Eigen::VectorXd g(dim);
                for (int d = 0; d < dim; ++d)
                    g(d) = gamma_window[t][ns.members[d]];
                sum += g;
                std::uint32_t bits = 0;
                for (std::size_t p = 0; p < ns.pattern_nodes.size(); ++p)
                    if (labels[t][ns.pattern_nodes[p]])
                        bits |= 1u << p;
                auto [it, inserted] = ns.patterns[v].try_emplace(bits);
                PatternCell& cell = it->second;
                if (inserted)
                    cell.mean = Eigen::VectorXd::Zero(dim);
                ++cell.count;
                cell.mean += g;
            }
            ns.insufficient[v] = ns.count[v] < 2;
            if (ns.count[v] == 0)
                continue;
            ns.mean[v] = sum / ns.count[v];
            for (auto& [bits, cell] : ns.patterns[v]) {
                (void)bits;
                cell.prob = static_cast<double>(cell.count) / ns.count[v];
                cell.mean /= cell.count;
            }

            // second pass: covariances (unbiased)
            ns.cov[v] = Eigen::MatrixXd::Zero(dim, dim);
            std::map<std::uint32_t, Eigen::MatrixXd> pattern_cov;
            for (int t = 0; t < T; ++t) {
                if (labels[t][j] != v)
                    continue;
                Eigen::VectorXd g(dim);
                for (int d = 0; d < dim; ++d)
                    g(d) = gamma_window[t][ns.members[d]];
                Eigen::VectorXd dev = g - ns.mean[v];
                ns.cov[v] += dev * dev.transpose();
                std::uint32_t bits = 0;
                for (std::size_t p = 0; p < ns.pattern_nodes.size(); ++p)
                    if (labels[t][ns.pattern_nodes[p]])
                        bits |= 1u << p;
                PatternCell& cell = ns.patterns[v][bits];
                if (cell.count >= 2) {
                    auto [it, inserted] =
                        pattern_cov.try_emplace(bits, Eigen::MatrixXd::Zero(dim, dim));
                    Eigen::VectorXd pdev = g - cell.mean;
                    it->second += pdev * pdev.transpose();
                    (void)inserted;
                }
            }
            if (ns.count[v] >= 2) {
                ns.cov[v] /= (ns.count[v] - 1);
                add_ridge(ns.cov[v], ridge);
            }
            for (auto& [bits, cov] : pattern_cov) {
                PatternCell& cell = ns.patterns[v][bits];
                cell.cov = cov / (cell.count - 1);
                add_ridge(cell.cov, ridge);
                cell.moments_valid = true;
            }
        }
    }
    return stats;
}

double deflection(const std::vector<double>& coeffs, const ConditionalStats& stats, int node) {
    const NodeConditional& ns = node_stats(stats, node);
    if (coeffs.size() != ns.members.size())
        throw std::invalid_argument("deflection: coefficient count mismatch");
    if (ns.count[0] == 0 || ns.count[1] == 0)
        throw NumericalError("deflection: missing conditional moments at node " +
                             std::to_string(node));
    const Eigen::VectorXd c = to_eigen(coeffs);
    const double variance = c.dot(ns.cov[0] * c);
    if (!(variance > 0.0))
        throw NumericalError("deflection: nonpositive variance at node " + std::to_string(node));
    return c.dot(ns.mean[1] - ns.mean[0]) / std::sqrt(variance);
}

std::vector<double> maximize_deflection(const ConditionalStats& stats, int node, double bound) {
    const NodeConditional& ns = node_stats(stats, node);
    if (ns.insufficient[0] || ns.insufficient[1])
        throw NumericalError("maximize_deflection: insufficient window statistics at node " +
                             std::to_string(node));
    if (!(bound > 0.0))
        throw std::invalid_argument("maximize_deflection: bound must be positive");

    const Eigen::VectorXd delta = ns.mean[1] - ns.mean[0];
    if (delta.lpNorm<Eigen::Infinity>() == 0.0)
        throw NumericalError("maximize_deflection: zero information at node " +
                             std::to_string(node));

    Eigen::LLT<Eigen::MatrixXd> llt(ns.cov[0]);
    if (llt.info() != Eigen::Success)
        throw NumericalError("maximize_deflection: singular conditional covariance at node " +
                             std::to_string(node));
    Eigen::VectorXd direction = llt.solve(delta);

    // Positive rescaling only: deflection is invariant, so the maximum is
    // preserved even when the self entry is nonpositive.
    double scale;
    if (direction(0) > 0.0)
        scale = direction(0);
    else
        scale = direction.cwiseAbs().maxCoeff();
    if (!(scale > 0.0))
        throw NumericalError("maximize_deflection: degenerate direction at node " +
                             std::to_string(node));
    direction /= scale;

    if (std::isfinite(bound) && direction.size() > 1) {
        const double worst = direction.tail(direction.size() - 1).cwiseAbs().maxCoeff();
        const double cap = (1.0 - kBoundMargin) * bound;
        if (worst > cap)
            direction *= cap / worst;
    }
    return std::vector<double>(direction.data(), direction.data() + direction.size());
}

double detection_prob(double tau, int v, const std::vector<double>& coeffs,
                      const ConditionalStats& stats, int node, PatternScope mode,
                      int* pattern_fallbacks) {
    if (v != 0 && v != 1)
        throw std::invalid_argument("detection_prob: v must be 0 or 1");
    if (mode != stats.scope)
        throw std::invalid_argument(
            "detection_prob: requested pattern scope does not match the statistics");
    const auto mix = mixture_components(coeffs, stats, node, v, pattern_fallbacks);
    return mixture_exceedance(mix, tau);
}

double threshold_for_alpha(const std::vector<double>& coeffs, const ConditionalStats& stats,
                           int node, double alpha, PatternScope mode, int* pattern_fallbacks) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("threshold_for_alpha: alpha must lie in (0,1)");
    if (mode != stats.scope)
        throw std::invalid_argument(
            "threshold_for_alpha: requested pattern scope does not match the statistics");
    const auto mix = mixture_components(coeffs, stats, node, 0, pattern_fallbacks);

    double eta_lo = mix.front().eta, eta_hi = mix.front().eta, sigma_max = mix.front().sigma;
    for (const auto& mc : mix) {
        eta_lo = std::min(eta_lo, mc.eta);
        eta_hi = std::max(eta_hi, mc.eta);
        sigma_max = std::max(sigma_max, mc.sigma);
    }
    double lo = eta_lo - 10.0 * sigma_max;
    double hi = eta_hi + 10.0 * sigma_max;
    for (int i = 0; i < 60 && mixture_exceedance(mix, lo) < alpha; ++i)
        lo -= (hi - lo);
    for (int i = 0; i < 60 && mixture_exceedance(mix, hi) > alpha; ++i)
        hi += (hi - lo);

    double mid = 0.5 * (lo + hi);
    for (int i = 0; i < 200; ++i) {
        mid = 0.5 * (lo + hi);
        const double g = mixture_exceedance(mix, mid);
        if (std::abs(g - alpha) <= 1e-6)
            break;
        if (g > alpha)
            lo = mid;
        else
            hi = mid;
    }
    return mid;
}

AggregateMetrics aggregate_metrics(const std::vector<double>& pf, const std::vector<double>& pd,
                                   const std::vector<double>& reward,
                                   const std::vector<double>& cost) {
    const std::size_t n = pf.size();
    if (pd.size() != n || reward.size() != n || cost.size() != n)
        throw std::invalid_argument("aggregate_metrics: length mismatch");
    AggregateMetrics metrics;
    metrics.pf = pf;
    metrics.pd = pd;
    metrics.reward = reward;
    metrics.cost = cost;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(pf[i] >= 0.0 && pf[i] <= 1.0) || !(pd[i] >= 0.0 && pd[i] <= 1.0))
            throw std::invalid_argument("aggregate_metrics: probabilities must lie in [0,1]");
        metrics.throughput += reward[i] * (1.0 - pf[i]);
        metrics.interference += cost[i] * (1.0 - pd[i]);
    }
    return metrics;
}

OptimizeResult optimize_network(const ConditionalStats& stats, const FactorGraph& graph,
                                const std::vector<double>& alpha, OptimizeMode mode,
                                const OptimizeOptions& options) {
    const int n = graph.node_count();
    if (static_cast<int>(alpha.size()) != n)
        throw std::invalid_argument("optimize_network: alpha size mismatch");
    if (static_cast<int>(stats.nodes.size()) != n)
        throw std::invalid_argument("optimize_network: stats node count mismatch");

    const double bound = convergence_bound(graph);
    OptimizeResult result{FusionWeights::zeros(graph), {}};
    result.report.nodes.resize(n);
    result.report.alpha_used = alpha;

    // Coefficients first: they do not depend on alpha.
    std::vector<std::vector<double>> coeffs(n);
    for (int j = 0; j < n; ++j) {
        NodeDiagnostics& diag = result.report.nodes[j];
        diag.insufficient = stats.nodes[j].insufficient[0] || stats.nodes[j].insufficient[1];
        try {
            coeffs[j] = maximize_deflection(stats, j, bound);
            diag.deflection = deflection(coeffs[j], stats, j);
        } catch (const NumericalError& err) {
            diag.fallback = true;
            diag.note = err.what();
            coeffs[j].assign(1 + graph.degree(j), 0.0);
            coeffs[j][0] = 1.0;
            const auto& nb = graph.neighbors(j);
            for (std::size_t p = 0; p < nb.size(); ++p)
                coeffs[j][p + 1] = coefficient_from_coupling(graph.coupling(nb[p], j));
        }
        set_node_fusion_vector(graph, result.weights, j, coeffs[j]);
        double worst = 0.0;
        for (std::size_t p = 1; p < coeffs[j].size(); ++p)
            worst = std::max(worst, std::abs(coeffs[j][p]));
        diag.margin = bound - worst;
    }

    const std::vector<double> reward =
        options.reward.empty() ? std::vector<double>(n, 1.0) : options.reward;
    const std::vector<double> cost =
        options.cost.empty() ? std::vector<double>(n, 1.0) : options.cost;

    std::vector<double> alpha_now = alpha;
    for (int round = 0;; ++round) {
        for (int j = 0; j < n; ++j) {
            NodeDiagnostics& diag = result.report.nodes[j];
            try {
                result.weights.thresholds[j] =
                    threshold_for_alpha(coeffs[j], stats, j, alpha_now[j], options.mode,
                                        &diag.pattern_fallbacks);
            } catch (const NumericalError& err) {
                result.weights.thresholds[j] = std::numeric_limits<double>::quiet_NaN();
                if (diag.note.empty())
                    diag.note = err.what();
            }
        }
        if (mode == OptimizeMode::Decentralized)
            break;

        std::vector<double> pf(n, 0.0), pd(n, 0.0);
        for (int j = 0; j < n; ++j) {
            const double tau = result.weights.thresholds[j];
            if (std::isnan(tau))
                continue;
            pf[j] = std::clamp(detection_prob(tau, 0, coeffs[j], stats, j, options.mode), 0.0, 1.0);
            pd[j] = std::clamp(detection_prob(tau, 1, coeffs[j], stats, j, options.mode), 0.0, 1.0);
        }
        result.report.aggregate = aggregate_metrics(pf, pd, reward, cost);
        result.report.alpha_used = alpha_now;
        result.report.tighten_rounds = round;
        if (!options.beta.empty()) {
            result.report.beta_satisfied.assign(n, 0);
            for (int j = 0; j < n; ++j)
                result.report.beta_satisfied[j] =
                    j < static_cast<int>(options.beta.size()) && pd[j] >= options.beta[j];
        }
        if (result.report.aggregate.interference <= options.interference_cap) {
            result.report.feasible = true;
            break;
        }
        if (round >= options.max_tighten_rounds) {
            result.report.feasible = false;
            break;
        }
        for (double& a : alpha_now)
            a *= options.tighten_factor;
    }
    return result;
}

}  // namespace linbp
