#include "doctest.h"

#include <cmath>
#include <random>

#include "linbp/errors.hpp"
#include "linbp/experiment.hpp"
#include "linbp/fusion_optimizer.hpp"
#include "linbp/math.hpp"

using namespace linbp;

namespace {

// Hand-built statistics for one isolated node with Gaussian conditionals.
ConditionalStats single_node_stats(double eta0, double sigma0, double eta1, double sigma1) {
    ConditionalStats stats;
    stats.window_length = 1000;
    stats.nodes.resize(1);
    NodeConditional& ns = stats.nodes[0];
    ns.members = {0};
    for (int v = 0; v < 2; ++v) {
        ns.count[v] = 500;
        ns.insufficient[v] = false;
        ns.mean[v] = Eigen::VectorXd::Constant(1, v ? eta1 : eta0);
        ns.cov[v] = Eigen::MatrixXd::Constant(1, 1, v ? sigma1 * sigma1 : sigma0 * sigma0);
        PatternCell cell;
        cell.prob = 1.0;
        cell.count = 500;
        cell.mean = ns.mean[v];
        cell.cov = ns.cov[v];
        cell.moments_valid = true;
        ns.patterns[v][0] = cell;
    }
    return stats;
}

// Stats for the middle node of a 3-chain with explicit moments.
ConditionalStats mid_node_stats(const Eigen::VectorXd& mean0, const Eigen::MatrixXd& cov0,
                                const Eigen::VectorXd& mean1, const Eigen::MatrixXd& cov1) {
    ConditionalStats stats;
    stats.window_length = 1000;
    stats.nodes.resize(3);
    for (int j = 0; j < 3; ++j) {
        NodeConditional& ns = stats.nodes[j];
        ns.members = {j};
        ns.count = {500, 500};
        ns.insufficient = {false, false};
        for (int v = 0; v < 2; ++v) {
            ns.mean[v] = Eigen::VectorXd::Zero(1);
            ns.cov[v] = Eigen::MatrixXd::Identity(1, 1);
        }
    }
    NodeConditional& ns = stats.nodes[1];
    ns.members = {1, 0, 2};
    ns.mean[0] = mean0;
    ns.cov[0] = cov0;
    ns.mean[1] = mean1;
    ns.cov[1] = cov1;
    for (int v = 0; v < 2; ++v) {
        PatternCell cell;
        cell.prob = 1.0;
        cell.count = 500;
        cell.mean = ns.mean[v];
        cell.cov = ns.cov[v];
        cell.moments_valid = true;
        ns.patterns[v][0] = cell;
    }
    return stats;
}

std::vector<std::vector<double>> window_gammas(const std::vector<SlotRecord>& window) {
    std::vector<std::vector<double>> gamma(window.size());
    for (std::size_t t = 0; t < window.size(); ++t)
        gamma[t] = window[t].gamma;
    return gamma;
}

std::vector<std::vector<std::uint8_t>> window_truth(const std::vector<SlotRecord>& window) {
    std::vector<std::vector<std::uint8_t>> labels(window.size());
    for (std::size_t t = 0; t < window.size(); ++t)
        labels[t] = window[t].x;
    return labels;
}

}  // namespace

TEST_CASE("estimate_conditional_stats: truth labels recover chi-square moments") {
    const ExperimentConfig config = default_config();
    const auto window = make_window(config.scenario, 404, 0, 20000);
    const auto stats = estimate_conditional_stats(window_gammas(window), window_truth(window),
                                                  config.scenario.graph);
    for (int j = 0; j < 5; ++j) {
        const NodeConditional& ns = stats.nodes[j];
        REQUIRE_FALSE(ns.insufficient[0]);
        const double band = 3.0 * std::sqrt(2.0 / 100.0 / ns.count[0]);
        CHECK(std::abs(ns.mean[0](0) - 1.0) <= band);
        CHECK(ns.cov[0](0, 0) == doctest::Approx(0.02).epsilon(0.15));
    }
    CHECK(stats.nodes[0].members == std::vector<int>{0, 1});
    CHECK(stats.nodes[1].members == std::vector<int>{1, 0, 2});
    // pattern probabilities sum to one per condition
    for (int v = 0; v < 2; ++v) {
        double total = 0.0;
        for (const auto& [bits, cell] : stats.nodes[1].patterns[v]) {
            (void)bits;
            total += cell.prob;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(stats.nodes[2].count[0] + stats.nodes[2].count[1] == 20000);
}

TEST_CASE("estimate_conditional_stats: constant labels flag a condition insufficient") {
    const FactorGraph g = build_graph(2, {{0, 1}});
    const std::vector<std::vector<double>> gamma{{1.0, 2.0}, {1.1, 2.1}, {0.9, 1.9}};
    const std::vector<std::vector<std::uint8_t>> ones(3, std::vector<std::uint8_t>{1, 1});
    const auto stats = estimate_conditional_stats(gamma, ones, g);
    CHECK(stats.nodes[0].insufficient[0]);
    CHECK_FALSE(stats.nodes[0].insufficient[1]);
}

TEST_CASE("estimate_conditional_stats: independent nodes have vanishing cross-covariance") {
    // two isolated transmitter-free nodes sensing independent noise
    const double nan = std::numeric_limits<double>::quiet_NaN();
    ExperimentConfig config = default_config();
    config.scenario.snr_db = {{-5.0, nan}, {nan, nan}, {nan, -10.0}, {nan, -8.0}, {nan, -5.0}};
    config.scenario.validate();
    const auto window = make_window(config.scenario, 808, 0, 20000);
    // node 1 hears nothing: gamma_1 independent of both neighbors given any labels
    std::vector<std::vector<std::uint8_t>> labels(window.size());
    for (std::size_t t = 0; t < window.size(); ++t)
        labels[t] = window[t].x;
    const auto stats =
        estimate_conditional_stats(window_gammas(window), labels, config.scenario.graph);
    const NodeConditional& ns = stats.nodes[0];  // members {0, 1}
    const double sd0 = std::sqrt(ns.cov[0](0, 0)), sd1 = std::sqrt(ns.cov[0](1, 1));
    const double band = 3.0 * sd0 * sd1 / std::sqrt(double(ns.count[0]));
    CHECK(std::abs(ns.cov[0](0, 1)) <= band);
}

TEST_CASE("deflection") {
    SUBCASE("scalar case") {
        const auto stats = single_node_stats(0.0, 2.0, 1.0, 2.0);
        CHECK(deflection({1.0}, stats, 0) == doctest::Approx(0.5));
    }
    SUBCASE("matches the Rayleigh-quotient optimum") {
        const auto stats = mid_node_stats(Eigen::VectorXd::Zero(3),
                                          Eigen::MatrixXd::Identity(3, 3),
                                          (Eigen::VectorXd(3) << 0.0, 1.0, 2.0).finished(),
                                          Eigen::MatrixXd::Identity(3, 3));
        CHECK(deflection({0.0, 1.0, 2.0}, stats, 1) == doctest::Approx(std::sqrt(5.0)));
    }
    SUBCASE("degree-zero homogeneity") {
        const auto stats = single_node_stats(0.0, 1.0, 2.0, 1.5);
        const double base = deflection({0.7}, stats, 0);
        CHECK(deflection({0.7 * 3.13}, stats, 0) == doctest::Approx(base));
    }
    SUBCASE("zero variance rejected") {
        auto stats = single_node_stats(0.0, 1.0, 1.0, 1.0);
        stats.nodes[0].cov[0](0, 0) = 0.0;
        CHECK_THROWS_AS(deflection({1.0}, stats, 0), NumericalError);
    }
}

TEST_CASE("maximize_deflection: closed form with bound cap") {
    const auto stats = mid_node_stats((Eigen::VectorXd(3) << 0, 0, 0).finished(),
                                      Eigen::MatrixXd::Identity(3, 3),
                                      (Eigen::VectorXd(3) << 1.0, 2.0, 0.0).finished(),
                                      Eigen::MatrixXd::Identity(3, 3));
    const auto c = maximize_deflection(stats, 1, 0.5);
    REQUIRE(c.size() == 3);
    // direction (1,2,0); self-normalized (1,2,0); capped so max neighbor = 0.5(1-eps)
    CHECK(c[0] == doctest::Approx(0.25).epsilon(1e-4));
    CHECK(c[1] == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(c[1] < 0.5);
    CHECK(c[2] == doctest::Approx(0.0));
    CHECK(deflection(c, stats, 1) == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("maximize_deflection: information on one neighbor only") {
    const auto stats = mid_node_stats(Eigen::VectorXd::Zero(3),
                                      Eigen::MatrixXd::Identity(3, 3),
                                      (Eigen::VectorXd(3) << 0.0, 1.5, 0.0).finished(),
                                      Eigen::MatrixXd::Identity(3, 3));
    const auto c = maximize_deflection(stats, 1, 0.5);
    CHECK(c[0] == doctest::Approx(0.0));
    CHECK(std::abs(c[1]) == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(c[2] == doctest::Approx(0.0));
}

TEST_CASE("maximize_deflection: errors") {
    auto stats = single_node_stats(0.0, 1.0, 1.0, 1.0);
    SUBCASE("zero information") {
        stats.nodes[0].mean[1] = stats.nodes[0].mean[0];
        CHECK_THROWS_AS(maximize_deflection(stats, 0, 1.0), NumericalError);
    }
    SUBCASE("insufficient stats") {
        stats.nodes[0].insufficient[1] = true;
        CHECK_THROWS_AS(maximize_deflection(stats, 0, 1.0), NumericalError);
    }
}

TEST_CASE("maximize_deflection: beats a grid search on random two-neighbor instances") {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    const double bound = 0.5;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd a(3, 3);
        for (int i = 0; i < 9; ++i)
            a(i / 3, i % 3) = entry(rng);
        const Eigen::MatrixXd cov0 = a.transpose() * a + 0.5 * Eigen::MatrixXd::Identity(3, 3);
        Eigen::VectorXd delta(3);
        for (int i = 0; i < 3; ++i)
            delta(i) = entry(rng);
        if (delta.lpNorm<Eigen::Infinity>() < 1e-3)
            continue;
        const auto stats =
            mid_node_stats(Eigen::VectorXd::Zero(3), cov0, delta, cov0);
        const auto c = maximize_deflection(stats, 1, bound);
        const double best = deflection(c, stats, 1);
        double grid_best = -1e300;
        for (double c1 = -bound; c1 <= bound + 1e-12; c1 += 0.01)
            for (double c2 = -bound; c2 <= bound + 1e-12; c2 += 0.01)
                grid_best = std::max(grid_best, deflection({1.0, c1, c2}, stats, 1));
        CHECK(best >= grid_best - 1e-3);
    }
}

TEST_CASE("detection_prob: single-node Gaussian") {
    const auto stats = single_node_stats(0.0, 1.0, 2.0, 1.0);
    CHECK(detection_prob(1.64485, 0, {1.0}, stats, 0, PatternScope::Neighborhood) ==
          doctest::Approx(0.05).epsilon(1e-4));
    CHECK(detection_prob(-1e9, 0, {1.0}, stats, 0, PatternScope::Neighborhood) ==
          doctest::Approx(1.0));
    CHECK(detection_prob(1e9, 0, {1.0}, stats, 0, PatternScope::Neighborhood) ==
          doctest::Approx(0.0));
    // strictly decreasing in tau
    double prev = 1.1;
    for (double tau = -3.0; tau <= 3.0; tau += 0.5) {
        const double g = detection_prob(tau, 0, {1.0}, stats, 0, PatternScope::Neighborhood);
        CHECK(g < prev);
        prev = g;
    }
}

TEST_CASE("detection_prob: missing pattern moments fall back to global moments") {
    auto stats = single_node_stats(0.0, 1.0, 2.0, 1.0);
    stats.nodes[0].patterns[0][0].moments_valid = false;
    int fallbacks = 0;
    const double g =
        detection_prob(0.0, 0, {1.0}, stats, 0, PatternScope::Neighborhood, &fallbacks);
    CHECK(g == doctest::Approx(0.5));
    CHECK(fallbacks == 1);
}

TEST_CASE("threshold_for_alpha") {
    SUBCASE("single-pattern Gaussian quantile") {
        const auto stats = single_node_stats(0.0, 1.0, 2.0, 1.0);
        CHECK(threshold_for_alpha({1.0}, stats, 0, 0.05, PatternScope::Neighborhood) ==
              doctest::Approx(1.64485).epsilon(1e-4));
        CHECK(threshold_for_alpha({1.0}, stats, 0, 0.5, PatternScope::Neighborhood) ==
              doctest::Approx(0.0).epsilon(1e-5));
        CHECK_THROWS_AS(threshold_for_alpha({1.0}, stats, 0, 0.0, PatternScope::Neighborhood),
                        std::invalid_argument);
    }
    SUBCASE("two-pattern mixture matches a Monte Carlo quantile") {
        auto stats = single_node_stats(0.0, 1.0, 3.0, 1.0);
        NodeConditional& ns = stats.nodes[0];
        ns.patterns[0].clear();
        for (int b = 0; b < 2; ++b) {
            PatternCell cell;
            cell.prob = 0.5;
            cell.count = 400;
            cell.mean = Eigen::VectorXd::Constant(1, b ? 2.0 : 0.0);
            cell.cov = Eigen::MatrixXd::Identity(1, 1);
            cell.moments_valid = true;
            ns.patterns[0][b] = cell;
        }
        const double tau =
            threshold_for_alpha({1.0}, stats, 0, 0.25, PatternScope::Neighborhood);
        const double g = 0.5 * q_function(tau) + 0.5 * q_function(tau - 2.0);
        CHECK(g == doctest::Approx(0.25).epsilon(1e-5));

        std::mt19937_64 rng(17);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::vector<double> samples(100000);
        for (auto& v : samples)
            v = noise(rng) + ((rng() & 1) ? 2.0 : 0.0);
        std::sort(samples.begin(), samples.end());
        const double mc_quantile = samples[std::size_t(0.75 * samples.size())];
        CHECK(std::abs(tau - mc_quantile) <= 0.02);
    }
}

TEST_CASE("threshold/scale equivariance") {
    const auto stats = mid_node_stats((Eigen::VectorXd(3) << 0.1, -0.2, 0.05).finished(),
                                      (Eigen::MatrixXd(3, 3) << 1.0, 0.2, 0.1, 0.2, 1.5, 0.3,
                                       0.1, 0.3, 2.0)
                                          .finished(),
                                      (Eigen::VectorXd(3) << 1.0, 0.8, 0.6).finished(),
                                      Eigen::MatrixXd::Identity(3, 3));
    const std::vector<double> c{1.0, 0.4, -0.3};
    const double rho = 0.3125;
    std::vector<double> scaled(c);
    for (double& v : scaled)
        v *= rho;
    for (double alpha : {0.05, 0.2, 0.5}) {
        const double tau =
            threshold_for_alpha(c, stats, 1, alpha, PatternScope::Neighborhood);
        for (int v = 0; v < 2; ++v) {
            const double base = detection_prob(tau, v, c, stats, 1, PatternScope::Neighborhood);
            const double moved =
                detection_prob(rho * tau, v, scaled, stats, 1, PatternScope::Neighborhood);
            CHECK(std::abs(base - moved) <= 1e-12);
        }
    }
}

TEST_CASE("ROC monotonicity of the model detector") {
    const auto stats = single_node_stats(0.0, 1.0, 1.5, 1.2);
    double prev_pd = 0.0;
    for (double alpha : {0.05, 0.1, 0.2, 0.3, 0.4}) {
        const double tau =
            threshold_for_alpha({1.0}, stats, 0, alpha, PatternScope::Neighborhood);
        const double pd = detection_prob(tau, 1, {1.0}, stats, 0, PatternScope::Neighborhood);
        CHECK(pd >= prev_pd);
        prev_pd = pd;
    }
}

TEST_CASE("aggregate_metrics") {
    SUBCASE("always alarming kills throughput and interference") {
        const auto m = aggregate_metrics({1, 1}, {1, 1}, {1, 1}, {1, 1});
        CHECK(m.throughput == doctest::Approx(0.0));
        CHECK(m.interference == doctest::Approx(0.0));
    }
    SUBCASE("perfect detection") {
        const auto m = aggregate_metrics({0, 0}, {1, 1}, {1, 2}, {1, 1});
        CHECK(m.throughput == doctest::Approx(3.0));
        CHECK(m.interference == doctest::Approx(0.0));
    }
    SUBCASE("arithmetic") {
        const auto m = aggregate_metrics({0.1, 0.2}, {0.9, 0.8}, {1, 1}, {1, 1});
        CHECK(m.throughput == doctest::Approx(1.7));
        CHECK(m.interference == doctest::Approx(0.3));
    }
    SUBCASE("rejections") {
        CHECK_THROWS_AS(aggregate_metrics({0.1}, {0.9, 0.8}, {1, 1}, {1, 1}),
                        std::invalid_argument);
        CHECK_THROWS_AS(aggregate_metrics({1.2}, {0.9}, {1}, {1}), std::invalid_argument);
    }
}

TEST_CASE("optimize_network: independent nodes reduce to local detection") {
    const FactorGraph g = build_graph(3, {{0, 1}, {1, 2}});
    auto stats = mid_node_stats(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3),
                                (Eigen::VectorXd(3) << 2.0, 0.0, 0.0).finished(),
                                Eigen::MatrixXd::Identity(3, 3));
    // give the outer nodes usable scalar stats as well
    for (int j : {0, 2}) {
        NodeConditional& ns = stats.nodes[j];
        ns.members = j == 0 ? std::vector<int>{0, 1} : std::vector<int>{2, 1};
        for (int v = 0; v < 2; ++v) {
            ns.mean[v] = Eigen::VectorXd::Zero(2);
            ns.cov[v] = Eigen::MatrixXd::Identity(2, 2);
            PatternCell cell;
            cell.prob = 1.0;
            cell.count = 500;
            cell.mean = ns.mean[v];
            cell.cov = ns.cov[v];
            cell.moments_valid = true;
            ns.patterns[v][0] = cell;
        }
        ns.mean[1](0) = 1.0;
    }
    const auto result = optimize_network(stats, g, {0.1, 0.1, 0.1}, OptimizeMode::Decentralized);
    const auto c1 = node_fusion_vector(g, result.weights, 1);
    CHECK(c1[0] == doctest::Approx(1.0));
    CHECK(c1[1] == doctest::Approx(0.0));
    CHECK(c1[2] == doctest::Approx(0.0));
    CHECK_FALSE(result.report.nodes[1].fallback);
}

TEST_CASE("optimize_network: symmetric twins get equal coefficients") {
    const FactorGraph g = build_graph(3, {{0, 1}, {1, 2}});
    const Eigen::MatrixXd cov =
        (Eigen::MatrixXd(3, 3) << 1.0, 0.3, 0.3, 0.3, 1.0, 0.5, 0.3, 0.5, 1.0).finished();
    auto stats = mid_node_stats(Eigen::VectorXd::Zero(3), cov,
                                (Eigen::VectorXd(3) << 1.0, 0.8, 0.8).finished(), cov);
    const auto c = maximize_deflection(stats, 1, 0.9);
    CHECK(c[1] == doctest::Approx(c[2]).epsilon(1e-9));
}

TEST_CASE("optimize_network: fallback nodes revert to coupling-derived weights") {
    FactorGraph g = build_graph(2, {{0, 1}});
    g = set_coupling(g, 0, 1, 0.8);
    // insufficient stats everywhere: one label value only
    const std::vector<std::vector<double>> gamma{{1.0, 2.0}, {1.1, 2.1}, {0.9, 1.9}};
    const std::vector<std::vector<std::uint8_t>> ones(3, std::vector<std::uint8_t>{1, 1});
    const auto stats = estimate_conditional_stats(gamma, ones, g);
    const auto result = optimize_network(stats, g, {0.1, 0.1}, OptimizeMode::Decentralized);
    CHECK(result.report.nodes[0].fallback);
    const auto c0 = node_fusion_vector(g, result.weights, 0);
    CHECK(c0[0] == 1.0);
    CHECK(c0[1] == coefficient_from_coupling(0.8));
    CHECK(std::isnan(result.weights.thresholds[0]));
}

TEST_CASE("optimize_network: centralized mode reports aggregate metrics") {
    const auto statsbase = single_node_stats(0.0, 1.0, 2.0, 1.0);
    const FactorGraph g = build_graph(1, {});
    OptimizeOptions options;
    options.interference_cap = std::numeric_limits<double>::infinity();
    const auto result =
        optimize_network(statsbase, g, {0.1}, OptimizeMode::Centralized, options);
    CHECK(result.report.feasible);
    CHECK(result.report.aggregate.pf[0] == doctest::Approx(0.1).epsilon(1e-3));
    CHECK(result.report.aggregate.throughput == doctest::Approx(0.9).epsilon(1e-3));

    // an unmeetable interference cap tightens alpha and reports infeasible
    OptimizeOptions tight = options;
    tight.interference_cap = 1e-6;
    const auto infeasible =
        optimize_network(statsbase, g, {0.1}, OptimizeMode::Centralized, tight);
    CHECK_FALSE(infeasible.report.feasible);
    CHECK(infeasible.report.tighten_rounds == 10);
    CHECK(infeasible.report.alpha_used[0] < 0.1);
}

TEST_CASE("full pattern scope conditions on every other node") {
    const ExperimentConfig config = default_config();
    const auto window = make_window(config.scenario, 606, 0, 4000);
    const auto stats =
        estimate_conditional_stats(window_gammas(window), window_truth(window),
                                   config.scenario.graph, 1e-6, PatternScope::Full);
    CHECK(stats.nodes[0].pattern_nodes == std::vector<int>{1, 2, 3, 4});
    const std::vector<double> c{1.0, 0.3};
    const double g_full =
        detection_prob(1.0, 0, c, stats, 0, PatternScope::Full);
    CHECK(g_full >= 0.0);
    CHECK(g_full <= 1.0);
    // requesting the wrong scope is rejected
    CHECK_THROWS_AS(detection_prob(1.0, 0, c, stats, 0, PatternScope::Neighborhood),
                    std::invalid_argument);
    // full scope is limited to small networks
    const FactorGraph big = build_graph(13, {{0, 1}});
    const std::vector<std::vector<double>> gamma(4, std::vector<double>(13, 1.0));
    const std::vector<std::vector<std::uint8_t>> labels(4, std::vector<std::uint8_t>(13, 0));
    CHECK_THROWS_AS(estimate_conditional_stats(gamma, labels, big, 1e-6, PatternScope::Full),
                    std::invalid_argument);
}

TEST_CASE("detection_prob orders the two conditions by their means") {
    const auto stats = single_node_stats(0.0, 1.0, 2.0, 1.0);
    for (double tau : {-1.0, 0.5, 1.5, 3.0})
        CHECK(detection_prob(tau, 1, {1.0}, stats, 0, PatternScope::Neighborhood) >
              detection_prob(tau, 0, {1.0}, stats, 0, PatternScope::Neighborhood));
}

TEST_CASE("optimize_network reports misdetection targets without enforcing them") {
    const auto stats = single_node_stats(0.0, 1.0, 2.0, 1.0);
    const FactorGraph g = build_graph(1, {});
    OptimizeOptions options;
    options.beta = {0.99};  // unreachable at alpha = 0.1: reported false, no retry
    const auto result = optimize_network(stats, g, {0.1}, OptimizeMode::Centralized, options);
    REQUIRE(result.report.beta_satisfied.size() == 1);
    CHECK(result.report.beta_satisfied[0] == 0);
    CHECK(result.report.feasible);
    options.beta = {0.2};
    const auto ok = optimize_network(stats, g, {0.1}, OptimizeMode::Centralized, options);
    CHECK(ok.report.beta_satisfied[0] == 1);
}

TEST_CASE("maximize_deflection direction is invariant to joint standardization rescaling") {
    const Eigen::MatrixXd cov =
        (Eigen::MatrixXd(3, 3) << 1.0, 0.2, 0.1, 0.2, 1.3, 0.4, 0.1, 0.4, 0.9).finished();
    const Eigen::VectorXd delta = (Eigen::VectorXd(3) << 0.6, 1.1, -0.4).finished();
    auto base_stats = mid_node_stats(Eigen::VectorXd::Zero(3), cov, delta, cov);
    const double s = 3.7;  // rescale gamma by s: means scale by s, covariances by s^2
    auto scaled_stats = mid_node_stats(Eigen::VectorXd::Zero(3), s * s * cov, s * delta,
                                       s * s * cov);
    const auto a = maximize_deflection(base_stats, 1, 0.5);
    const auto b = maximize_deflection(scaled_stats, 1, 0.5);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
}
