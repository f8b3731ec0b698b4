#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "linbp/blind_adaptation.hpp"
#include "linbp/experiment.hpp"

using namespace linbp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::vector<double>> gammas(const std::vector<SlotRecord>& window) {
    std::vector<std::vector<double>> out(window.size());
    for (std::size_t t = 0; t < window.size(); ++t)
        out[t] = window[t].gamma;
    return out;
}

}  // namespace

TEST_CASE("use_bp_coefficient semantics") {
    // eta = inf keeps the reference, eta = 0 keeps the optimizer
    CHECK(use_bp_coefficient(0.3, 0.2, kInf));
    CHECK(use_bp_coefficient(0.0, 0.2, kInf));
    CHECK_FALSE(use_bp_coefficient(0.3, 0.2, 0.0));
    // sign disagreement falls back to the reference
    CHECK(use_bp_coefficient(0.3, -0.2, 0.5));
    // magnitude ratio: reference wins when the optimizer value is starved
    CHECK(use_bp_coefficient(0.4, 0.1, 0.5));        // 0.1 < 0.5*0.4
    CHECK_FALSE(use_bp_coefficient(0.4, 0.3, 0.5));  // 0.3 >= 0.2
    CHECK_FALSE(use_bp_coefficient(0.0, 0.0, 0.5));
}

TEST_CASE("calibrate_threshold: order statistics") {
    SUBCASE("reference fires on half the slots") {
        const std::vector<std::uint8_t> ref{1, 1, 0, 0};
        const std::vector<double> lambda{1.0, 2.0, 3.0, 4.0};
        CHECK(calibrate_threshold(ref, lambda) == doctest::Approx(2.0));
    }
    SUBCASE("sentinels for degenerate references") {
        CHECK(calibrate_threshold({0, 0, 0}, {1.0, 2.0, 3.0}) == kInf);
        CHECK(calibrate_threshold({1, 1, 1}, {1.0, 2.0, 3.0}) == -kInf);
    }
    SUBCASE("empty inputs rejected") {
        CHECK_THROWS_AS(calibrate_threshold({}, {}), std::invalid_argument);
        CHECK_THROWS_AS(calibrate_threshold({1}, {1.0, 2.0}), std::invalid_argument);
    }
    SUBCASE("returns the generalized inverse of the exceedance function") {
        Rng rng(404);
        std::vector<double> lambda(997);
        for (auto& v : lambda)
            v = rng.normal();
        std::vector<std::uint8_t> ref(lambda.size(), 0);
        for (std::size_t i = 0; i < ref.size(); ++i)
            ref[i] = rng.uniform01() < 0.37 ? 1 : 0;
        const double tau = calibrate_threshold(ref, lambda);
        const double target =
            double(std::count(ref.begin(), ref.end(), 1)) / double(ref.size());
        const auto exceed = [&](double t) {
            long count = 0;
            for (double v : lambda)
                count += v > t;
            return double(count) / double(lambda.size());
        };
        CHECK(exceed(tau) <= target);
        // tau is a sample value and the smallest sample meeting the target
        CHECK(std::count(lambda.begin(), lambda.end(), tau) > 0);
        double best_below = -kInf;
        for (double v : lambda)
            if (v < tau)
                best_below = std::max(best_below, v);
        if (std::isfinite(best_below))
            CHECK(exceed(best_below) > target);
    }
}

TEST_CASE("adaptive_linear_bp: deterministic given the window") {
    const ExperimentConfig config = default_config();
    const auto window = make_window(config.scenario, 21, 0, 400);
    AdaptationConfig acfg;
    acfg.kappa_max = 2;
    const auto a = adaptive_linear_bp(gammas(window), config.scenario.noise_var, 100,
                                      config.scenario.graph, acfg);
    const auto b = adaptive_linear_bp(gammas(window), config.scenario.noise_var, 100,
                                      config.scenario.graph, acfg);
    CHECK(a.weights.edge_coeffs == b.weights.edge_coeffs);
    CHECK(a.weights.self_weights == b.weights.self_weights);
    CHECK(a.weights.thresholds == b.weights.thresholds);
}

TEST_CASE("adaptive_linear_bp: eta limits select reference or optimizer exactly") {
    const ExperimentConfig config = default_config();
    const auto window = make_window(config.scenario, 33, 0, 600);
    AdaptationConfig acfg;
    acfg.kappa_max = 2;

    acfg.eta = kInf;
    const auto bp_only = adaptive_linear_bp(gammas(window), config.scenario.noise_var, 100,
                                            config.scenario.graph, acfg);
    FactorGraph learned = config.scenario.graph;
    for (int e = 0; e < learned.edge_count(); ++e) {
        const auto [i, j] = learned.edges()[e];
        learned = set_coupling(learned, i, j, bp_only.report.learned_couplings[e]);
    }
    const FusionWeights reference = FusionWeights::from_couplings(learned);
    CHECK(bp_only.weights.edge_coeffs == reference.edge_coeffs);
    CHECK(bp_only.weights.self_weights == reference.self_weights);

    acfg.eta = 0.0;
    const auto opt_only = adaptive_linear_bp(gammas(window), config.scenario.noise_var, 100,
                                             config.scenario.graph, acfg);
    CHECK(opt_only.weights.edge_coeffs == opt_only.report.optimizer_weights.edge_coeffs);
    CHECK(opt_only.weights.self_weights == opt_only.report.optimizer_weights.self_weights);
}

TEST_CASE("adaptive_linear_bp: single-label nodes are forced to the reference") {
    FactorGraph g = build_graph(2, {{0, 1}});
    g = set_coupling(g, 0, 1, 0.5);
    // node 1 senses a constant value below its threshold: its labels never fire
    std::vector<std::vector<double>> window(300, std::vector<double>{0.0, 0.98});
    Rng rng(8);
    for (auto& row : window)
        row[0] = 1.0 + 0.1 * rng.normal();
    AdaptationConfig acfg;
    acfg.kappa_max = 2;
    const auto result = adaptive_linear_bp(window, {1.0, 1.0}, 100, g, acfg);
    CHECK(result.report.node_forced_fallback[1] == 1);
    const auto c1 = node_fusion_vector(g, result.weights, 1);
    const auto ref = node_fusion_vector(g, result.report.reference_weights, 1);
    CHECK(c1 == ref);
}

TEST_CASE("adaptive_linear_bp: window detection rate does not degrade across passes") {
    const ExperimentConfig config = default_config();
    const auto window = make_window(config.scenario, 46, 0, 2000);
    AdaptationConfig acfg;
    acfg.kappa_max = 4;
    const auto result = adaptive_linear_bp(gammas(window), config.scenario.noise_var, 100,
                                           config.scenario.graph, acfg);
    REQUIRE(result.report.labels_per_kappa.size() >= 2);
    double prev_pd = -1.0;
    for (const auto& labels : result.report.labels_per_kappa) {
        long h1 = 0, detections = 0;
        for (std::size_t t = 0; t < labels.size(); ++t)
            for (std::size_t j = 0; j < labels[t].size(); ++j)
                if (window[t].x[j]) {
                    ++h1;
                    detections += labels[t][j];
                }
        const double pd = double(detections) / double(h1);
        if (prev_pd >= 0.0)
            CHECK(pd >= prev_pd - 0.05);  // Monte Carlo slack
        prev_pd = pd;
    }
}

TEST_CASE("adaptive_linear_bp: high-SNR blind weights approach truth-trained weights") {
    ExperimentConfig config = default_config();
    for (auto& row : config.scenario.snr_db)
        for (auto& v : row)
            v = 10.0;  // every node hears every transmitter
    config.scenario.validate();
    const auto window = make_window(config.scenario, 99, 0, 2000);

    const LinearDetector blind =
        train_linear_blind(config.scenario, window, 0.1, config.train);
    const LinearDetector oracle =
        train_linear_oracle(config.scenario, window, 0.1, config.train);

    // Compare what the weights optimize: per-node deflection on truth-label
    // statistics. A raw coefficient comparison is ill-posed here because the
    // objective is nearly flat in the neighbor entries at this SNR.
    std::vector<std::vector<double>> z(window.size(), std::vector<double>(5));
    std::vector<std::vector<std::uint8_t>> truth(window.size());
    for (std::size_t t = 0; t < window.size(); ++t) {
        truth[t] = window[t].x;
        for (int j = 0; j < 5; ++j)
            z[t][j] = (window[t].gamma[j] - oracle.offset[j]) / oracle.scale[j];
    }
    const auto stats = estimate_conditional_stats(z, truth, config.scenario.graph);
    for (int j = 0; j < 5; ++j) {
        const double blind_d =
            deflection(node_fusion_vector(config.scenario.graph, blind.weights, j), stats, j);
        const double oracle_d =
            deflection(node_fusion_vector(config.scenario.graph, oracle.weights, j), stats, j);
        CHECK(blind_d >= 0.9 * oracle_d);
    }

    // detection at matched false-alarm rate is equally close
    const auto eval = make_window(config.scenario, 100, 1, 20000);
    auto pd_at = [&](const LinearDetector& d) {
        std::vector<double> h0, h1;
        for (const auto& slot : eval) {
            const auto lambda = statistics(d, slot.gamma);
            (slot.x[1] ? h1 : h0).push_back(lambda[1]);
        }
        std::sort(h0.begin(), h0.end());
        const double tau = h0[std::size_t(0.9 * h0.size())];
        long detections = 0;
        for (double v : h1)
            detections += v > tau;
        return double(detections) / double(h1.size());
    };
    CHECK(std::abs(pd_at(blind) - pd_at(oracle)) <= 0.01);
}

TEST_CASE("adaptive_linear_bp: optional early stop halts on stagnant coefficients") {
    const ExperimentConfig config = default_config();
    const auto window = make_window(config.scenario, 55, 0, 400);
    AdaptationConfig acfg;
    acfg.kappa_max = 6;
    acfg.early_stop = true;
    acfg.early_stop_delta = 1e9;  // any delta counts as stagnant
    const auto result = adaptive_linear_bp(gammas(window), config.scenario.noise_var, 100,
                                           config.scenario.graph, acfg);
    CHECK(result.report.passes_run == 1);
}

TEST_CASE("calibrate_threshold: tied sample values") {
    // exceedance of 1.0 is 2/4 = 0.5, matching the reference rate exactly
    CHECK(calibrate_threshold({1, 0, 1, 0}, {1.0, 1.0, 2.0, 2.0}) == doctest::Approx(1.0));
    // a stricter reference pushes the threshold to the upper tie group
    CHECK(calibrate_threshold({1, 0, 0, 0}, {1.0, 1.0, 2.0, 2.0}) == doctest::Approx(2.0));
}
