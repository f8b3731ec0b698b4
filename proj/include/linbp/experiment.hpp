#pragma once
// Experiment drivers: config loading, seeded Monte Carlo window generation,
// detector training for every method, ROC / false-alarm-rate sweeps, and
// CSV/JSON emission.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "linbp/blind_adaptation.hpp"
#include "linbp/bp_engine.hpp"
#include "linbp/linear_bp.hpp"
#include "linbp/radio_env.hpp"

namespace linbp {

struct TrainParams {
    int window_T = 2000;
    int kappa_max = 4;
    double eta = 0.5;
    double zeta = 0.4;
    double tau0_alpha = 0.1;
    int iterations = 3;
    bool normalize = true;
    double ridge = 1e-6;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    bool seed_set = false;
    int slots = 20000;
    std::string method = "linear_bp_blind";
    std::vector<double> alpha_grid{0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
    Scenario scenario;
    TrainParams train;
    std::vector<double> zeta_presets{0.2, 0.4, 0.6, 1.0};
    double utrw_rho = std::numeric_limits<double>::quiet_NaN();  // NaN: use optimal EAP
    std::vector<double> reward, cost;  // empty: all ones
    std::vector<double> beta;          // misdetection targets, reported only
    double interference_cap = std::numeric_limits<double>::infinity();
    double far_sweep_zeta = 2.0;
    std::vector<std::string> load_warnings;

    void validate();  // throws ConfigError
};

// The shipped five-node chain with two transmitters (the default scenario).
ExperimentConfig default_config();

ExperimentConfig parse_config(const nlohmann::json& doc, bool strict);
ExperimentConfig load_config(const std::string& path, bool strict = false);

bool is_known_method(const std::string& method);

// ---- window generation -------------------------------------------------

// Deterministic slot windows: the occupancy sequence is one sequential
// substream, each slot's sensing noise its own derived substream, so windows
// with distinct salts never overlap and slot generation is order-free.
std::vector<SlotRecord> make_window(const Scenario& scenario, std::uint64_t seed,
                                    std::uint64_t salt, int slots);

// ---- trained detectors ---------------------------------------------------

struct LocalDetector {
    std::vector<double> tau;
};

// Messages run on noise-floor-centered energies; the false-alarm control
// tau0 is absorbed into the decision threshold (lambda >= tau0 - noise_var).
struct BpDetector {
    FactorGraph graph{1, {}};
    BpVariant variant = BpVariant::plain();
    std::vector<double> shift;      // noise floor per node, subtracted from gamma
    std::vector<double> threshold;  // tau0 - noise floor per node
    int iterations = 3;
};

struct LinearDetector {
    FactorGraph graph{1, {}};
    FusionWeights weights;
    std::vector<double> offset, scale;  // gamma standardization
    int iterations = 3;
};

LocalDetector train_local(const Scenario& scenario, double alpha);
BpDetector train_bp(const Scenario& scenario, const std::vector<SlotRecord>& window,
                    double alpha, double zeta, BpVariant variant, int iterations);
LinearDetector train_linear_oracle(const Scenario& scenario,
                                   const std::vector<SlotRecord>& window, double alpha,
                                   const TrainParams& params);
LinearDetector train_linear_blind(const Scenario& scenario,
                                  const std::vector<SlotRecord>& window, double alpha,
                                  const TrainParams& params,
                                  AdaptationReport* report = nullptr);

std::vector<std::uint8_t> decide(const LocalDetector& d, const std::vector<double>& gamma);
std::vector<std::uint8_t> decide(const BpDetector& d, const std::vector<double>& gamma);
std::vector<std::uint8_t> decide(const LinearDetector& d, const std::vector<double>& gamma);

// Per-node decision statistics (the quantities compared against thresholds
// in decide); used for ROC-point extraction at a fixed false-alarm rate.
std::vector<double> statistics(const LocalDetector& d, const std::vector<double>& gamma);
std::vector<double> statistics(const BpDetector& d, const std::vector<double>& gamma);
std::vector<double> statistics(const LinearDetector& d, const std::vector<double>& gamma);

struct NodeRates {
    long h0_slots = 0, h1_slots = 0, false_alarms = 0, detections = 0;
    double far() const { return h0_slots > 0 ? double(false_alarms) / h0_slots : 0.0; }
    double pd() const { return h1_slots > 0 ? double(detections) / h1_slots : 0.0; }
};

template <class Detector>
std::vector<NodeRates> evaluate(const Scenario& scenario, const Detector& detector,
                                const std::vector<SlotRecord>& slots);

// ---- sweeps --------------------------------------------------------------

struct RocRow {
    std::string method;
    int node = 0;
    double alpha = 0.0, far = 0.0, pd = 0.0;
    int slots = 0;
    std::uint64_t seed = 0;
};

struct FarRow {
    std::string method;
    int node = 0;
    double alpha = 0.0, far = 0.0;
    int slots = 0;
    std::uint64_t seed = 0;
};

std::vector<RocRow> run_roc(const ExperimentConfig& config);
std::vector<FarRow> run_far_sweep(const ExperimentConfig& config);

// Rows of the calibrated method whose rate exceeds alpha + 3 binomial sigma.
std::vector<FarRow> far_band_violations(const std::vector<FarRow>& rows);

nlohmann::json validate_convergence(const ExperimentConfig& config);
nlohmann::json learn_report(const ExperimentConfig& config);
nlohmann::json calibrate_report(const ExperimentConfig& config);

// ---- emission ------------------------------------------------------------

std::string to_csv(const std::vector<RocRow>& rows);
std::string to_csv(const std::vector<FarRow>& rows);
std::string slots_csv(const Scenario& scenario, const std::vector<SlotRecord>& slots);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace linbp
