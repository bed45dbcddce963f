#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sirlt/families.hpp"

namespace sirlt {

/// Config problem with its location. line = 0 when the file itself is the
/// problem (missing, unreadable) or a required key is absent.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string source, int line, std::string field, const std::string& msg);

    const std::string& source() const { return source_; }
    int line() const { return line_; }
    const std::string& field() const { return field_; }
    /// The message without the location prefix.
    const std::string& message() const { return message_; }

private:
    std::string source_;
    int line_;
    std::string field_;
    std::string message_;
};

/// Flat `key = value` text; `#` starts a comment, blank lines are ignored.
struct RawConfig {
    struct Item {
        std::string key;
        std::string value;
        int line = 0;
    };
    std::string source;
    std::vector<Item> items;

    const Item* find(std::string_view key) const;
};

RawConfig parse_config_text(const std::string& text, const std::string& source = "<string>");
RawConfig load_config_file(const std::string& path);

enum class Mode { LocalTime, ThresholdSweep, OccupationTime, BoundsSuite, ImportanceBattery, Coupling };

Mode parse_mode(const std::string& name);
std::string mode_name(Mode m);

/// alpha_* = 1 / (3 - d/2).
double critical_alpha(int d);

struct ExperimentConfig {
    Mode mode = Mode::LocalTime;
    int d = 2;
    std::uint64_t seed = 1;

    std::string family;  // family kind name
    FamilyParams family_params;

    std::vector<int> k_ladder;
    std::vector<std::int64_t> village_ladder;
    double alpha = 0.5;
    std::vector<double> probe_t;
    std::vector<double> probe_x;  // d coordinates in rescaled space
    double horizon_t = 1.0;       // occupation window t; coupling time cap
    int horizon = 4;              // importance battery generations
    std::vector<std::size_t> replicates;  // one value, or one per ladder level
    std::int64_t mu_mass = 3;     // importance battery: particles at the origin
    int variance_k = 64;          // local_time: level of the variance oracle check

    double se_multiplier = 4.0;
    double suppression_threshold = 5.0;
    double ks_resolution = 0.0;   // 0 = not requested

    double beta = 0.4;
    double gamma = 0.25;
    std::vector<std::string> inequalities;  // bound ids
    std::string bounds_baseline;            // JSON file of baseline constants, optional
    double baseline_tolerance = 1.01;

    std::string out_dir = "out";

    std::size_t replicates_at(std::size_t level) const;
    InitialConfigFamily make_family() const;
};

/// Typed view of a raw config with mode-dependent defaults filled in and
/// every invariant checked (ladders strictly increasing, alpha range, ...).
ExperimentConfig build_config(const RawConfig& raw);
/// Re-checks invariants after programmatic edits (e.g. CLI overrides).
void validate_config(const ExperimentConfig& cfg, const std::string& source = "<config>");

/// Every field, defaults included, as sorted `key = value` lines. Outputs
/// (out_dir) are left out so the text identifies the experiment only.
std::string canonical_config(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(std::string_view text);
/// FNV-1a of canonical_config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace sirlt
