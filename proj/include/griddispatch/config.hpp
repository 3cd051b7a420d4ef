#pragma once

#include "griddispatch/agent.hpp"
#include "griddispatch/bess.hpp"
#include "griddispatch/env.hpp"
#include "griddispatch/feeder.hpp"
#include "griddispatch/market.hpp"
#include "griddispatch/trainer.hpp"

#include <map>
#include <string>
#include <vector>

namespace griddispatch::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ordered key/value document with [section] headers, quoted strings, bare
// numbers and booleans, and '#' comments. Environment variables of the form
// GRIDDISPATCH_<SECTION>_<KEY> (dots become underscores, uppercase)
// override file values.
class Document {
public:
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;
    };

    static Document parse(const std::string& text);
    static Document load(const std::string& path);
    std::string serialize() const;

    bool has(const std::string& section, const std::string& key) const;
    std::string str(const std::string& section, const std::string& key) const;
    std::string str_or(const std::string& section, const std::string& key,
                       const std::string& dflt) const;
    double num(const std::string& section, const std::string& key) const;
    double num_or(const std::string& section, const std::string& key, double dflt) const;
    long int_or(const std::string& section, const std::string& key, long dflt) const;
    bool flag_or(const std::string& section, const std::string& key, bool dflt) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    std::vector<std::string> section_names_with_prefix(const std::string& prefix) const;

    void apply_env_overrides();

    const std::vector<Section>& sections() const { return sections_; }

private:
    std::vector<Section> sections_;
    Section* find_section(const std::string& name);
    const Section* find_section(const std::string& name) const;
};

enum class RunMode { Csac, CsacSqil, Milp };
const char* mode_name(RunMode m);
RunMode mode_from_string(const std::string& s);

// Typed view of one experiment configuration.
struct RunConfig {
    RunMode mode = RunMode::CsacSqil;
    std::string feeder_path;
    std::string out_dir = "out";
    int threads = 1;
    std::uint64_t seed = 1;

    // scenarios: a CSV path, or synthesis parameters
    std::string scenario_path;
    std::uint64_t scenario_seed = 7;
    int scenario_count = 4;
    int scenario_steps = 2000;
    double step_seconds = 4.0;
    std::uint64_t eval_scenario_seed = 1009;
    int eval_scenario_count = 3;

    market::MarketAccount account;
    double episode_initial_soc = 0.5;
    int episode_steps = 450;

    std::vector<bess::BatterySpec> fleet;

    trainer::TrainConfig train;
    std::string demo_path;      // optional cached demonstrations
    int demo_episodes_per_scenario = 2;

    static RunConfig from_document(const Document& doc);
    Document to_document() const;
    std::uint64_t hash() const;

    grid::Feeder load_feeder() const;
    env::EnvConfig make_env_config(const grid::Feeder& feeder) const;
    std::vector<market::RegulationScenario> make_train_scenarios() const;
    std::vector<market::RegulationScenario> make_eval_scenarios() const;
};

} // namespace griddispatch::config
